#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sleuth {

struct ParsedUrl {
    std::string scheme;
    std::string host;
    std::string port;
    std::string path;
    std::string query;     // without leading '?'
    std::string fragment;  // without leading '#'
};

/// Parses absolute http(s) URLs. Anything else yields nullopt.
std::optional<ParsedUrl> parse_url(std::string_view text);

bool is_valid_url(std::string_view text);

/// Dedup key for evidence and citation matching:
///   - scheme and host lower-cased, default port dropped
///   - fragment dropped
///   - utm_* and click-id tracking parameters dropped
///   - trailing slash on the path dropped
/// Invalid input is returned trimmed and lower-cased so it still compares.
std::string normalize_url(std::string_view url);

struct UrlMatch {
    std::size_t position = 0;
    std::size_t length = 0;
};

/// Finds URL-like spans: scheme URLs, `www.` hosts, and bare hosts with a
/// common TLD (optionally followed by a path). Trailing sentence punctuation
/// is not part of a match.
std::vector<UrlMatch> find_url_spans(std::string_view text);

/// Convenience over `find_url_spans` returning the matched text.
std::vector<std::string> find_urls(std::string_view text);

/// Percent-encodes a query component (RFC 3986 unreserved set kept as is).
std::string url_encode(std::string_view text);

}  // namespace sleuth
