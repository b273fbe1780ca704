#include "sleuth/common/url.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

namespace sleuth {
namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool valid_host(std::string_view host) {
    if (host.empty() || host.front() == '.' || host.back() == '.') return false;
    if (host.front() == '[') return host.back() == ']' && host.size() > 2;
    return std::all_of(host.begin(), host.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c >= 0x80;
    });
}

bool is_tracking_param(std::string_view name) {
    static constexpr std::array<std::string_view, 6> kClickIds = {"fbclid", "gclid", "dclid",
                                                                  "msclkid", "mc_eid", "igshid"};
    const std::string lower = to_lower(name);
    if (lower.rfind("utm_", 0) == 0) return true;
    return std::find(kClickIds.begin(), kClickIds.end(), lower) != kClickIds.end();
}

}  // namespace

std::optional<ParsedUrl> parse_url(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

    const auto scheme_end = text.find("://");
    if (scheme_end == std::string_view::npos) return std::nullopt;
    ParsedUrl url;
    url.scheme = to_lower(text.substr(0, scheme_end));
    if (url.scheme != "http" && url.scheme != "https") return std::nullopt;

    std::string_view rest = text.substr(scheme_end + 3);
    if (std::any_of(rest.begin(), rest.end(), [](unsigned char c) { return std::isspace(c); })) {
        return std::nullopt;
    }
    const auto authority_end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, authority_end);
    rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    std::string_view host = authority;
    if (const auto colon = authority.rfind(':');
        colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        host = authority.substr(0, colon);
        url.port = std::string(authority.substr(colon + 1));
        if (url.port.empty() ||
            !std::all_of(url.port.begin(), url.port.end(), [](unsigned char c) { return std::isdigit(c); })) {
            return std::nullopt;
        }
    }
    if (!valid_host(host)) return std::nullopt;
    url.host = std::string(host);

    if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
        url.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    if (const auto q = rest.find('?'); q != std::string_view::npos) {
        url.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    url.path = std::string(rest);
    return url;
}

bool is_valid_url(std::string_view text) { return parse_url(text).has_value(); }

std::string normalize_url(std::string_view raw) {
    auto parsed = parse_url(raw);
    if (!parsed) {
        std::string fallback = to_lower(raw);
        fallback.erase(0, fallback.find_first_not_of(" \t\r\n"));
        fallback.erase(fallback.find_last_not_of(" \t\r\n") + 1);
        return fallback;
    }
    ParsedUrl& url = *parsed;
    std::string out = url.scheme + "://" + to_lower(url.host);
    const bool default_port = (url.scheme == "http" && url.port == "80") ||
                              (url.scheme == "https" && url.port == "443");
    if (!url.port.empty() && !default_port) out += ":" + url.port;

    std::string path = url.path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    out += path;

    std::string query;
    std::string_view q = url.query;
    while (!q.empty()) {
        const auto amp = q.find('&');
        const std::string_view param = q.substr(0, amp);
        q = amp == std::string_view::npos ? std::string_view{} : q.substr(amp + 1);
        if (param.empty()) continue;
        if (is_tracking_param(param.substr(0, param.find('=')))) continue;
        if (!query.empty()) query += '&';
        query += param;
    }
    if (!query.empty()) out += "?" + query;
    return out;
}

std::vector<UrlMatch> find_url_spans(std::string_view text) {
    static const std::regex kPattern(
        R"((?:https?://[^\s<>"'`]+)|(?:\bwww\.[a-z0-9-]+(?:\.[a-z0-9-]+)+[^\s<>"'`]*)|(?:\b[a-z0-9][a-z0-9-]*(?:\.[a-z0-9-]+)*\.(?:com|org|net|edu|gov|io|co|uk|info|be|ly|me|tv|news)\b(?:/[^\s<>"'`]*)?))",
        std::regex::icase);

    std::vector<UrlMatch> matches;
    const std::string haystack(text);
    for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), kPattern);
         it != std::sregex_iterator(); ++it) {
        std::size_t pos = static_cast<std::size_t>(it->position());
        std::size_t len = static_cast<std::size_t>(it->length());
        // Bare-host alternatives must not be the tail of an e-mail address.
        if (pos > 0 && haystack[pos - 1] == '@') continue;
        while (len > 0) {
            const char c = haystack[pos + len - 1];
            if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' ||
                c == '"') {
                --len;
            } else if (c == ')' || c == ']') {
                const char open = c == ')' ? '(' : '[';
                const std::string_view span(haystack.data() + pos, len);
                if (std::count(span.begin(), span.end(), open) < std::count(span.begin(), span.end(), c)) {
                    --len;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        if (len > 0) matches.push_back({pos, len});
    }
    return matches;
}

std::vector<std::string> find_urls(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& m : find_url_spans(text)) out.emplace_back(text.substr(m.position, m.length));
    return out;
}

std::string url_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size() * 3);
    for (const unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 0x0F];
        }
    }
    return out;
}

}  // namespace sleuth
