#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sleuth {

std::string trim(std::string_view s);

/// Collapses every run of whitespace (including newlines) into one space and trims.
std::string collapse_whitespace(std::string_view s);

std::string ascii_lower(std::string_view s);

/// Case-folded, whitespace-collapsed form used for equality of free text.
std::string normalize_for_compare(std::string_view s);

/// Longest prefix of `s` that is at most `max_bytes` long and does not split
/// a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

/// Replaces every occurrence of `{name}` for the given names. Braces that do
/// not form a known placeholder are left alone, so templates may embed JSON.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values);

/// Cleans up the gaps left after cutting spans out of prose: empty
/// brackets, doubled spaces and spaces before punctuation. Trims the result.
std::string tidy_after_removal(std::string text);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Appends one line and flushes; used by the append-only logs.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace sleuth
