#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/benchmark/benchmark.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::benchmark {
namespace {

struct RawElement {
    std::size_t line = 0;
    std::string text;
};

/// Splits a top-level JSON array into its elements, remembering the line each
/// element starts on, so per-record errors can name a line.
std::vector<RawElement> split_json_array(const std::string& content) {
    std::vector<RawElement> out;
    std::size_t line = 1;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t element_start = std::string::npos;
    std::size_t element_line = 0;
    const auto begin_element = [&](std::size_t i) {
        if (depth == 1 && element_start == std::string::npos) {
            element_start = i;
            element_line = line;
        }
    };
    const auto end_element = [&](std::size_t i, bool required) {
        if (element_start != std::string::npos) {
            out.push_back({element_line, trim(content.substr(element_start, i - element_start))});
            element_start = std::string::npos;
        } else if (required) {
            throw ParseError("empty element in JSON array", line);
        }
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (c == '\n') ++line;
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            begin_element(i);
            in_string = true;
        } else if (c == '[' || c == '{') {
            if (depth > 0) begin_element(i);
            ++depth;
        } else if (c == ']' || c == '}') {
            if (--depth < 0) throw ParseError("unbalanced JSON array", line);
            if (depth == 0) end_element(i, false);
        } else if (c == ',' && depth == 1) {
            end_element(i, true);
        } else if (depth >= 1 && !std::isspace(static_cast<unsigned char>(c))) {
            begin_element(i);
        }
    }
    if (depth != 0 || in_string) throw ParseError("unterminated JSON array", line);
    return out;
}

std::vector<RawElement> split_records(const std::string& content) {
    const auto first = content.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (first != std::string::npos && content[first] == '[') return split_json_array(content);
    std::vector<RawElement> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const auto end = std::min(content.find('\n', pos), content.size());
        ++line_no;
        std::string line = trim(std::string_view(content).substr(pos, end - pos));
        if (!line.empty()) out.push_back({line_no, std::move(line)});
        if (end == content.size()) break;
        pos = end + 1;
    }
    return out;
}

enum class LabelClass { Supports, Refutes, Dropped, Unknown };

using LabelMapper = LabelClass (*)(const std::string& label);

LabelClass fever_label(const std::string& raw) {
    const std::string label = ascii_lower(trim(raw));
    if (label == "supports" || label == "supported") return LabelClass::Supports;
    if (label == "refutes" || label == "refuted") return LabelClass::Refutes;
    if (label == "not enough info") return LabelClass::Dropped;
    return LabelClass::Unknown;
}

LabelClass averitec_label(const std::string& raw) {
    const std::string label = ascii_lower(trim(raw));
    if (label == "supported" || label == "supports") return LabelClass::Supports;
    if (label == "refuted" || label == "refutes") return LabelClass::Refutes;
    if (label == "not enough evidence" || label == "conflicting evidence/cherrypicking") return LabelClass::Dropped;
    return LabelClass::Unknown;
}

std::vector<BenchmarkRecord> load_dataset(const std::filesystem::path& path, int n, std::uint64_t seed,
                                          Dataset dataset, LabelMapper mapper) {
    if (n < 0) throw PreconditionError("sample size must be >= 0");
    if (!std::filesystem::is_regular_file(path)) throw IoError("dataset file not found: " + path.string());
    const std::string content = read_file(path);

    std::vector<BenchmarkRecord> eligible;
    for (const auto& element : split_records(content)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(element.text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()), element.line);
        }
        if (!j.is_object()) throw ParseError(path.string() + ": record is not an object", element.line);
        const auto claim = j.find("claim");
        const auto label = j.find("label");
        if (claim == j.end() || !claim->is_string() || trim(claim->get<std::string>()).empty()) {
            throw ParseError(path.string() + ": record has no claim text", element.line);
        }
        if (label == j.end() || !label->is_string()) {
            throw ParseError(path.string() + ": record has no label", element.line);
        }
        const LabelClass cls = mapper(label->get<std::string>());
        if (cls == LabelClass::Unknown) {
            throw ParseError(fmt::format("{}: unknown label '{}'", path.string(), label->get<std::string>()),
                             element.line);
        }
        if (cls == LabelClass::Dropped) continue;
        eligible.push_back({dataset, trim(claim->get<std::string>()),
                            cls == LabelClass::Supports ? Stance::Supports : Stance::Refutes, element.line});
    }

    const auto wanted = static_cast<std::size_t>(n);
    if (wanted > eligible.size()) {
        spdlog::warn("{}: asked for {} records, only {} eligible", path.string(), wanted, eligible.size());
    }
    std::vector<BenchmarkRecord> out;
    for (std::size_t i : sample_indices(eligible.size(), std::min(wanted, eligible.size()), seed)) {
        out.push_back(eligible[i]);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
    if (n > population) throw PreconditionError("sample larger than population");
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<BenchmarkRecord> load_fever(const std::filesystem::path& path, int n, std::uint64_t seed) {
    return load_dataset(path, n, seed, Dataset::Fever, fever_label);
}

std::vector<BenchmarkRecord> load_averitec(const std::filesystem::path& path, int n, std::uint64_t seed) {
    return load_dataset(path, n, seed, Dataset::Averitec, averitec_label);
}

}  // namespace sleuth::benchmark
