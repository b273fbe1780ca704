#include "sleuth/llm/model.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"

namespace sleuth::llm {

void ModelConfig::validate() const {
    if (temperature < 0.0 || temperature > 2.0) {
        throw PreconditionError(fmt::format("temperature {} outside [0, 2]", temperature));
    }
    if (request_timeout.count() <= 0) throw PreconditionError("request timeout must be positive");
    if (max_output_tokens <= 0) throw PreconditionError("max_output_tokens must be positive");
}

ModelConfig factual_config(ModelConfig base) {
    base.temperature = 0.2;
    return base;
}

ModelConfig stylistic_config(ModelConfig base) {
    base.temperature = 0.7;
    return base;
}

nlohmann::json to_json(const CompletionRecord& r) {
    return {
        {"prompt_hash", r.prompt_hash},
        {"response", r.response},
        {"latency_ms", r.latency_ms},
        {"prompt_tokens", r.tokens.prompt},
        {"output_tokens", r.tokens.output},
        {"timestamp", format_iso8601(r.timestamp)},
    };
}

CompletionRecord completion_record_from_json(const nlohmann::json& j) {
    CompletionRecord r;
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.tokens.prompt = j.value("prompt_tokens", std::int64_t{0});
    r.tokens.output = j.value("output_tokens", std::int64_t{0});
    if (auto ts = parse_iso8601(j.value("timestamp", std::string{}))) r.timestamp = *ts;
    return r;
}

std::optional<std::string> extract_json_document(std::string_view reply) {
    std::string_view body = reply;
    if (const auto fence = body.find("```"); fence != std::string_view::npos) {
        auto content_start = body.find('\n', fence);
        if (content_start != std::string_view::npos) {
            ++content_start;
            const auto fence_end = body.find("```", content_start);
            body = body.substr(content_start, fence_end == std::string_view::npos ? std::string_view::npos
                                                                                   : fence_end - content_start);
        }
    }
    const auto start = body.find_first_of("{[");
    if (start == std::string_view::npos) return std::nullopt;
    const char open = body[start];
    const char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < body.size(); ++i) {
        const char c = body[i];
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
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            if (--depth == 0) return std::string(body.substr(start, i - start + 1));
        }
    }
    return std::nullopt;
}

nlohmann::json structured_completion(const std::function<std::string(const std::string&)>& complete,
                                     const std::string& prompt, const DocumentSchema& schema,
                                     int attempt_budget) {
    if (attempt_budget < 1) throw PreconditionError("attempt budget must be at least 1");
    std::string current_prompt = prompt;
    std::optional<SchemaViolation> last_error;
    for (int attempt = 1; attempt <= attempt_budget; ++attempt) {
        const std::string reply = complete(current_prompt);
        try {
            const auto document = extract_json_document(reply);
            if (!document) throw SchemaViolation("$", "response contains no JSON document");
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(*document);
            } catch (const nlohmann::json::parse_error& e) {
                throw SchemaViolation("$", std::string("invalid JSON: ") + e.what());
            }
            schema.validate(parsed);
            return parsed;
        } catch (const SchemaViolation& violation) {
            spdlog::warn("{}: attempt {}/{} rejected: {}", schema.name, attempt, attempt_budget, violation.what());
            last_error = violation;
            current_prompt = fmt::format(
                "{}\n\nYour previous response was rejected by the validator: {}\n"
                "Respond again with only the corrected JSON document and no other text.",
                prompt, violation.what());
        }
    }
    throw *last_error;
}

nlohmann::json LanguageModel::complete_structured(const std::string& prompt, const DocumentSchema& schema,
                                                  const ModelConfig& config, int attempt_budget) {
    return structured_completion([&](const std::string& p) { return complete(p, config); }, prompt, schema,
                                 attempt_budget);
}

}  // namespace sleuth::llm
