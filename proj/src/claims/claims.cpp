#include "sleuth/claims/claims.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <map>
#include <set>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::claims {
namespace {

std::string question_text(const nlohmann::json& q, const std::string& path) {
    std::string text;
    if (q.is_string()) {
        text = q.get<std::string>();
    } else if (q.is_object() && q.contains("text") && q["text"].is_string()) {
        text = q["text"].get<std::string>();
    } else {
        throw SchemaViolation(path, "question must be a string or an object with a string 'text'");
    }
    text = trim(text);
    if (text.empty()) throw SchemaViolation(path, "question text is empty");
    return text;
}

}  // namespace

ClaimSet ClaimSet::create(std::string video_id, std::vector<Claim> claims, std::vector<VerifiableQuestion> questions) {
    std::set<int> claim_ids;
    int previous = 0;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const auto& c = claims[i];
        const std::string path = fmt::format("claims[{}]", i);
        if (c.id <= 0) throw SchemaViolation(path + ".id", "claim id must be a positive integer");
        if (i > 0 && c.id <= previous) throw SchemaViolation(path + ".id", "claim ids must be unique and increasing");
        if (trim(c.text).empty()) throw SchemaViolation(path + ".text", "claim text is empty");
        previous = c.id;
        claim_ids.insert(c.id);
    }
    std::set<int> question_ids;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const std::string path = fmt::format("questions[{}]", i);
        if (!question_ids.insert(q.id).second) throw SchemaViolation(path + ".id", "duplicate question id");
        if (!claim_ids.count(q.claim_id)) {
            throw SchemaViolation(path + ".claim_id",
                                  fmt::format("question \"{}\" refers to unknown claim {}", q.text, q.claim_id));
        }
        const std::string text = trim(q.text);
        if (text.empty() || text.back() != '?') {
            throw SchemaViolation(path + ".text", fmt::format("question \"{}\" must end with '?'", q.text));
        }
    }
    ClaimSet set;
    set.video_id_ = std::move(video_id);
    set.claims_ = std::move(claims);
    set.questions_ = std::move(questions);
    return set;
}

std::vector<VerifiableQuestion> ClaimSet::questions_for(int claim_id) const {
    std::vector<VerifiableQuestion> out;
    for (const auto& q : questions_) {
        if (q.claim_id == claim_id) out.push_back(q);
    }
    return out;
}

nlohmann::json to_document(const ClaimSet& set) {
    nlohmann::json claims = nlohmann::json::array();
    for (const auto& c : set.claims()) {
        nlohmann::json questions = nlohmann::json::array();
        for (const auto& q : set.questions_for(c.id)) questions.push_back({{"id", q.id}, {"text", q.text}});
        nlohmann::json entry = {{"id", c.id}, {"text", c.text}, {"questions", std::move(questions)}};
        if (c.transcript_anchor) entry["anchor"] = *c.transcript_anchor;
        claims.push_back(std::move(entry));
    }
    return {{"schema_version", kClaimDocumentVersion}, {"video_id", set.video_id()}, {"claims", std::move(claims)}};
}

ClaimSet claim_set_from_json(const nlohmann::json& doc, std::size_t min_claims) {
    if (!doc.is_object()) throw SchemaViolation("$", "document must be an object");
    if (doc.contains("schema_version") && doc["schema_version"] != kClaimDocumentVersion) {
        throw SchemaViolation("schema_version", "unsupported schema version " + doc["schema_version"].dump());
    }
    const auto claims_it = doc.find("claims");
    if (claims_it == doc.end() || !claims_it->is_array()) throw SchemaViolation("claims", "missing 'claims' array");
    if (claims_it->size() < min_claims) {
        throw SchemaViolation("claims", fmt::format("expected at least {} claim(s)", min_claims));
    }

    std::vector<Claim> claims;
    std::map<int, std::vector<std::string>> texts_by_claim;
    for (std::size_t i = 0; i < claims_it->size(); ++i) {
        const auto& entry = (*claims_it)[i];
        const std::string path = fmt::format("claims[{}]", i);
        if (!entry.is_object()) throw SchemaViolation(path, "claim must be an object");
        if (!entry.contains("id") || !entry["id"].is_number_integer()) {
            throw SchemaViolation(path + ".id", "missing integer 'id'");
        }
        if (!entry.contains("text") || !entry["text"].is_string()) {
            throw SchemaViolation(path + ".text", "missing string 'text'");
        }
        Claim claim{entry["id"].get<int>(), trim(entry["text"].get<std::string>()), std::nullopt};
        for (const char* key : {"anchor", "transcript_anchor"}) {
            if (entry.contains(key) && entry[key].is_string() && !trim(entry[key].get<std::string>()).empty()) {
                claim.transcript_anchor = trim(entry[key].get<std::string>());
            }
        }
        if (entry.contains("questions")) {
            if (!entry["questions"].is_array()) throw SchemaViolation(path + ".questions", "must be an array");
            for (std::size_t j = 0; j < entry["questions"].size(); ++j) {
                texts_by_claim[claim.id].push_back(
                    question_text(entry["questions"][j], fmt::format("{}.questions[{}]", path, j)));
            }
        }
        claims.push_back(std::move(claim));
    }

    std::set<int> known;
    for (const auto& c : claims) known.insert(c.id);
    if (const auto top = doc.find("questions"); top != doc.end()) {
        if (!top->is_array()) throw SchemaViolation("questions", "must be an array");
        for (std::size_t j = 0; j < top->size(); ++j) {
            const auto& q = (*top)[j];
            const std::string path = fmt::format("questions[{}]", j);
            const std::string text = question_text(q, path);
            if (!q.is_object() || !q.contains("claim_id") || !q["claim_id"].is_number_integer()) {
                throw SchemaViolation(path + ".claim_id", fmt::format("question \"{}\" has no parent claim_id", text));
            }
            const int parent = q["claim_id"].get<int>();
            if (!known.count(parent)) {
                throw SchemaViolation(path + ".claim_id",
                                      fmt::format("question \"{}\" refers to unknown claim {}", text, parent));
            }
            texts_by_claim[parent].push_back(text);
        }
    }

    std::vector<VerifiableQuestion> questions;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const auto& texts = texts_by_claim[claims[i].id];
        if (texts.empty()) {
            throw SchemaViolation(fmt::format("claims[{}].questions", i), "claim has no questions");
        }
        for (const auto& t : texts) {
            questions.push_back({static_cast<int>(questions.size()) + 1, claims[i].id, t});
        }
    }
    return ClaimSet::create(doc.value("video_id", std::string{}), std::move(claims), std::move(questions));
}

ClaimSet validate_claim_document(std::string_view raw) {
    nlohmann::json parsed = nlohmann::json::parse(raw, nullptr, false);
    if (parsed.is_discarded()) {
        const auto extracted = llm::extract_json_document(raw);
        if (!extracted) throw SchemaViolation("$", "no JSON document found");
        parsed = nlohmann::json::parse(*extracted, nullptr, false);
        if (parsed.is_discarded()) throw SchemaViolation("$", "embedded document is not valid JSON");
    }
    return claim_set_from_json(parsed);
}

ClaimSet dedupe_claims(const ClaimSet& set) {
    std::map<std::string, int> first_by_text;
    std::map<int, int> parent_of;  // claim id -> surviving claim id
    std::vector<Claim> kept;
    for (const auto& c : set.claims()) {
        const std::string key = normalize_for_compare(c.text);
        const auto [it, inserted] = first_by_text.emplace(key, c.id);
        parent_of[c.id] = it->second;
        if (inserted) kept.push_back(c);
    }
    if (kept.size() == set.claims().size()) return set;

    std::vector<VerifiableQuestion> questions;
    for (const auto& c : kept) {
        std::set<std::string> seen;
        for (const auto& q : set.questions()) {
            if (parent_of.at(q.claim_id) != c.id) continue;
            if (!seen.insert(normalize_for_compare(q.text)).second) continue;
            questions.push_back({q.id, c.id, q.text});
        }
    }
    return ClaimSet::create(set.video_id(), std::move(kept), std::move(questions));
}

std::string extraction_prompt(const ingest::Transcript& transcript, const ingest::VideoMetadata& metadata,
                              const ExtractionSettings& settings) {
    return fmt::format(
        R"(You are a fact-checking analyst. Read the video information and transcript below and identify the specific claims the video makes.

Guidelines:
- Prefer concrete, checkable factual assertions over pure value judgments or opinions.
- State each claim as said in the video, or minimally paraphrased. Keep claims in the order they appear.
- Return at most {max_claims} claims.
- For each claim write between 1 and {max_questions} precise, neutral questions that a fact-checker could answer with evidence. Split compound claims into separate questions (a claim that someone is "physically and mentally stronger" yields one question about physical strength and one about mental strength). Every question ends with a question mark.
- Optionally include "anchor": a short verbatim quote from the transcript where the claim is made.

Respond with only a JSON object of this shape:
{{"claims": [{{"id": 1, "text": "...", "anchor": "...", "questions": ["...?", "...?"]}}]}}
Claim ids are consecutive integers starting at 1.

Video title: {title}
Channel: {channel}

Transcript:
{transcript}
)",
        fmt::arg("max_claims", settings.max_claims), fmt::arg("max_questions", settings.max_questions_per_claim),
        fmt::arg("title", metadata.title), fmt::arg("channel", metadata.channel_name),
        fmt::arg("transcript", transcript.text));
}

ClaimSet extract_claims(const ingest::Transcript& transcript, const ingest::VideoMetadata& metadata,
                        llm::LanguageModel& model, const ExtractionSettings& settings) {
    if (trim(transcript.text).empty()) throw EmptyTranscript("cannot extract claims from an empty transcript");
    if (settings.max_claims == 0 || settings.max_questions_per_claim == 0) {
        throw PreconditionError("extraction limits must be positive");
    }
    const llm::DocumentSchema schema{"claim-document",
                                     [](const nlohmann::json& doc) { (void)claim_set_from_json(doc, 1); }};
    const auto document =
        model.complete_structured(extraction_prompt(transcript, metadata, settings), schema, settings.model,
                                  settings.attempt_budget);
    const ClaimSet parsed = claim_set_from_json(document, 1);

    std::vector<Claim> claims;
    std::vector<VerifiableQuestion> questions;
    for (const auto& c : parsed.claims()) {
        if (claims.size() == settings.max_claims) {
            spdlog::info("claim extraction returned {} claims; keeping the first {}", parsed.claims().size(),
                         settings.max_claims);
            break;
        }
        claims.push_back(c);
        std::size_t kept = 0;
        for (const auto& q : parsed.questions_for(c.id)) {
            if (kept++ == settings.max_questions_per_claim) break;
            questions.push_back({static_cast<int>(questions.size()) + 1, c.id, q.text});
        }
    }
    return ClaimSet::create(metadata.video_id, std::move(claims), std::move(questions));
}

}  // namespace sleuth::claims
