#include "sleuth/verdict/verdict.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <map>
#include <set>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::verdict {
namespace {

std::string squash(std::string_view s) {
    std::string out;
    for (const unsigned char c : s) {
        if (c == '_' || c == '-' || c == ' ') continue;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

void validate_assessment_document(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaViolation("$", "assessment must be an object");
    if (!doc.contains("verdict") || !doc["verdict"].is_string()) {
        throw SchemaViolation("verdict", "missing string 'verdict'");
    }
    if (!parse_verdict(doc["verdict"].get<std::string>())) {
        throw SchemaViolation("verdict", "verdict must be one of True, Partly True, Partly False, False, Unsure");
    }
    if (!doc.contains("reasoning") || !doc["reasoning"].is_string() || trim(doc["reasoning"].get<std::string>()).empty()) {
        throw SchemaViolation("reasoning", "missing non-empty 'reasoning'");
    }
    if (doc.contains("sources")) {
        if (!doc["sources"].is_array()) throw SchemaViolation("sources", "must be an array of URLs");
        for (std::size_t i = 0; i < doc["sources"].size(); ++i) {
            if (!doc["sources"][i].is_string()) throw SchemaViolation(fmt::format("sources[{}]", i), "must be a string");
        }
    }
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::True: return "TRUE";
        case Verdict::PartlyTrue: return "PARTLY_TRUE";
        case Verdict::PartlyFalse: return "PARTLY_FALSE";
        case Verdict::False: return "FALSE";
        case Verdict::Unsure: return "UNSURE";
    }
    return "UNSURE";
}

std::string_view label(Verdict v) noexcept {
    switch (v) {
        case Verdict::True: return "True";
        case Verdict::PartlyTrue: return "Partly True";
        case Verdict::PartlyFalse: return "Partly False";
        case Verdict::False: return "False";
        case Verdict::Unsure: return "Unsure";
    }
    return "Unsure";
}

std::string_view indicator(Verdict v) noexcept {
    switch (v) {
        case Verdict::True: return "🟢";
        case Verdict::PartlyTrue: return "🟡";
        case Verdict::PartlyFalse: return "🟠";
        case Verdict::False: return "🔴";
        case Verdict::Unsure: return "";
    }
    return "";
}

std::optional<Verdict> parse_verdict(std::string_view text) noexcept {
    const std::string key = squash(text);
    if (key == "true") return Verdict::True;
    if (key == "partlytrue") return Verdict::PartlyTrue;
    if (key == "partlyfalse") return Verdict::PartlyFalse;
    if (key == "false") return Verdict::False;
    if (key == "unsure") return Verdict::Unsure;
    return std::nullopt;
}

std::string assessment_prompt(const claims::Claim& claim, std::span<const retrieval::EvidenceBundle> bundles) {
    std::string evidence;
    int n = 0;
    for (const auto& bundle : bundles) {
        evidence += fmt::format("\nQuestion: {}\n", bundle.question_text);
        for (const auto& item : bundle.items) {
            evidence += fmt::format("[E{}] source: {}", ++n, retrieval::to_string(item.source_kind));
            if (item.publisher) evidence += fmt::format(" | publisher: {}", *item.publisher);
            evidence += '\n';
            if (item.review_rating) {
                evidence += fmt::format("PROFESSIONAL FACT-CHECK RATING: \"{}\"\n", *item.review_rating);
            }
            evidence += fmt::format("URL: {}\nExcerpt: {}\n", item.url, item.excerpt);
        }
    }
    return fmt::format(
        R"(You are a careful fact-checker. Assess the claim below using only the numbered evidence provided.

Verdicts:
- "True": the evidence supports the claim as stated.
- "Partly True": the core of the claim is accurate but some details are wrong, exaggerated or missing context.
- "Partly False": the core of the claim is inaccurate, although some elements of it are accurate.
- "False": the evidence contradicts the claim.
- "Unsure": the evidence is insufficient, irrelevant or conflicting.
Professional fact-check ratings are the strongest signal when they address the same claim.

Rules:
- Base the reasoning only on the evidence below; do not rely on outside knowledge.
- "sources" lists the URLs of the evidence items you relied on, copied exactly. Never cite a URL that is not listed.
- Any verdict other than "Unsure" must cite at least one source.

Respond with only a JSON object:
{{"claim": "...", "verdict": "True|Partly True|Partly False|False|Unsure", "reasoning": "...", "sources": ["https://..."]}}

Claim: {claim}
{evidence})",
        fmt::arg("claim", claim.text), fmt::arg("evidence", evidence));
}

namespace {

std::string scrub_once(const std::string& text, const std::map<std::string, std::string>& known_urls, int claim_id) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& span : find_url_spans(text)) {
        out.append(text, pos, span.position - pos);
        const std::string url = text.substr(span.position, span.length);
        if (known_urls.contains(normalize_url(url))) {
            out += url;
        } else {
            spdlog::warn("claim {}: removing URL from reasoning not present in evidence: {}", claim_id, url);
        }
        pos = span.position + span.length;
    }
    out.append(text, pos);
    return out.size() == text.size() ? out : tidy_after_removal(std::move(out));
}

// Tidying can join fragments into a new URL, so rescan until nothing changes.
std::string scrub_unknown_urls(std::string text, const std::map<std::string, std::string>& known_urls, int claim_id) {
    for (;;) {
        auto next = scrub_once(text, known_urls, claim_id);
        if (next == text) return next;
        text = std::move(next);
    }
}

}  // namespace

ClaimAssessment assess_claim(const claims::Claim& claim, std::span<const retrieval::EvidenceBundle> bundles,
                             llm::LanguageModel& model, const AssessmentSettings& settings) {
    std::map<std::string, std::string> known_urls;  // normalized -> as retrieved
    for (const auto& bundle : bundles) {
        for (const auto& item : bundle.items) known_urls.emplace(normalize_url(item.url), item.url);
    }
    if (known_urls.empty()) {
        return {claim, Verdict::Unsure, std::string(kInsufficientEvidence), {}};
    }

    // Citing only unknown URLs is a violation the repair loop can fix.
    const llm::DocumentSchema schema{"claim-assessment", [&](const nlohmann::json& j) {
                                         validate_assessment_document(j);
                                         if (*parse_verdict(j.at("verdict").get<std::string>()) == Verdict::Unsure) {
                                             return;
                                         }
                                         for (const auto& source : j.value("sources", nlohmann::json::array())) {
                                             if (known_urls.contains(normalize_url(source.get<std::string>()))) return;
                                         }
                                         throw SchemaViolation("sources",
                                                               "no cited source appears in the evidence provided");
                                     }};
    const auto doc =
        model.complete_structured(assessment_prompt(claim, bundles), schema, settings.model, settings.attempt_budget);

    ClaimAssessment assessment;
    assessment.claim = claim;
    assessment.verdict = *parse_verdict(doc.at("verdict").get<std::string>());
    assessment.reasoning = scrub_unknown_urls(trim(doc.at("reasoning").get<std::string>()), known_urls, claim.id);
    std::set<std::string> cited;
    for (const auto& source : doc.value("sources", nlohmann::json::array())) {
        const std::string url = trim(source.get<std::string>());
        const auto it = known_urls.find(normalize_url(url));
        if (it == known_urls.end()) {
            spdlog::warn("claim {}: dropping cited URL not present in evidence: {}", claim.id, url);
            continue;
        }
        if (cited.insert(it->first).second) assessment.sources.push_back(it->second);
    }
    if (assessment.sources.empty() && assessment.verdict != Verdict::Unsure) {
        throw SchemaViolation("sources", fmt::format("verdict {} for claim {} has no source from the evidence",
                                                     to_string(assessment.verdict), claim.id));
    }
    return assessment;
}

FactCheckReport build_report(std::vector<ClaimAssessment> assessments, ingest::VideoMetadata metadata,
                             Timestamp generated_at) {
    for (std::size_t i = 1; i < assessments.size(); ++i) {
        if (assessments[i].claim.id <= assessments[i - 1].claim.id) {
            throw PreconditionError("assessments must be in claim order");
        }
    }
    return {std::move(metadata), std::move(assessments), generated_at};
}

std::string render_markdown(const FactCheckReport& report) {
    const auto& m = report.metadata;
    std::string out = fmt::format("# Fact-Check Report: {}\n\n", collapse_whitespace(m.title));
    if (m.thumbnail_url) out += fmt::format("![Video thumbnail]({})\n\n", *m.thumbnail_url);
    out += fmt::format("**Channel:** {}  \n**Video ID:** `{}`  \n**Generated:** {}\n\n", collapse_whitespace(m.channel_name),
                       m.video_id, format_iso8601(report.generated_at));
    out += "Legend: 🟢 True · 🟡 Partly True · 🟠 Partly False · 🔴 False\n\n---\n\n";

    int shown = 0;
    for (const auto& a : report.assessments) {
        if (a.verdict == Verdict::Unsure) continue;
        ++shown;
        out += fmt::format("## {}. {}\n\n", shown, collapse_whitespace(a.claim.text));
        out += fmt::format("{} **{}**\n\n", indicator(a.verdict), label(a.verdict));
        out += fmt::format("{}\n\n", trim(a.reasoning));
        if (!a.sources.empty()) {
            out += "**Sources:**\n\n";
            for (const auto& url : a.sources) out += fmt::format("- [{}]({})\n", url, url);
            out += '\n';
        }
    }
    if (shown == 0) out += "_No checkable claims could be verified for this video._\n";
    return out;
}

std::string render_text(const FactCheckReport& report) {
    const auto& m = report.metadata;
    std::string out = "FACT-CHECK REPORT\n";
    out += fmt::format("Video: {} ({})\n", collapse_whitespace(m.title), m.video_id);
    out += fmt::format("Channel: {}\n", collapse_whitespace(m.channel_name));
    out += fmt::format("Generated: {}\n", format_iso8601(report.generated_at));
    out += fmt::format("Assessments: {}\n", report.assessments.size());
    for (std::size_t i = 0; i < report.assessments.size(); ++i) {
        const auto& a = report.assessments[i];
        out += fmt::format("\nClaim {}: {}\n", i + 1, collapse_whitespace(a.claim.text));
        out += fmt::format("Verdict: {}\n", label(a.verdict));
        out += fmt::format("Reasoning: {}\n", collapse_whitespace(a.reasoning));
        out += "Sources:";
        if (a.sources.empty()) out += " none";
        out += '\n';
        for (const auto& url : a.sources) out += fmt::format("- {}\n", url);
    }
    return out;
}

nlohmann::json to_json(const FactCheckReport& report) {
    nlohmann::json assessments = nlohmann::json::array();
    for (const auto& a : report.assessments) {
        nlohmann::json claim = {{"id", a.claim.id}, {"text", a.claim.text}};
        if (a.claim.transcript_anchor) claim["anchor"] = *a.claim.transcript_anchor;
        assessments.push_back({{"claim", std::move(claim)},
                               {"verdict", to_string(a.verdict)},
                               {"reasoning", a.reasoning},
                               {"sources", a.sources}});
    }
    return {{"schema_version", kReportSchemaVersion},
            {"metadata", ingest::to_json(report.metadata)},
            {"generated_at", format_iso8601(report.generated_at)},
            {"assessments", std::move(assessments)}};
}

FactCheckReport report_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kReportSchemaVersion) {
        throw SchemaViolation("schema_version", "unsupported report schema version");
    }
    FactCheckReport report;
    report.metadata = ingest::video_metadata_from_json(j.at("metadata"));
    if (auto ts = parse_iso8601(j.value("generated_at", ""))) report.generated_at = *ts;
    for (const auto& a : j.at("assessments")) {
        ClaimAssessment assessment;
        assessment.claim.id = a.at("claim").at("id").get<int>();
        assessment.claim.text = a.at("claim").at("text").get<std::string>();
        if (a.at("claim").contains("anchor")) assessment.claim.transcript_anchor = a["claim"]["anchor"].get<std::string>();
        const auto v = parse_verdict(a.at("verdict").get<std::string>());
        if (!v) throw SchemaViolation("assessments.verdict", "unknown verdict");
        assessment.verdict = *v;
        assessment.reasoning = a.value("reasoning", "");
        assessment.sources = a.value("sources", std::vector<std::string>{});
        report.assessments.push_back(std::move(assessment));
    }
    return report;
}

std::vector<std::string> report_urls(const FactCheckReport& report) {
    std::vector<std::string> urls;
    std::set<std::string> seen;
    for (const auto& a : report.assessments) {
        for (const auto& url : a.sources) {
            if (seen.insert(normalize_url(url)).second) urls.push_back(url);
        }
    }
    return urls;
}

}  // namespace sleuth::verdict
