#include <algorithm>
#include <atomic>
#include <future>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/benchmark/benchmark.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/retrieval/gather.hpp"

namespace sleuth::benchmark {
namespace {

bool in_subset(const BenchmarkRecord& record, Subset subset) {
    switch (subset) {
        case Subset::All: return true;
        case Subset::Fever: return record.dataset == Dataset::Fever;
        case Subset::Averitec: return record.dataset == Dataset::Averitec;
    }
    return false;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

void finish_class(ClassMetrics& m) {
    m.precision = ratio(m.true_positives, m.predicted);
    m.recall = ratio(m.true_positives, m.support);
    if (m.precision && m.recall) {
        const double sum = *m.precision + *m.recall;
        m.f1 = sum > 0 ? 2.0 * *m.precision * *m.recall / sum : 0.0;
    }
}

void tally(ClassMetrics& m, Stance cls, Stance gold, Stance predicted) {
    if (gold == cls) ++m.support;
    if (predicted == cls) ++m.predicted;
    if (gold == cls && predicted == cls) ++m.true_positives;
}

}  // namespace

std::string_view to_string(Dataset d) noexcept {
    return d == Dataset::Fever ? "FEVER" : "AVERITEC";
}

std::string_view to_string(Stance s) noexcept {
    switch (s) {
        case Stance::Supports: return "SUPPORTS";
        case Stance::Refutes: return "REFUTES";
        case Stance::Unsure: return "UNSURE";
    }
    return "UNSURE";
}

std::string_view to_string(Subset s) noexcept {
    switch (s) {
        case Subset::All: return "ALL";
        case Subset::Fever: return "FEVER";
        case Subset::Averitec: return "AVERITEC";
    }
    return "ALL";
}

Stance map_verdict_to_stance(verdict::Verdict v) noexcept {
    switch (v) {
        case verdict::Verdict::True:
        case verdict::Verdict::PartlyTrue: return Stance::Supports;
        case verdict::Verdict::False:
        case verdict::Verdict::PartlyFalse: return Stance::Refutes;
        case verdict::Verdict::Unsure: return Stance::Unsure;
    }
    return Stance::Unsure;
}

SliceMetrics compute_slice(std::span<const StancePrediction> predictions, Subset subset, bool with_unsure) {
    SliceMetrics m;
    for (const auto& p : predictions) {
        if (!in_subset(p.record, subset)) continue;
        if (p.stance == Stance::Unsure) {
            ++m.unsure;
            if (!with_unsure) continue;
        }
        ++m.support;
        if (p.stance == p.record.gold_stance) ++m.correct;
        tally(m.supports, Stance::Supports, p.record.gold_stance, p.stance);
        tally(m.refutes, Stance::Refutes, p.record.gold_stance, p.stance);
    }
    m.accuracy = ratio(m.correct, m.support);
    finish_class(m.supports);
    finish_class(m.refutes);
    return m;
}

MetricsTable compute_metrics(std::span<const StancePrediction> predictions) {
    MetricsTable table;
    for (auto subset : kAllSubsets) {
        auto& row = table.slices[static_cast<std::size_t>(subset)];
        row[0] = compute_slice(predictions, subset, true);
        row[1] = compute_slice(predictions, subset, false);
    }
    return table;
}

EvaluationResult evaluate(std::span<const BenchmarkRecord> records, const ClaimAssessor& assessor,
                          const EvaluationOptions& options) {
    if (records.empty()) throw PreconditionError("evaluate needs at least one record");
    if (!assessor) throw PreconditionError("evaluate needs an assessor");

    EvaluationResult result;
    result.predictions.resize(records.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            StancePrediction& p = result.predictions[i];
            p.record = records[i];
            try {
                p.verdict = assessor(claims::Claim{1, records[i].claim_text, std::nullopt});
            } catch (const std::exception& e) {
                spdlog::warn("benchmark: {} line {} failed, scored UNSURE: {}", to_string(records[i].dataset),
                             records[i].source_line, e.what());
                p.verdict = verdict::Verdict::Unsure;
                p.error = e.what();
            }
            p.stance = map_verdict_to_stance(p.verdict);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(options.concurrency, 1, records.size());
    std::vector<std::future<void>> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();

    result.metrics = compute_metrics(result.predictions);
    return result;
}

ClaimAssessor make_pipeline_assessor(llm::LanguageModel& model, std::vector<retrieval::Retriever*> retrievers,
                                     int per_source_k, verdict::AssessmentSettings settings) {
    return [&model, retrievers = std::move(retrievers), per_source_k, settings](const claims::Claim& claim) {
        // The claim text itself is the search query.
        const claims::VerifiableQuestion question{1, claim.id, claim.text};
        const auto bundle = retrieval::gather_evidence(question, retrievers, per_source_k);
        return verdict::assess_claim(claim, std::span(&bundle, 1), model, settings).verdict;
    };
}

std::string format_metric(const std::optional<double>& value) {
    return value ? fmt::format("{:.3f}", *value) : "—";
}

std::string render_table(const MetricsTable& table) {
    const std::vector<std::string> header = {"Slice",        "N",           "Unsure",       "Accuracy",
                                             "P(Supports)",  "R(Supports)", "F1(Supports)", "P(Refutes)",
                                             "R(Refutes)",   "F1(Refutes)"};
    std::vector<std::vector<std::string>> rows{header};
    for (auto subset : kAllSubsets) {
        for (bool with_unsure : {true, false}) {
            const auto& m = table.at(subset, with_unsure);
            rows.push_back({fmt::format("{}{}", to_string(subset), with_unsure ? "" : " w/o Unsure"),
                            std::to_string(m.support), std::to_string(m.unsure), format_metric(m.accuracy),
                            format_metric(m.supports.precision), format_metric(m.supports.recall),
                            format_metric(m.supports.f1), format_metric(m.refutes.precision),
                            format_metric(m.refutes.recall), format_metric(m.refutes.f1)});
        }
    }
    // Width in code points, so "—" pads like one character.
    const auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto pad = std::string(widths[c] - width(rows[r][c]), ' ');
            line += c == 0 ? rows[r][c] + pad : "  " + pad + rows[r][c];
        }
        out += line + "\n";
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c == 0 ? 0 : 2);
            out += std::string(total, '-') + "\n";
        }
    }
    return out;
}

nlohmann::json to_json(const MetricsTable& table) {
    const auto metric = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
    const auto cls = [&](const ClassMetrics& m) {
        return nlohmann::json{{"true_positives", m.true_positives}, {"predicted", m.predicted},
                              {"support", m.support},              {"precision", metric(m.precision)},
                              {"recall", metric(m.recall)},        {"f1", metric(m.f1)}};
    };
    nlohmann::json slices = nlohmann::json::array();
    for (auto subset : kAllSubsets) {
        for (bool with_unsure : {true, false}) {
            const auto& m = table.at(subset, with_unsure);
            slices.push_back({{"subset", to_string(subset)},
                              {"with_unsure", with_unsure},
                              {"support", m.support},
                              {"correct", m.correct},
                              {"unsure", m.unsure},
                              {"accuracy", metric(m.accuracy)},
                              {"supports", cls(m.supports)},
                              {"refutes", cls(m.refutes)}});
        }
    }
    return slices;
}

nlohmann::json to_json(const EvaluationResult& result, const RunInfo& info) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& [name, path] : info.inputs) inputs.push_back({{"dataset", name}, {"path", path}});
    nlohmann::json predictions = nlohmann::json::array();
    for (const auto& p : result.predictions) {
        predictions.push_back({{"dataset", to_string(p.record.dataset)},
                               {"line", p.record.source_line},
                               {"claim", p.record.claim_text},
                               {"gold", to_string(p.record.gold_stance)},
                               {"verdict", verdict::to_string(p.verdict)},
                               {"stance", to_string(p.stance)},
                               {"error", p.error ? nlohmann::json(*p.error) : nlohmann::json()}});
    }
    return {{"seed", info.seed},
            {"inputs", inputs},
            {"metrics", to_json(result.metrics)},
            {"predictions", predictions}};
}

}  // namespace sleuth::benchmark
