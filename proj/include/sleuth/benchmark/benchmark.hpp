#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/claims/claims.hpp"
#include "sleuth/llm/model.hpp"
#include "sleuth/retrieval/sources.hpp"
#include "sleuth/verdict/verdict.hpp"

namespace sleuth::benchmark {

enum class Dataset { Fever, Averitec };
enum class Stance { Supports, Refutes, Unsure };

std::string_view to_string(Dataset d) noexcept;
std::string_view to_string(Stance s) noexcept;

struct BenchmarkRecord {
    Dataset dataset = Dataset::Fever;
    std::string claim_text;
    Stance gold_stance = Stance::Supports;
    /// 1-based line in the source file where the record starts.
    std::size_t source_line = 0;

    bool operator==(const BenchmarkRecord&) const = default;
};

/// FEVER: one JSON object per line with `claim` and `label`
/// (SUPPORTS / REFUTES / NOT ENOUGH INFO). A top-level JSON array is accepted
/// too. NOT ENOUGH INFO records are dropped, then `n` records are sampled
/// under `seed` and returned in file order. n larger than what is available
/// returns everything.
std::vector<BenchmarkRecord> load_fever(const std::filesystem::path& path, int n, std::uint64_t seed);

/// AVeriTeC: same container formats; labels Supported / Refuted are kept,
/// Not Enough Evidence and Conflicting Evidence/Cherrypicking are dropped.
std::vector<BenchmarkRecord> load_averitec(const std::filesystem::path& path, int n, std::uint64_t seed);

/// Indices of a seeded sample of `n` out of `population`, ascending.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

Stance map_verdict_to_stance(verdict::Verdict v) noexcept;

struct StancePrediction {
    BenchmarkRecord record;
    verdict::Verdict verdict = verdict::Verdict::Unsure;
    Stance stance = Stance::Unsure;
    /// Set when the assessor threw; such records count as UNSURE.
    std::optional<std::string> error;
};

/// Per-class metrics treating `Stance` as the positive class. Undefined
/// values (zero denominators) are empty, never NaN.
struct ClassMetrics {
    std::size_t true_positives = 0;
    std::size_t predicted = 0;
    std::size_t support = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

struct SliceMetrics {
    std::size_t support = 0;
    std::size_t correct = 0;
    std::size_t unsure = 0;
    std::optional<double> accuracy;
    ClassMetrics supports;
    ClassMetrics refutes;
};

enum class Subset { All, Fever, Averitec };
inline constexpr std::array<Subset, 3> kAllSubsets = {Subset::All, Subset::Fever, Subset::Averitec};
std::string_view to_string(Subset s) noexcept;

struct MetricsTable {
    /// Indexed [subset][0 = with UNSURE, 1 = without UNSURE].
    std::array<std::array<SliceMetrics, 2>, 3> slices{};

    [[nodiscard]] const SliceMetrics& at(Subset subset, bool with_unsure) const {
        return slices[static_cast<std::size_t>(subset)][with_unsure ? 0 : 1];
    }
};

SliceMetrics compute_slice(std::span<const StancePrediction> predictions, Subset subset, bool with_unsure);
MetricsTable compute_metrics(std::span<const StancePrediction> predictions);

using ClaimAssessor = std::function<verdict::Verdict(const claims::Claim&)>;

struct EvaluationOptions {
    std::size_t concurrency = 4;
};

struct EvaluationResult {
    std::vector<StancePrediction> predictions;
    MetricsTable metrics;
};

/// Assesses every record (in a bounded pool) and aggregates. Assessor
/// exceptions are recorded on the prediction and scored as UNSURE.
EvaluationResult evaluate(std::span<const BenchmarkRecord> records, const ClaimAssessor& assessor,
                          const EvaluationOptions& options = {});

/// Claim -> one yes/no question -> evidence from every retriever -> verdict.
ClaimAssessor make_pipeline_assessor(llm::LanguageModel& model, std::vector<retrieval::Retriever*> retrievers,
                                     int per_source_k, verdict::AssessmentSettings settings = {});

/// "0.812", or "—" when undefined.
std::string format_metric(const std::optional<double>& value);

/// Aligned plain-text table: one row per slice, one column per metric.
std::string render_table(const MetricsTable& table);

struct RunInfo {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // dataset name -> path
};

nlohmann::json to_json(const MetricsTable& table);
nlohmann::json to_json(const EvaluationResult& result, const RunInfo& info);

}  // namespace sleuth::benchmark
