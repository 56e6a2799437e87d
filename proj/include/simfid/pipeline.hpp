#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simfid/agent.hpp"
#include "simfid/corpus.hpp"
#include "simfid/judge.hpp"
#include "simfid/metrics.hpp"
#include "simfid/provider.hpp"
#include "simfid/simulator.hpp"
#include "simfid/stats.hpp"

namespace simfid {

// Deterministic prompt-aware stub: recognizes the embedded templates and
// answers with schema-valid text so every pipeline has an offline path.
// Replies depend only on the request content.
class OfflineStubProvider : public TextProvider {
public:
    std::string generate(const GenerationRequest& request) override;
    std::size_t call_count() const { return calls_; }

private:
    std::atomic<std::size_t> calls_{0};
};

enum class JudgeMode { rule, llm };

struct JudgeRunner {
    JudgeMode mode = JudgeMode::rule;
    TextProvider* provider = nullptr; // required in llm mode
    JudgeOptions options;
    const AnnotationStore* store = nullptr;
    std::size_t jobs = 1;
};

struct AnnotationOutcome {
    std::map<std::string, JudgeAnnotation> annotations;
    std::vector<Diagnostic> diagnostics; // failed conversations, flagged not fatal
};

AnnotationOutcome annotate_corpus(const Corpus& corpus, const JudgeRunner& judge);

struct AlignmentTable {
    std::string title;
    std::vector<stats::AlignmentRow> rows;
};

struct HistogramData {
    std::string set_name;
    std::string metric;
    // lower bin edge -> count; integer metrics use unit bins, real metrics
    // ten equal-width bins
    std::vector<std::pair<double, std::size_t>> bins;
};

struct ChiSquareRatingsResult {
    stats::TestResult frustration;
    stats::TestResult satisfaction;
    stats::TestResult found_product;
    // [good, bad] x [checked, unchecked] over rated turns
    std::array<std::array<double, 2>, 2> frustration_table{};
    std::array<std::array<double, 2>, 2> satisfaction_table{};
    // [good, bad] x [yes, no] over answered task ratings
    std::array<std::array<double, 2>, 2> found_table{};
    double acceptance_rate_good = 0.0;
    double acceptance_rate_bad = 0.0;
    double acceptance_drop = 0.0; // good minus bad, in absolute rate
};

// First-person rating analysis: Frustrated/Satisfied turn incidence and the
// found-product answer, each tabulated against the agent condition.
ChiSquareRatingsResult chi_square_ratings_preset(const Corpus& corpus);

struct JudgeValidationResult {
    std::optional<double> tau_satisfaction_first_person;
    std::optional<double> tau_frustration_first_person;
    std::optional<double> tau_satisfaction_third_person;
    std::optional<double> tau_frustration_third_person;
    std::vector<std::vector<std::size_t>> satisfaction_confusion; // 5x5, first-person rows
    std::vector<std::vector<std::size_t>> frustration_confusion;  // 5x5
    std::vector<std::vector<std::size_t>> acceptance_confusion;   // 2x2 (no,yes)
    double acceptance_accuracy = 0.0;
    std::size_t conversations_used = 0;
};

struct ThirdPersonLabels {
    int satisfaction = 3;
    int frustration = 3;
    std::optional<bool> acceptance;
};

struct SimilarityThresholds {
    double mwu_p_min = 0.05;
    double ks_max = 0.10;
};

struct HumanVsHumanSeedResult {
    std::uint64_t seed = 0;
    std::vector<stats::AlignmentRow> rows;
    bool all_pass = false;
};

struct HumanVsHumanResult {
    std::vector<HumanVsHumanSeedResult> per_seed;
    std::map<std::string, std::size_t> passes_by_metric;
    SimilarityThresholds thresholds;
};

struct ConditioningAudit {
    std::string train_condition;
    std::string test_condition;
    std::size_t pool_size = 0;
    bool pool_clean = false; // no test-condition conversation entered the pool
    std::vector<std::string> pool_ids;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::map<std::string, std::string> model_names;
    std::map<std::string, std::string> prompt_hashes;
    std::size_t cache_hits = 0;
    std::vector<std::string> notes;
};

struct Report {
    std::string experiment_name;
    std::vector<AlignmentTable> alignment_tables;
    std::vector<HistogramData> histograms;
    std::optional<ChiSquareRatingsResult> chi_square_ratings;
    std::optional<JudgeValidationResult> judge_validation;
    std::optional<HumanVsHumanResult> human_vs_human;
    std::optional<ConditioningAudit> conditioning_audit;
    std::vector<Diagnostic> diagnostics;
    Provenance provenance;
};

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& doc);

// Reads every annotation document in a store directory.
std::map<std::string, JudgeAnnotation> load_annotations(const std::filesystem::path& dir);

// Histograms for the table metrics plus the experience ordinals.
std::vector<HistogramData> sample_set_histograms(const SampleSet& set);

// PLSA comparison: builds both sample sets, aligns over the eleven table
// metrics, and attaches per-metric histograms for figure data.
Report run_plsa(const Corpus& human_set, const Corpus& sim_set,
                const std::map<std::string, JudgeAnnotation>& annotations, std::string name);

struct GenerationSpec {
    SimMode mode = SimMode::prompted;
    AgentCondition condition = AgentCondition::good;
    std::size_t count = 1;
    std::size_t max_turns = 10;
    std::uint64_t seed = 0;
    std::string simulator_name = "prompted";
    std::size_t k = 3;
};

struct GenerationOutcome {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;
};

// Batch dialog generation against the chosen agent profile; tasks are drawn
// uniformly from the built-in categories per the generation seed.
GenerationOutcome generate_conversations(const Catalog& catalog, const CorpusRetrievalIndex* pool,
                                         TextProvider& sim_provider, TextProvider& agent_provider,
                                         const GenerationSpec& spec);

struct CounterfactualSpec {
    AgentCondition train_condition = AgentCondition::good;
    AgentCondition test_condition = AgentCondition::bad;
    SimMode mode = SimMode::icl;
    std::size_t count = 1;
    std::size_t max_turns = 10;
    std::uint64_t seed = 0;
    std::string simulator_name; // defaults to "<mode>_<train-condition>"
};

// Conditions the simulator exclusively on train-condition human data, runs it
// against the unseen test-condition agent, and aligns the result against
// human test-condition conversations. The report carries a provenance audit
// of the conditioning pool.
Report run_counterfactual(const Corpus& humans, const Catalog& catalog,
                          const CounterfactualSpec& spec, TextProvider& sim_provider,
                          TextProvider& agent_provider, const JudgeRunner& judge,
                          Corpus* generated_out = nullptr);

// Disjoint same-population draws per seed, aligned on the direct metrics
// (annotation-free); when annotations cover the corpus the full table runs
// too.
Report run_human_vs_human(const Corpus& corpus, std::size_t n,
                          std::span<const std::uint64_t> seeds,
                          const std::map<std::string, JudgeAnnotation>* annotations = nullptr,
                          SimilarityThresholds thresholds = {});

// Judge-vs-first-person agreement (and vs third-person labels when given).
Report run_judge_validation(const Corpus& corpus,
                            const std::map<std::string, JudgeAnnotation>& annotations,
                            const std::map<std::string, ThirdPersonLabels>* third_person = nullptr);

// Bit-stable report files; formats drawn from {"json", "csv", "markdown"}.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::set<std::string>& formats,
                                               const std::filesystem::path& dir);

// The three direct metric names used by the human-vs-human baseline.
inline const std::array<std::string, 3> kDirectMetricNames = {
    "Num turns", "Num user words", "Turns with question"};

} // namespace simfid
