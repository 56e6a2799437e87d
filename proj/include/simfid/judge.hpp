#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "simfid/corpus.hpp"
#include "simfid/provider.hpp"

namespace simfid {

inline constexpr std::array<std::string_view, 9> kUserDialogActs = {
    "inform_preference",       "accept_recommendation", "reject_recommendation",
    "ask_clarification",       "critique",              "provide_feedback_positive",
    "provide_feedback_negative", "greet_thank",         "other",
};

inline constexpr std::array<std::string_view, 8> kAssistantDialogActs = {
    "recommend",        "elicit_preference", "ask_clarification_question",
    "explain_recommendation", "greet_acknowledge", "chit_chat",
    "cannot_help",      "other",
};

inline constexpr std::array<std::string_view, 4> kEvaluationCriteria = {
    "relevance_of_recommendations",
    "dialogue_quality",
    "task_completion",
    "ease_of_use",
};

struct CriterionScore {
    double rating = 3.0; // 1.0 .. 5.0
    std::string explanation;

    bool operator==(const CriterionScore&) const = default;
};

struct JudgeAnnotation {
    int user_sentiment = 3; // ordinals 1..5
    int user_satisfaction = 3;
    int user_frustration_annoyance = 3;
    int user_confusion = 3;
    bool recommendation_accepted = false;
    int turns_until_acceptance = 0;
    int assistant_turns_with_question = 0;
    int user_turns_with_question = 0;
    std::map<std::string, int> user_dialog_acts;      // all nine keys present
    std::map<std::string, int> assistant_dialog_acts; // all eight keys present
    std::map<std::string, CriterionScore> evaluation_details;
    std::string overall_summary_explanation;
    double overall_agent_rating = 3.0;

    bool operator==(const JudgeAnnotation&) const = default;
};

nlohmann::json to_json(const JudgeAnnotation& annotation);

struct ParsedJudgeOutput {
    JudgeAnnotation annotation;
    std::vector<std::string> clamp_diagnostics;
};

// The rater template with {conversation} filled by the turn-numbered
// transcript of the conversation.
std::string render_judge_prompt(const Conversation& conversation);

// Extracts the first well-formed JSON object from free-form model output
// (surrounding prose and <json_output_start> markers tolerated), validates
// ordinal/count ranges, clamps real-valued scores into [1.0, 5.0] with a
// diagnostic, and fills absent dialog-act counts with 0. Throws on
// unparseable text or out-of-range ordinals.
ParsedJudgeOutput parse_judge_output(const std::string& text);

// Hash of the judged content (the rendered transcript); annotation caching
// keys off this.
std::string conversation_content_hash(const Conversation& conversation);

struct JudgeOptions {
    std::string model_name = "judge";
    double temperature = 0.0; // judge calls are reproducible by default
    int max_output_tokens = 4096;
    int max_retries = 3; // prompt-identical re-asks on parse failure
};

// One JSON document per conversation id, mirroring the judge output schema
// plus judge_model, prompt_hash, content_hash and clamp_diagnostics.
class AnnotationStore {
public:
    explicit AnnotationStore(std::filesystem::path dir);

    // Returns the stored annotation when present and its content hash matches.
    std::optional<JudgeAnnotation> load(const std::string& conversation_id,
                                        const std::string& content_hash) const;
    void save(const std::string& conversation_id, const JudgeAnnotation& annotation,
              const std::string& content_hash, const std::string& judge_model,
              const std::string& prompt_hash,
              const std::vector<std::string>& clamp_diagnostics) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct AnnotateResult {
    JudgeAnnotation annotation;
    bool from_cache = false;
    std::vector<std::string> clamp_diagnostics;
};

// render -> generate -> parse, re-asking up to options.max_retries times on
// parse or validation failure. Throws Error once retries are exhausted; the
// caller decides whether to continue the batch.
AnnotateResult annotate(const Conversation& conversation, TextProvider& provider,
                        const JudgeOptions& options, const AnnotationStore* store = nullptr);

// Deterministic offline stand-in: question counts by "?" presence, dialog
// acts by keyword lists, experience ordinals from first-person emotion
// checkboxes when present (neutral 3 otherwise).
JudgeAnnotation rule_judge(const Conversation& conversation);

// First-person ratings mapped onto judge ordinals:
//   satisfaction = 1 + round(4 * fraction of rated turns with Satisfied or
//   Delighted checked); frustration analogously over Frustrated/Annoyed;
//   acceptance = task-level found-product answer.
struct FirstPersonRatings {
    int satisfaction = 3;
    int frustration = 3;
    std::optional<bool> acceptance;
    bool has_rated_turns = false;
};

FirstPersonRatings first_person_ratings(const Conversation& conversation);

// Kendall tau-b between two ordinal lists; nullopt when either is constant.
std::optional<double> kendall_agreement(std::span<const int> judge_values,
                                        std::span<const int> reference_values);

// M[i][j] counts reference label i predicted as label j.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::string> predicted,
                                                       std::span<const std::string> reference,
                                                       std::span<const std::string> label_order);

} // namespace simfid
