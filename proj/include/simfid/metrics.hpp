#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "simfid/corpus.hpp"
#include "simfid/judge.hpp"
#include "simfid/stats.hpp"

namespace simfid {

// Alignment-table row names, in canonical table order.
inline const std::array<std::string, 11> kAlignmentMetricNames = {
    "Num turns",         "Num user words",    "Turns with question", "Critique",
    "Greet/Thank",       "Inform preference", "Negative feedback",   "Positive feedback",
    "Accept rec.",       "Reject rec.",       "Other",
};

// Experience ordinals carried alongside the table metrics.
inline const std::array<std::string, 4> kExperienceMetricNames = {
    "Satisfaction", "Frustration", "Confusion", "Sentiment"};

struct DirectMetrics {
    std::size_t num_turns = 0;
    double mean_user_words = 0.0;
    std::size_t user_turns_with_question = 0;
    std::size_t assistant_turns_with_question = 0; // auxiliary
};

// num_turns, mean whitespace-token count per user turn (markdown stripped),
// and "?"-based question detection. Pure; assistant text never affects the
// user-word statistics.
DirectMetrics direct_metrics(const Conversation& conversation);

struct MetricSample {
    std::string conversation_id;
    std::size_t num_turns = 1;
    double mean_user_words = 0.0;
    std::size_t user_turns_with_question = 0;
    std::size_t assistant_turns_with_question = 0;
    std::map<std::string, int> act_counts; // the nine user acts
    int satisfaction = 3;
    int frustration = 3;
    int confusion = 3;
    int sentiment = 3;
    bool recommendation_accepted = false;
};

// Merges direct metrics with the annotation's act counts and experience
// ordinals. Missing acts default to 0.
MetricSample build_sample(const Conversation& conversation, const JudgeAnnotation& annotation);

struct SampleSet {
    std::string name;
    std::vector<MetricSample> samples; // unique conversation ids, sorted by id
};

struct SampleSetResult {
    SampleSet set;
    std::vector<Diagnostic> skipped; // conversations without an annotation
};

SampleSetResult build_sample_set(const Corpus& corpus,
                                 const std::map<std::string, JudgeAnnotation>& annotations,
                                 std::string name);

// Per-conversation value of a named metric (table names above plus the
// experience ordinals). Throws on unknown names.
double metric_value(const MetricSample& sample, std::string_view metric_name);

stats::MetricTable metric_table(const SampleSet& set, std::span<const std::string> metric_names);

// CSV with one row per conversation: id, the eleven table metrics, the
// experience ordinals, acceptance and the auxiliary assistant question count.
void write_sample_set_csv(const SampleSet& set, const std::filesystem::path& path);
SampleSet read_sample_set_csv(const std::filesystem::path& path, std::string name);

} // namespace simfid
