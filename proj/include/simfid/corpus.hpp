#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simfid/common.hpp"

namespace simfid {

enum class AgentCondition { good, bad, unknown };

const char* to_string(AgentCondition c);

// Suffix rule on task ids: "_good" -> good, "_bad" -> bad, else unknown.
AgentCondition parse_condition(std::string_view task_id);

// Turn-level emotion checkbox vocabulary (fixed, 13 labels).
inline constexpr std::array<std::string_view, 13> kEmotionLabels = {
    "Satisfied",  "Delighted", "Engaged",     "Patient",        "In control",
    "Supported",  "Annoyed",   "Confused",    "Frustrated",     "Unsatisfied",
    "Impatient",  "Not in control", "Unsupported",
};

// Session-level checkbox vocabulary (fixed, 13 labels).
inline constexpr std::array<std::string_view, 13> kSessionLabels = {
    "It was easy to use the system",
    "It was hard to use the system",
    "The conversation felt natural",
    "The conversation felt unnatural",
    "The assistant asked relevant questions",
    "The assistant did not ask relevant questions",
    "The system understood my preferences",
    "The system did not understand my preferences",
    "The system was responsive to my input",
    "The system was not responsive to my input",
    "It was easy to find a suitable product",
    "It was hard to find a suitable product",
    "The conversation was too long",
};

// Literal survey question strings used as record keys.
inline constexpr std::string_view kTurnPurchaseQuestion =
    "How likely would you be to purchase one of the recommended products in this turn?";
inline constexpr std::string_view kTurnConsideredQuestion =
    "If yes, which product would you consider purchasing?";
inline constexpr std::string_view kTurnFeedbackQuestion =
    "Do you have any feedback on the recommendations or assistant response in this turn?";
inline constexpr std::string_view kTaskShopFrequencyQuestion = "How often do you shop online?";
inline constexpr std::string_view kTaskFoundProductQuestion =
    "Were you able to find a product you would consider purchasing?";
inline constexpr std::string_view kTaskConsideredQuestion =
    "If yes, which product would you consider purchasing? If no, why not?";
inline constexpr std::string_view kTaskCommentsQuestion =
    "Do you have any other comments or suggestions?";

enum class PurchaseLikelihood { not_at_all_likely, probably_not, probably_yes, extremely_likely };
const char* to_string(PurchaseLikelihood v);
std::optional<PurchaseLikelihood> parse_purchase_likelihood(std::string_view s);

enum class ShopFrequency { never, rarely, occasionally, frequently };
const char* to_string(ShopFrequency v);
std::optional<ShopFrequency> parse_shop_frequency(std::string_view s);

struct CatalogItemRef {
    std::string item_id;
    std::string title;
    std::optional<std::string> description;
    std::optional<std::string> features;
    std::optional<std::string> image_url;

    bool operator==(const CatalogItemRef&) const = default;
};

struct TurnRatings {
    std::set<std::string> emotions;     // members of kEmotionLabels
    std::set<std::string> nonstandard;  // unknown checked labels, preserved verbatim
    std::optional<PurchaseLikelihood> purchase_likelihood;
    std::optional<std::string> considered_product;
    std::optional<std::string> free_text;

    bool operator==(const TurnRatings&) const = default;
    bool empty() const;
};

struct TaskRatings {
    std::optional<bool> found_product;
    std::optional<ShopFrequency> shop_frequency;
    std::set<std::string> session_checkboxes; // members of kSessionLabels
    std::set<std::string> nonstandard;
    std::optional<std::string> considered_product;
    std::optional<std::string> comments;

    bool operator==(const TaskRatings&) const = default;
};

inline constexpr std::size_t kMaxCarouselSize = 12;

struct Turn {
    std::string user_utterance;
    std::string assistant_utterance;
    std::vector<CatalogItemRef> recommendations; // at most kMaxCarouselSize
    std::optional<TurnRatings> turn_ratings;

    bool operator==(const Turn&) const = default;
};

struct Conversation {
    std::string id;
    std::vector<Turn> turns; // non-empty
    std::optional<TaskRatings> task_ratings;
    std::string task_id;
    AgentCondition condition = AgentCondition::unknown;
    // Empty string means a human conversation; otherwise the simulator name.
    std::string source;

    bool is_simulated() const { return !source.empty() && source != "human"; }
    bool operator==(const Conversation&) const = default;
};

struct Corpus {
    std::vector<Conversation> conversations;

    std::size_t size() const { return conversations.size(); }
    bool empty() const { return conversations.empty(); }
};

struct LoadResult {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;
};

// Parses one record. `id` is used when the record carries none.
// Throws Error on a malformed record.
Conversation parse_conversation(const nlohmann::json& record, std::string fallback_id);

nlohmann::json to_json(const Conversation& conversation);

// Accepts a top-level JSON array or one JSON record per line. Malformed
// records become diagnostics; an unreadable file throws.
LoadResult load_corpus(const std::filesystem::path& path);

// One record per line, in the same schema load_corpus accepts.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct ConditionSplit {
    Corpus good;
    Corpus bad;
    Corpus unknown;
};

ConditionSplit split_by_condition(const Corpus& corpus);

// Two disjoint uniformly random subsets of size n each; deterministic per
// seed. Throws if the corpus holds fewer than 2n conversations.
std::pair<Corpus, Corpus> sample_disjoint(const Corpus& corpus, std::size_t n, std::uint64_t seed);

struct CorpusSummary {
    std::size_t conversations = 0;
    std::size_t turns = 0;
    std::map<AgentCondition, std::size_t> by_condition;
    std::map<AgentCondition, std::size_t> turns_by_condition;
    std::map<std::size_t, std::size_t> turn_count_histogram;
    // condition -> emotion label -> number of rated turns carrying it
    std::map<AgentCondition, std::map<std::string, std::size_t>> emotion_incidence;
    std::map<AgentCondition, std::size_t> rated_turns_by_condition;

    double median_turns() const;
    double mean_turns(AgentCondition c) const;
};

CorpusSummary corpus_summary(const Corpus& corpus);

nlohmann::json to_json(const CorpusSummary& summary);

} // namespace simfid
