#include "simfid/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "simfid/text.hpp"

namespace simfid {

using nlohmann::json;

const char* to_string(AgentCondition c) {
    switch (c) {
    case AgentCondition::good: return "good";
    case AgentCondition::bad: return "bad";
    default: return "unknown";
    }
}

AgentCondition parse_condition(std::string_view task_id) {
    if (task_id.ends_with("_good")) return AgentCondition::good;
    if (task_id.ends_with("_bad")) return AgentCondition::bad;
    return AgentCondition::unknown;
}

const char* to_string(PurchaseLikelihood v) {
    switch (v) {
    case PurchaseLikelihood::not_at_all_likely: return "Not at all likely";
    case PurchaseLikelihood::probably_not: return "Probably not";
    case PurchaseLikelihood::probably_yes: return "Probably yes";
    default: return "Extremely likely";
    }
}

std::optional<PurchaseLikelihood> parse_purchase_likelihood(std::string_view s) {
    if (s == "Not at all likely") return PurchaseLikelihood::not_at_all_likely;
    if (s == "Probably not") return PurchaseLikelihood::probably_not;
    if (s == "Probably yes") return PurchaseLikelihood::probably_yes;
    if (s == "Extremely likely") return PurchaseLikelihood::extremely_likely;
    return std::nullopt;
}

const char* to_string(ShopFrequency v) {
    switch (v) {
    case ShopFrequency::never: return "Never";
    case ShopFrequency::rarely: return "Rarely";
    case ShopFrequency::occasionally: return "Occasionally";
    default: return "Frequently";
    }
}

std::optional<ShopFrequency> parse_shop_frequency(std::string_view s) {
    if (s == "Never") return ShopFrequency::never;
    if (s == "Rarely") return ShopFrequency::rarely;
    if (s == "Occasionally") return ShopFrequency::occasionally;
    if (s == "Frequently") return ShopFrequency::frequently;
    return std::nullopt;
}

bool TurnRatings::empty() const {
    return emotions.empty() && nonstandard.empty() && !purchase_likelihood &&
           !considered_product && !free_text;
}

namespace {

bool is_emotion_label(std::string_view s) {
    return std::find(kEmotionLabels.begin(), kEmotionLabels.end(), s) != kEmotionLabels.end();
}

bool is_session_label(std::string_view s) {
    return std::find(kSessionLabels.begin(), kSessionLabels.end(), s) != kSessionLabels.end();
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(std::string(key) + " must be a string");
    return it->get<std::string>();
}

TurnRatings parse_turn_ratings(const json& j) {
    TurnRatings r;
    for (const auto& [key, value] : j.items()) {
        if (key == kTurnPurchaseQuestion) {
            if (!value.is_string()) throw Error("purchase likelihood must be a string");
            auto parsed = parse_purchase_likelihood(value.get<std::string>());
            if (!parsed) throw Error("unknown purchase likelihood: " + value.get<std::string>());
            r.purchase_likelihood = parsed;
        } else if (key == kTurnConsideredQuestion) {
            if (value.is_string()) r.considered_product = value.get<std::string>();
        } else if (key == kTurnFeedbackQuestion) {
            if (value.is_string()) r.free_text = value.get<std::string>();
        } else if (value.is_boolean()) {
            if (!value.get<bool>()) continue;
            if (is_emotion_label(key)) {
                r.emotions.insert(key);
            } else {
                r.nonstandard.insert(key);
            }
        } else {
            throw Error("unrecognized turn rating entry: " + key);
        }
    }
    return r;
}

json to_json(const TurnRatings& r) {
    json j = json::object();
    for (const auto& e : r.emotions) j[e] = true;
    for (const auto& e : r.nonstandard) j[e] = true;
    if (r.purchase_likelihood)
        j[std::string(kTurnPurchaseQuestion)] = to_string(*r.purchase_likelihood);
    if (r.considered_product) j[std::string(kTurnConsideredQuestion)] = *r.considered_product;
    if (r.free_text) j[std::string(kTurnFeedbackQuestion)] = *r.free_text;
    return j;
}

TaskRatings parse_task_ratings(const json& j) {
    TaskRatings r;
    for (const auto& [key, value] : j.items()) {
        if (key == kTaskFoundProductQuestion) {
            if (!value.is_string()) throw Error("found-product answer must be a string");
            const auto s = value.get<std::string>();
            if (s == "Yes") r.found_product = true;
            else if (s == "No") r.found_product = false;
            else throw Error("found-product answer must be Yes or No, got: " + s);
        } else if (key == kTaskShopFrequencyQuestion) {
            if (!value.is_string()) throw Error("shop frequency must be a string");
            auto parsed = parse_shop_frequency(value.get<std::string>());
            if (!parsed) throw Error("unknown shop frequency: " + value.get<std::string>());
            r.shop_frequency = parsed;
        } else if (key == kTaskConsideredQuestion) {
            if (value.is_string()) r.considered_product = value.get<std::string>();
        } else if (key == kTaskCommentsQuestion) {
            if (value.is_string()) r.comments = value.get<std::string>();
        } else if (value.is_boolean()) {
            if (!value.get<bool>()) continue;
            if (is_session_label(key)) {
                r.session_checkboxes.insert(key);
            } else {
                r.nonstandard.insert(key);
            }
        } else {
            throw Error("unrecognized task rating entry: " + key);
        }
    }
    return r;
}

json to_json(const TaskRatings& r) {
    json j = json::object();
    if (r.found_product) j[std::string(kTaskFoundProductQuestion)] = *r.found_product ? "Yes" : "No";
    if (r.shop_frequency) j[std::string(kTaskShopFrequencyQuestion)] = to_string(*r.shop_frequency);
    for (const auto& s : r.session_checkboxes) j[s] = true;
    for (const auto& s : r.nonstandard) j[s] = true;
    if (r.considered_product) j[std::string(kTaskConsideredQuestion)] = *r.considered_product;
    if (r.comments) j[std::string(kTaskCommentsQuestion)] = *r.comments;
    return j;
}

CatalogItemRef parse_item_ref(const json& j) {
    if (!j.is_object()) throw Error("recommendation entry must be an object");
    CatalogItemRef item;
    if (auto it = j.find("item_id"); it != j.end() && it->is_string())
        item.item_id = it->get<std::string>();
    if (item.item_id.empty()) throw Error("recommendation item_id missing or empty");
    if (auto it = j.find("title"); it != j.end() && it->is_string())
        item.title = it->get<std::string>();
    item.description = opt_string(j, "description");
    item.features = opt_string(j, "features");
    item.image_url = opt_string(j, "image_url");
    return item;
}

json to_json(const CatalogItemRef& item) {
    json j;
    j["item_id"] = item.item_id;
    j["title"] = item.title;
    if (item.description) j["description"] = *item.description;
    if (item.features) j["features"] = *item.features;
    if (item.image_url) j["image_url"] = *item.image_url;
    return j;
}

Turn parse_turn(const json& j) {
    if (!j.is_object()) throw Error("turn must be an object");
    Turn t;
    if (auto it = j.find("user_utterance"); it != j.end() && it->is_string())
        t.user_utterance = it->get<std::string>();
    if (text::trim(t.user_utterance).empty())
        throw Error("user_utterance missing or empty");
    if (auto it = j.find("assistant_utterance"); it != j.end() && it->is_string())
        t.assistant_utterance = it->get<std::string>();
    if (auto it = j.find("recommendations"); it != j.end()) {
        if (!it->is_array()) throw Error("recommendations must be an array");
        if (it->size() > kMaxCarouselSize)
            throw Error("more than " + std::to_string(kMaxCarouselSize) + " recommendations");
        for (const auto& rec : *it) t.recommendations.push_back(parse_item_ref(rec));
    }
    if (auto it = j.find("ratings"); it != j.end() && it->is_object())
        t.turn_ratings = parse_turn_ratings(*it);
    return t;
}

json to_json(const Turn& t) {
    json j;
    j["user_utterance"] = t.user_utterance;
    j["assistant_utterance"] = t.assistant_utterance;
    j["recommendations"] = json::array();
    for (const auto& rec : t.recommendations) j["recommendations"].push_back(to_json(rec));
    if (t.turn_ratings) j["ratings"] = to_json(*t.turn_ratings);
    return j;
}

} // namespace

Conversation parse_conversation(const json& record, std::string fallback_id) {
    if (!record.is_object()) throw Error("record must be an object");
    Conversation c;
    if (auto it = record.find("id"); it != record.end() && it->is_string())
        c.id = it->get<std::string>();
    if (c.id.empty()) c.id = std::move(fallback_id);

    auto turns_it = record.find("turns");
    if (turns_it == record.end() || !turns_it->is_array())
        throw Error("missing turns array");
    for (const auto& t : *turns_it) c.turns.push_back(parse_turn(t));
    if (c.turns.empty()) throw Error("turns array is empty");

    if (auto it = record.find("ratings"); it != record.end() && it->is_object())
        c.task_ratings = parse_task_ratings(*it);
    if (auto it = record.find("task_id"); it != record.end() && it->is_string())
        c.task_id = it->get<std::string>();
    c.condition = parse_condition(c.task_id);
    if (auto it = record.find("source"); it != record.end() && it->is_string()) {
        const auto s = it->get<std::string>();
        if (s != "human") c.source = s;
    }
    return c;
}

json to_json(const Conversation& conversation) {
    json j;
    j["id"] = conversation.id;
    j["turns"] = json::array();
    for (const auto& t : conversation.turns) j["turns"].push_back(to_json(t));
    if (conversation.task_ratings) j["ratings"] = to_json(*conversation.task_ratings);
    j["task_id"] = conversation.task_id;
    if (conversation.is_simulated()) j["source"] = conversation.source;
    return j;
}

namespace {

std::vector<json> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto first = content.find_first_not_of(" \t\r\n");
    std::vector<json> records;
    if (first == std::string::npos) return records; // empty file -> empty corpus
    if (content[first] == '[') {
        json doc = json::parse(content); // malformed top-level array is fatal
        if (!doc.is_array()) throw Error("top-level JSON value must be an array");
        for (auto& r : doc) records.push_back(std::move(r));
        return records;
    }
    // one record per line; blank lines skipped, bad lines surface as
    // json::exception per record in the caller
    std::size_t start = 0;
    while (start <= content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        std::string_view line(content.data() + start, end - start);
        start = end + 1;
        if (text::trim(line).empty()) {
            if (end == content.size()) break;
            continue;
        }
        records.push_back(json::parse(line, nullptr, false));
        if (end == content.size()) break;
    }
    return records;
}

} // namespace

LoadResult load_corpus(const std::filesystem::path& path) {
    LoadResult result;
    const std::string stem = path.stem().string();
    std::vector<json> records = read_records(path);
    result.corpus.conversations.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string where = stem + ":" + std::to_string(i);
        if (records[i].is_discarded()) {
            result.diagnostics.push_back({where, "invalid JSON"});
            continue;
        }
        try {
            result.corpus.conversations.push_back(parse_conversation(records[i], where));
        } catch (const std::exception& e) {
            result.diagnostics.push_back({where, e.what()});
        }
    }
    return result;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    for (const auto& c : corpus.conversations) {
        out << to_json(c).dump() << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

ConditionSplit split_by_condition(const Corpus& corpus) {
    ConditionSplit split;
    for (const auto& c : corpus.conversations) {
        switch (c.condition) {
        case AgentCondition::good: split.good.conversations.push_back(c); break;
        case AgentCondition::bad: split.bad.conversations.push_back(c); break;
        default: split.unknown.conversations.push_back(c); break;
        }
    }
    return split;
}

std::pair<Corpus, Corpus> sample_disjoint(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (corpus.size() < 2 * n)
        throw Error("sample_disjoint needs at least " + std::to_string(2 * n) +
                    " conversations, corpus has " + std::to_string(corpus.size()));
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    deterministic_shuffle(idx, rng);
    Corpus a;
    Corpus b;
    a.conversations.reserve(n);
    b.conversations.reserve(n);
    for (std::size_t i = 0; i < n; ++i) a.conversations.push_back(corpus.conversations[idx[i]]);
    for (std::size_t i = n; i < 2 * n; ++i) b.conversations.push_back(corpus.conversations[idx[i]]);
    return {std::move(a), std::move(b)};
}

double CorpusSummary::median_turns() const {
    if (conversations == 0) return 0.0;
    std::vector<std::size_t> expanded;
    expanded.reserve(conversations);
    for (const auto& [len, count] : turn_count_histogram)
        for (std::size_t i = 0; i < count; ++i) expanded.push_back(len);
    const std::size_t mid = expanded.size() / 2;
    if (expanded.size() % 2 == 1) return static_cast<double>(expanded[mid]);
    return (static_cast<double>(expanded[mid - 1]) + static_cast<double>(expanded[mid])) / 2.0;
}

double CorpusSummary::mean_turns(AgentCondition c) const {
    auto conv_it = by_condition.find(c);
    if (conv_it == by_condition.end() || conv_it->second == 0) return 0.0;
    auto turn_it = turns_by_condition.find(c);
    const auto total = turn_it == turns_by_condition.end() ? 0 : turn_it->second;
    return static_cast<double>(total) / static_cast<double>(conv_it->second);
}

CorpusSummary corpus_summary(const Corpus& corpus) {
    CorpusSummary s;
    s.conversations = corpus.size();
    for (const auto& c : corpus.conversations) {
        s.turns += c.turns.size();
        s.by_condition[c.condition] += 1;
        s.turns_by_condition[c.condition] += c.turns.size();
        s.turn_count_histogram[c.turns.size()] += 1;
        for (const auto& t : c.turns) {
            if (!t.turn_ratings) continue;
            s.rated_turns_by_condition[c.condition] += 1;
            for (const auto& e : t.turn_ratings->emotions)
                s.emotion_incidence[c.condition][e] += 1;
        }
    }
    return s;
}

json to_json(const CorpusSummary& s) {
    json j;
    j["conversations"] = s.conversations;
    j["turns"] = s.turns;
    for (const auto& [cond, count] : s.by_condition)
        j["by_condition"][to_string(cond)] = count;
    for (const auto& [cond, count] : s.turns_by_condition)
        j["turns_by_condition"][to_string(cond)] = count;
    json hist = json::object();
    for (const auto& [len, count] : s.turn_count_histogram)
        hist[std::to_string(len)] = count;
    j["turn_count_histogram"] = hist;
    for (const auto& [cond, labels] : s.emotion_incidence) {
        json m = json::object();
        for (const auto& [label, count] : labels) m[label] = count;
        j["emotion_incidence"][to_string(cond)] = m;
    }
    for (const auto& [cond, count] : s.rated_turns_by_condition)
        j["rated_turns_by_condition"][to_string(cond)] = count;
    j["median_turns"] = s.median_turns();
    return j;
}

} // namespace simfid
