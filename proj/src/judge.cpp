#include "simfid/judge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "simfid/prompts.hpp"
#include "simfid/stats.hpp"
#include "simfid/text.hpp"

namespace simfid {

using nlohmann::json;

std::string render_judge_prompt(const Conversation& conversation) {
    if (conversation.turns.empty()) throw Error("render_judge_prompt: empty conversation");
    return prompts::replace_all(std::string(prompts::kJudgeTemplate), "{conversation}",
                                prompts::render_transcript(conversation.turns));
}

std::string conversation_content_hash(const Conversation& conversation) {
    return sha256_hex(prompts::render_transcript(conversation.turns));
}

namespace {

// Locates the first balanced {...} block, skipping brace characters inside
// string literals.
std::optional<std::string> extract_first_object(const std::string& text) {
    const auto start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

int require_ordinal(const json& j, const char* key, int fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw Error(std::string("judge output: ") + key + " is not a number");
    const double v = it->get<double>();
    const int rounded = static_cast<int>(std::lround(v));
    if (rounded < 1 || rounded > 5)
        throw Error(std::string("judge output: ") + key + " outside [1,5]: " + std::to_string(v));
    return rounded;
}

int parse_count(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return 0;
    if (it->is_string()) {
        // the schema allows "NaN" for no-acceptance
        const auto s = text::lowercase(it->get<std::string>());
        if (s == "nan" || s.empty()) return 0;
        throw Error(std::string("judge output: ") + key + " is not a count");
    }
    if (!it->is_number()) throw Error(std::string("judge output: ") + key + " is not a count");
    const double v = it->get<double>();
    if (std::isnan(v)) return 0;
    const int rounded = static_cast<int>(std::lround(v));
    if (rounded < 0) throw Error(std::string("judge output: ") + key + " is negative");
    return rounded;
}

template <std::size_t N>
std::map<std::string, int> parse_act_counts(const json& parent, const char* key,
                                            const std::array<std::string_view, N>& known) {
    std::map<std::string, int> acts;
    for (auto act : known) acts[std::string(act)] = 0;
    auto it = parent.find(key);
    if (it == parent.end() || !it->is_object()) return acts;
    for (const auto& [name, value] : it->items()) {
        if (!value.is_number()) continue;
        const int count = static_cast<int>(std::lround(value.template get<double>()));
        if (count < 0) throw Error(std::string("judge output: negative act count for ") + name);
        if (acts.contains(name)) acts[name] = count;
        // unknown act names are dropped; the schema invites extras
    }
    return acts;
}

double clamp_score(double v, const std::string& where, std::vector<std::string>& diags) {
    if (v < 1.0) {
        diags.push_back(where + " clamped from " + std::to_string(v) + " to 1.0");
        return 1.0;
    }
    if (v > 5.0) {
        diags.push_back(where + " clamped from " + std::to_string(v) + " to 5.0");
        return 5.0;
    }
    return v;
}

} // namespace

ParsedJudgeOutput parse_judge_output(const std::string& text) {
    auto block = extract_first_object(text);
    if (!block) throw Error("judge output: no JSON object found");
    json j = json::parse(*block, nullptr, false);
    if (j.is_discarded()) throw Error("judge output: malformed JSON object");

    ParsedJudgeOutput out;
    JudgeAnnotation& a = out.annotation;
    a.user_sentiment = require_ordinal(j, "user_sentiment", 3);
    a.user_satisfaction = require_ordinal(j, "user_satisfaction", 3);
    a.user_frustration_annoyance = require_ordinal(j, "user_frustration_annoyance", 3);
    a.user_confusion = require_ordinal(j, "user_confusion", 3);
    if (auto it = j.find("recommendation_accepted"); it != j.end() && it->is_boolean())
        a.recommendation_accepted = it->get<bool>();
    a.turns_until_acceptance = parse_count(j, "turns_until_acceptance");
    a.assistant_turns_with_question = parse_count(j, "assistant_turns_with_question");
    a.user_turns_with_question = parse_count(j, "user_turns_with_question");
    a.user_dialog_acts = parse_act_counts(j, "user_dialog_acts", kUserDialogActs);
    a.assistant_dialog_acts = parse_act_counts(j, "assistant_dialog_acts", kAssistantDialogActs);

    for (auto criterion : kEvaluationCriteria)
        a.evaluation_details[std::string(criterion)] = CriterionScore{};
    if (auto details = j.find("evaluation_details"); details != j.end() && details->is_object()) {
        for (const auto& [name, value] : details->items()) {
            if (!a.evaluation_details.contains(name) || !value.is_object()) continue;
            CriterionScore score;
            if (auto r = value.find("rating"); r != value.end() && r->is_number())
                score.rating = clamp_score(r->get<double>(), "evaluation_details." + name,
                                           out.clamp_diagnostics);
            if (auto e = value.find("explanation"); e != value.end() && e->is_string())
                score.explanation = e->get<std::string>();
            a.evaluation_details[name] = score;
        }
    }
    if (auto it = j.find("overall_summary_explanation"); it != j.end() && it->is_string())
        a.overall_summary_explanation = it->get<std::string>();
    if (auto it = j.find("overall_agent_rating"); it != j.end() && it->is_number())
        a.overall_agent_rating =
            clamp_score(it->get<double>(), "overall_agent_rating", out.clamp_diagnostics);
    return out;
}

json to_json(const JudgeAnnotation& a) {
    json j;
    j["user_sentiment"] = a.user_sentiment;
    j["user_satisfaction"] = a.user_satisfaction;
    j["user_frustration_annoyance"] = a.user_frustration_annoyance;
    j["user_confusion"] = a.user_confusion;
    j["recommendation_accepted"] = a.recommendation_accepted;
    j["turns_until_acceptance"] = a.turns_until_acceptance;
    j["assistant_turns_with_question"] = a.assistant_turns_with_question;
    j["user_turns_with_question"] = a.user_turns_with_question;
    j["user_dialog_acts"] = a.user_dialog_acts;
    j["assistant_dialog_acts"] = a.assistant_dialog_acts;
    json details = json::object();
    for (const auto& [name, score] : a.evaluation_details) {
        details[name] = json{{"rating", score.rating}, {"explanation", score.explanation}};
    }
    j["evaluation_details"] = details;
    j["overall_summary_explanation"] = a.overall_summary_explanation;
    j["overall_agent_rating"] = a.overall_agent_rating;
    return j;
}

namespace {

JudgeAnnotation annotation_from_json(const json& j) {
    // Stored documents mirror the judge schema; reuse the parser on the dump.
    return parse_judge_output(j.dump()).annotation;
}

} // namespace

AnnotationStore::AnnotationStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

namespace {

std::string safe_filename(const std::string& id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
            out.push_back(c);
        else
            out.push_back('_');
    }
    return out;
}

} // namespace

std::optional<JudgeAnnotation> AnnotationStore::load(const std::string& conversation_id,
                                                     const std::string& content_hash) const {
    const auto path = dir_ / (safe_filename(conversation_id) + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    if (!doc.contains("content_hash") || doc["content_hash"] != content_hash) return std::nullopt;
    try {
        return annotation_from_json(doc.at("annotation"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void AnnotationStore::save(const std::string& conversation_id, const JudgeAnnotation& annotation,
                           const std::string& content_hash, const std::string& judge_model,
                           const std::string& prompt_hash,
                           const std::vector<std::string>& clamp_diagnostics) const {
    json doc;
    doc["conversation_id"] = conversation_id;
    doc["annotation"] = to_json(annotation);
    doc["content_hash"] = content_hash;
    doc["judge_model"] = judge_model;
    doc["prompt_hash"] = prompt_hash;
    doc["clamp_diagnostics"] = clamp_diagnostics;
    const auto path = dir_ / (safe_filename(conversation_id) + ".json");
    std::ofstream out(path);
    if (!out) throw Error("cannot write annotation: " + path.string());
    out << doc.dump(2) << '\n';
}

AnnotateResult annotate(const Conversation& conversation, TextProvider& provider,
                        const JudgeOptions& options, const AnnotationStore* store) {
    const std::string content_hash = conversation_content_hash(conversation);
    if (store != nullptr) {
        if (auto cached = store->load(conversation.id, content_hash))
            return {*cached, true, {}};
    }

    const std::string prompt = render_judge_prompt(conversation);
    GenerationRequest request{prompt, options.model_name, options.temperature,
                              options.max_output_tokens};
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        std::string reply;
        try {
            reply = provider.generate(request);
            ParsedJudgeOutput parsed = parse_judge_output(reply);
            if (parsed.annotation.user_turns_with_question >
                static_cast<int>(conversation.turns.size()))
                throw Error("judge output: user question count exceeds turn count");
            if (store != nullptr)
                store->save(conversation.id, parsed.annotation, content_hash, options.model_name,
                            sha256_hex(prompt), parsed.clamp_diagnostics);
            return {parsed.annotation, false, parsed.clamp_diagnostics};
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw Error("annotation failed for " + conversation.id + " after " +
                std::to_string(options.max_retries + 1) + " attempts: " + last_error);
}

namespace {

bool contains_any(const std::string& haystack, std::initializer_list<const char*> needles) {
    for (const char* n : needles)
        if (haystack.find(n) != std::string::npos) return true;
    return false;
}

std::string classify_user_act(const std::string& utterance) {
    const std::string s = text::lowercase(text::strip_markdown(utterance));
    if (contains_any(s, {"i'll take", "i will take", "i'd like to go with", "i would like to go with",
                         "i'll buy", "i will buy", "i'll purchase", "i will purchase",
                         "i'd like to buy", "i would like to buy", "i'd like to purchase",
                         "i'll go with", "i'll order", "exactly what i was looking for",
                         "i would like to purchase"}))
        return "accept_recommendation";
    if (contains_any(s, {"not interested", "don't like", "do not like", "none of these",
                         "no thanks", "i'll pass", "aren't the ones", "not the ones",
                         "not what i"}))
        return "reject_recommendation";
    if (contains_any(s, {"unhelpful", "useless", "never mind", "nevermind", "not helpful",
                         "waste of time"}))
        return "provide_feedback_negative";
    if (contains_any(s, {"too ", "don't want", "do not want", "without any", "not quite",
                         "doesn't fit", "does not fit", "prefer something"}))
        return "critique";
    if (contains_any(s, {"look great", "looks great", "love these", "love it", "great options"}))
        return "provide_feedback_positive";
    if (contains_any(s, {"thank", "hello", "goodbye", "bye"}) || s == "hi" || s.starts_with("hi ") ||
        s.starts_with("hey"))
        return "greet_thank";
    if (text::contains_question(s)) return "ask_clarification";
    if (contains_any(s, {"i want", "i'm looking", "i am looking", "i need", "i prefer",
                         "looking for", "size ", "color", "colour"}))
        return "inform_preference";
    return "other";
}

int emotion_ordinal(double fraction) {
    return 1 + static_cast<int>(std::lround(4.0 * fraction));
}

} // namespace

JudgeAnnotation rule_judge(const Conversation& conversation) {
    JudgeAnnotation a;
    for (auto act : kUserDialogActs) a.user_dialog_acts[std::string(act)] = 0;
    for (auto act : kAssistantDialogActs) a.assistant_dialog_acts[std::string(act)] = 0;

    int first_accept_turn = -1;
    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
        const Turn& t = conversation.turns[i];
        if (text::contains_question(t.user_utterance)) a.user_turns_with_question += 1;
        if (text::contains_question(t.assistant_utterance)) a.assistant_turns_with_question += 1;
        const std::string act = classify_user_act(t.user_utterance);
        a.user_dialog_acts[act] += 1;
        if (act == "accept_recommendation" && first_accept_turn < 0)
            first_accept_turn = static_cast<int>(i);
        if (text::contains_question(t.assistant_utterance))
            a.assistant_dialog_acts["elicit_preference"] += 1;
        else if (!t.recommendations.empty())
            a.assistant_dialog_acts["recommend"] += 1;
        else
            a.assistant_dialog_acts["other"] += 1;
    }
    a.recommendation_accepted = first_accept_turn >= 0;
    a.turns_until_acceptance = first_accept_turn >= 0 ? first_accept_turn : 0;

    std::size_t rated = 0;
    std::size_t satisfied = 0;
    std::size_t frustrated = 0;
    std::size_t confused = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
    for (const Turn& t : conversation.turns) {
        if (!t.turn_ratings) continue;
        ++rated;
        const auto& e = t.turn_ratings->emotions;
        if (e.contains("Satisfied") || e.contains("Delighted")) ++satisfied;
        if (e.contains("Frustrated") || e.contains("Annoyed")) ++frustrated;
        if (e.contains("Confused")) ++confused;
        if (e.contains("Satisfied") || e.contains("Delighted") || e.contains("Engaged") ||
            e.contains("Supported"))
            ++positive;
        if (e.contains("Frustrated") || e.contains("Annoyed") || e.contains("Unsatisfied") ||
            e.contains("Impatient"))
            ++negative;
    }
    if (rated > 0) {
        const double r = static_cast<double>(rated);
        a.user_satisfaction = emotion_ordinal(static_cast<double>(satisfied) / r);
        a.user_frustration_annoyance = emotion_ordinal(static_cast<double>(frustrated) / r);
        a.user_confusion = emotion_ordinal(static_cast<double>(confused) / r);
        const double balance =
            0.5 + (static_cast<double>(positive) - static_cast<double>(negative)) / (2.0 * r);
        a.user_sentiment = emotion_ordinal(std::clamp(balance, 0.0, 1.0));
    }

    const double relevance = a.user_satisfaction;
    const double quality = 6 - a.user_frustration_annoyance;
    const double completion = a.recommendation_accepted ? 4.0 : 2.0;
    const double ease = 6 - a.user_confusion;
    const char* note = "keyword-rule heuristic";
    a.evaluation_details["relevance_of_recommendations"] = {relevance, note};
    a.evaluation_details["dialogue_quality"] = {quality, note};
    a.evaluation_details["task_completion"] = {completion, note};
    a.evaluation_details["ease_of_use"] = {ease, note};
    a.overall_agent_rating = (relevance + quality + completion + ease) / 4.0;
    return a;
}

FirstPersonRatings first_person_ratings(const Conversation& conversation) {
    FirstPersonRatings r;
    std::size_t rated = 0;
    std::size_t satisfied = 0;
    std::size_t frustrated = 0;
    for (const Turn& t : conversation.turns) {
        if (!t.turn_ratings) continue;
        ++rated;
        const auto& e = t.turn_ratings->emotions;
        if (e.contains("Satisfied") || e.contains("Delighted")) ++satisfied;
        if (e.contains("Frustrated") || e.contains("Annoyed")) ++frustrated;
    }
    if (rated > 0) {
        r.has_rated_turns = true;
        r.satisfaction = emotion_ordinal(static_cast<double>(satisfied) / rated);
        r.frustration = emotion_ordinal(static_cast<double>(frustrated) / rated);
    }
    if (conversation.task_ratings && conversation.task_ratings->found_product)
        r.acceptance = conversation.task_ratings->found_product;
    return r;
}

std::optional<double> kendall_agreement(std::span<const int> judge_values,
                                        std::span<const int> reference_values) {
    if (judge_values.size() != reference_values.size())
        throw Error("kendall_agreement: length mismatch");
    if (judge_values.size() < 2) throw Error("kendall_agreement: need at least 2 pairs");
    std::vector<double> x(judge_values.begin(), judge_values.end());
    std::vector<double> y(reference_values.begin(), reference_values.end());
    return stats::kendall_tau_b(x, y);
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::string> predicted,
                                                       std::span<const std::string> reference,
                                                       std::span<const std::string> label_order) {
    if (predicted.size() != reference.size()) throw Error("confusion_matrix: length mismatch");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < label_order.size(); ++i) index[label_order[i]] = i;
    std::vector<std::vector<std::size_t>> m(label_order.size(),
                                            std::vector<std::size_t>(label_order.size(), 0));
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        auto r = index.find(reference[i]);
        auto p = index.find(predicted[i]);
        if (r == index.end()) throw Error("confusion_matrix: unknown reference label " + reference[i]);
        if (p == index.end()) throw Error("confusion_matrix: unknown predicted label " + predicted[i]);
        m[r->second][p->second] += 1;
    }
    return m;
}

} // namespace simfid
