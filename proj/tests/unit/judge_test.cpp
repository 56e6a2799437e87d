#include <doctest.h>

#include "simfid/judge.hpp"
#include "simfid/prompts.hpp"
#include "support/temp.hpp"

using namespace simfid;
using testsupport::TempDir;

namespace {

Conversation one_turn_conversation() {
    Conversation c;
    c.id = "conv:0";
    c.task_id = "footwear_good";
    c.condition = AgentCondition::good;
    Turn t;
    t.user_utterance = "Does it come in size 9?";
    t.assistant_utterance = "Yes, the Pulltop sneakers do.";
    CatalogItemRef item;
    item.item_id = "B1";
    item.title = "Pulltop Knit Lightweight Sneakers";
    t.recommendations.push_back(item);
    c.turns.push_back(t);
    return c;
}

std::string minimal_judge_json(int satisfaction) {
    nlohmann::json j;
    j["user_satisfaction"] = satisfaction;
    return j.dump();
}

nlohmann::json full_valid_judge_json() {
    nlohmann::json j;
    j["user_sentiment"] = 4;
    j["user_satisfaction"] = 4;
    j["user_frustration_annoyance"] = 2;
    j["user_confusion"] = 1;
    j["recommendation_accepted"] = true;
    j["turns_until_acceptance"] = 1;
    j["assistant_turns_with_question"] = 0;
    j["user_turns_with_question"] = 1;
    j["user_dialog_acts"] = {{"ask_clarification", 1}};
    j["assistant_dialog_acts"] = {{"recommend", 1}};
    j["evaluation_details"] = {
        {"relevance_of_recommendations", {{"rating", 4.5}, {"explanation", "good match"}}},
        {"dialogue_quality", {{"rating", 4.0}, {"explanation", "clear"}}},
        {"task_completion", {{"rating", 4.0}, {"explanation", "found it"}}},
        {"ease_of_use", {{"rating", 5.0}, {"explanation", "smooth"}}}};
    j["overall_summary_explanation"] = "solid run";
    j["overall_agent_rating"] = 4.2;
    return j;
}

} // namespace

TEST_CASE("render_judge_prompt embeds the transcript into the rater template") {
    const Conversation c = one_turn_conversation();
    const std::string prompt = render_judge_prompt(c);
    CHECK(prompt.find("You are an expert rater meticulously evaluating") != std::string::npos);
    CHECK(prompt.find("Turn 0:") != std::string::npos);
    CHECK(prompt.find("User Utterance: Does it come in size 9?") != std::string::npos);
    CHECK(prompt.find("Assistant Utterance: Yes, the Pulltop sneakers do.") != std::string::npos);
    CHECK(prompt.find("Item 0: Title: Pulltop Knit Lightweight Sneakers") != std::string::npos);
    CHECK(prompt.find("{conversation}") == std::string::npos);
}

TEST_CASE("render_judge_prompt lists all twelve carousel titles") {
    Conversation c = one_turn_conversation();
    c.turns[0].recommendations.clear();
    for (int i = 0; i < 12; ++i) {
        CatalogItemRef item;
        item.item_id = "X" + std::to_string(i);
        item.title = "Title " + std::to_string(i);
        c.turns[0].recommendations.push_back(item);
    }
    const std::string prompt = render_judge_prompt(c);
    for (int i = 0; i < 12; ++i) {
        CHECK(prompt.find("Item " + std::to_string(i) + ": Title: Title " + std::to_string(i)) !=
              std::string::npos);
    }
}

TEST_CASE("render_judge_prompt renders item-free turns without item lines") {
    Conversation c = one_turn_conversation();
    c.turns[0].recommendations.clear();
    const std::string prompt = render_judge_prompt(c);
    CHECK(prompt.find("Item 0:") == std::string::npos);
    CHECK(prompt.find("Turn 0:") != std::string::npos);
}

TEST_CASE("parse_judge_output accepts a minimal object") {
    const auto parsed = parse_judge_output(minimal_judge_json(4));
    CHECK(parsed.annotation.user_satisfaction == 4);
    CHECK(parsed.annotation.user_sentiment == 3); // neutral default
    // all act keys are present with zero defaults
    for (auto act : kUserDialogActs)
        CHECK(parsed.annotation.user_dialog_acts.at(std::string(act)) == 0);
    CHECK(parsed.clamp_diagnostics.empty());
}

TEST_CASE("parse_judge_output tolerates surrounding prose and markers") {
    const std::string text = "Sure! Here is my evaluation.\n<json_output_start>\n" +
                             minimal_judge_json(2) + "\n<json_output_end>\nHope this helps.";
    CHECK(parse_judge_output(text).annotation.user_satisfaction == 2);
}

TEST_CASE("parse_judge_output clamps real scores and records a diagnostic") {
    nlohmann::json j = full_valid_judge_json();
    j["overall_agent_rating"] = 5.4;
    const auto parsed = parse_judge_output(j.dump());
    CHECK(parsed.annotation.overall_agent_rating == doctest::Approx(5.0));
    REQUIRE(parsed.clamp_diagnostics.size() == 1);
    CHECK(parsed.clamp_diagnostics[0].find("overall_agent_rating") != std::string::npos);
}

TEST_CASE("parse_judge_output rejects bad input") {
    CHECK_THROWS_AS(parse_judge_output("no braces at all"), Error);
    CHECK_THROWS_AS(parse_judge_output("{\"user_satisfaction\": 6}"), Error);
    CHECK_THROWS_AS(parse_judge_output("{\"user_satisfaction\": 0}"), Error);
    CHECK_THROWS_AS(parse_judge_output("{\"user_turns_with_question\": -1}"), Error);
    CHECK_THROWS_AS(parse_judge_output("{\"user_satisfaction\": \"four\"}"), Error);
}

TEST_CASE("parse_judge_output treats NaN acceptance turns as zero") {
    nlohmann::json j = full_valid_judge_json();
    j["turns_until_acceptance"] = "NaN";
    CHECK(parse_judge_output(j.dump()).annotation.turns_until_acceptance == 0);
}

TEST_CASE("a full annotation round-trips through its JSON form") {
    const auto parsed = parse_judge_output(full_valid_judge_json().dump());
    const auto again = parse_judge_output(to_json(parsed.annotation).dump());
    CHECK(parsed.annotation == again.annotation);
}

TEST_CASE("annotate runs render-generate-parse with retries and a store") {
    const Conversation c = one_turn_conversation();
    const JudgeOptions options;

    SUBCASE("fixed valid reply passes straight through") {
        StubProvider stub(full_valid_judge_json().dump());
        const AnnotateResult r = annotate(c, stub, options);
        CHECK(r.annotation.user_satisfaction == 4);
        CHECK_FALSE(r.from_cache);
        CHECK(stub.call_count() == 1);
    }

    SUBCASE("garbage then valid succeeds after one retry") {
        StubProvider stub("unused-default");
        stub.push_reply("riddle me this").push_reply(full_valid_judge_json().dump());
        const AnnotateResult r = annotate(c, stub, options);
        CHECK(r.annotation.user_satisfaction == 4);
        CHECK(stub.call_count() == 2);
    }

    SUBCASE("retry budget exhausts into an error") {
        StubProvider stub("still garbage");
        CHECK_THROWS_AS(annotate(c, stub, options), Error);
        CHECK(stub.call_count() == 4); // initial ask plus three re-asks
    }

    SUBCASE("question counts above the turn count are validation failures") {
        nlohmann::json j = full_valid_judge_json();
        j["user_turns_with_question"] = 9;
        StubProvider stub(j.dump());
        CHECK_THROWS_AS(annotate(c, stub, options), Error);
    }

    SUBCASE("the store serves repeat calls without backend traffic") {
        TempDir dir;
        AnnotationStore store(dir.path());
        StubProvider stub(full_valid_judge_json().dump());
        const AnnotateResult first = annotate(c, stub, options, &store);
        CHECK_FALSE(first.from_cache);
        CHECK(stub.call_count() == 1);
        const AnnotateResult second = annotate(c, stub, options, &store);
        CHECK(second.from_cache);
        CHECK(stub.call_count() == 1);
        CHECK(first.annotation == second.annotation);

        // a changed transcript misses the cache
        Conversation changed = c;
        changed.turns[0].user_utterance = "Show me boots instead";
        annotate(changed, stub, options, &store);
        CHECK(stub.call_count() == 2);
    }
}

TEST_CASE("rule_judge counts questions and classifies acts deterministically") {
    Conversation c = one_turn_conversation();
    const JudgeAnnotation a = rule_judge(c);
    CHECK(a.user_turns_with_question >= 1);
    CHECK(a.user_dialog_acts.at("ask_clarification") == 1);
    CHECK(rule_judge(c) == a); // pure function
}

TEST_CASE("rule_judge maps fully satisfied ratings to the top ordinal") {
    Conversation c = one_turn_conversation();
    TurnRatings r;
    r.emotions = {"Satisfied"};
    c.turns[0].turn_ratings = r;
    Turn second = c.turns[0];
    second.user_utterance = "Great, I'll take it";
    TurnRatings r2;
    r2.emotions = {"Delighted"};
    second.turn_ratings = r2;
    c.turns.push_back(second);
    const JudgeAnnotation a = rule_judge(c);
    CHECK(a.user_satisfaction == 5);
    CHECK(a.recommendation_accepted);
    CHECK(a.turns_until_acceptance == 1);
}

TEST_CASE("rule_judge with no signals stays neutral") {
    Conversation c;
    c.id = "neutral";
    Turn t;
    t.user_utterance = "zzz qqq";
    t.assistant_utterance = "mmm";
    c.turns.push_back(t);
    const JudgeAnnotation a = rule_judge(c);
    CHECK(a.user_satisfaction == 3);
    CHECK(a.user_sentiment == 3);
    CHECK(a.user_frustration_annoyance == 3);
    CHECK(a.user_confusion == 3);
    CHECK(a.user_dialog_acts.at("other") == 1);
    for (auto act : kUserDialogActs)
        if (std::string(act) != "other") CHECK(a.user_dialog_acts.at(std::string(act)) == 0);
}

TEST_CASE("first-person mapping follows the declared arithmetic") {
    Conversation c;
    c.id = "fp";
    for (int i = 0; i < 4; ++i) {
        Turn t;
        t.user_utterance = "turn " + std::to_string(i);
        TurnRatings r;
        if (i < 3) r.emotions.insert("Satisfied"); // 3 of 4 rated turns satisfied
        if (i == 0) r.emotions.insert("Annoyed");  // 1 of 4 frustrated
        t.turn_ratings = r;
        c.turns.push_back(t);
    }
    TaskRatings task;
    task.found_product = true;
    c.task_ratings = task;

    const FirstPersonRatings fp = first_person_ratings(c);
    CHECK(fp.has_rated_turns);
    CHECK(fp.satisfaction == 4); // 1 + round(4 * 0.75)
    CHECK(fp.frustration == 2);  // 1 + round(4 * 0.25)
    CHECK(fp.acceptance == true);

    const Conversation unrated = [] {
        Conversation u;
        u.id = "u";
        Turn t;
        t.user_utterance = "hi there";
        u.turns.push_back(t);
        return u;
    }();
    CHECK_FALSE(first_person_ratings(unrated).has_rated_turns);
}

TEST_CASE("kendall_agreement delegates to the tie-corrected statistic") {
    const std::vector<int> inc = {1, 2, 3};
    const std::vector<int> dec = {3, 2, 1};
    CHECK(*kendall_agreement(inc, inc) == doctest::Approx(1.0));
    CHECK(*kendall_agreement(inc, dec) == doctest::Approx(-1.0));
    const std::vector<int> longer = {1, 2, 3, 4};
    CHECK_THROWS_AS(kendall_agreement(inc, longer), Error);
    const std::vector<int> single = {1};
    CHECK_THROWS_AS(kendall_agreement(single, single), Error);
}

TEST_CASE("confusion_matrix counts reference rows against predicted columns") {
    const std::vector<std::string> labels = {"no", "yes"};

    SUBCASE("identical lists are diagonal") {
        const std::vector<std::string> v = {"no", "yes", "yes"};
        const auto m = confusion_matrix(v, v, labels);
        CHECK(m[0][0] == 1);
        CHECK(m[1][1] == 2);
        CHECK(m[0][1] == 0);
        CHECK(m[1][0] == 0);
    }

    SUBCASE("hand-counted two-by-two") {
        const std::vector<std::string> reference = {"yes", "yes", "no", "no"};
        const std::vector<std::string> predicted = {"yes", "no", "no", "no"};
        const auto m = confusion_matrix(predicted, reference, labels);
        CHECK(m[1][1] == 1); // yes predicted yes
        CHECK(m[1][0] == 1); // yes predicted no
        CHECK(m[0][0] == 2);
        CHECK(m[0][1] == 0);
        // row sums equal reference label counts; total equals list length
        CHECK(m[0][0] + m[0][1] == 2);
        CHECK(m[1][0] + m[1][1] == 2);
    }

    SUBCASE("unknown labels are rejected") {
        const std::vector<std::string> bad = {"maybe"};
        const std::vector<std::string> good = {"yes"};
        CHECK_THROWS_AS(confusion_matrix(bad, good, labels), Error);
        CHECK_THROWS_AS(confusion_matrix(good, bad, labels), Error);
    }
}
