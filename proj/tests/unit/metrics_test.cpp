#include <doctest.h>

#include "simfid/metrics.hpp"
#include "support/synthetic.hpp"
#include "support/temp.hpp"

using namespace simfid;
using testsupport::TempDir;

namespace {

Conversation conversation_from_user_turns(std::vector<std::string> user_texts) {
    Conversation c;
    c.id = "m:0";
    for (auto& text : user_texts) {
        Turn t;
        t.user_utterance = std::move(text);
        t.assistant_utterance = "**Here are some options?**";
        c.turns.push_back(std::move(t));
    }
    return c;
}

} // namespace

TEST_CASE("direct_metrics on the hoodie fixture") {
    const auto c = conversation_from_user_turns({"Hoodie", "Blue colour "});
    const DirectMetrics m = direct_metrics(c);
    CHECK(m.num_turns == 2);
    CHECK(m.mean_user_words == doctest::Approx(1.5));
    CHECK(m.user_turns_with_question == 0);
    CHECK(m.assistant_turns_with_question == 2);
}

TEST_CASE("direct_metrics counts question turns") {
    const auto c = conversation_from_user_turns({"Does it come in size 9?"});
    const DirectMetrics m = direct_metrics(c);
    CHECK(m.num_turns == 1);
    CHECK(m.mean_user_words == doctest::Approx(6.0));
    CHECK(m.user_turns_with_question == 1);
}

TEST_CASE("direct_metrics single-word floor case") {
    const auto c = conversation_from_user_turns({"boots"});
    const DirectMetrics m = direct_metrics(c);
    CHECK(m.num_turns == 1);
    CHECK(m.mean_user_words == doctest::Approx(1.0));
    CHECK(m.user_turns_with_question == 0);
}

TEST_CASE("user-side statistics ignore assistant content") {
    auto a = conversation_from_user_turns({"red shoes", "in size 9"});
    auto b = a;
    for (auto& t : b.turns) t.assistant_utterance = "completely different words, no question";
    const DirectMetrics ma = direct_metrics(a);
    const DirectMetrics mb = direct_metrics(b);
    CHECK(ma.num_turns == mb.num_turns);
    CHECK(ma.mean_user_words == mb.mean_user_words);
    CHECK(ma.user_turns_with_question == mb.user_turns_with_question);
}

TEST_CASE("build_sample merges direct metrics with the annotation") {
    const auto c = conversation_from_user_turns({"Does it come in size 9?", "I'll take it"});
    JudgeAnnotation annotation;
    annotation.user_satisfaction = 4;
    annotation.user_frustration_annoyance = 2;
    annotation.user_confusion = 1;
    annotation.user_sentiment = 5;
    annotation.recommendation_accepted = true;
    annotation.user_dialog_acts["accept_recommendation"] = 2;

    const MetricSample s = build_sample(c, annotation);
    CHECK(s.conversation_id == "m:0");
    CHECK(s.num_turns == 2);
    CHECK(s.user_turns_with_question == 1);
    CHECK(s.satisfaction == 4);
    CHECK(s.sentiment == 5);
    CHECK(s.recommendation_accepted);
    CHECK(s.act_counts.at("accept_recommendation") == 2);
    // acts absent from the annotation default to zero
    CHECK(s.act_counts.at("critique") == 0);
    CHECK(s.act_counts.at("other") == 0);
}

TEST_CASE("metric_value exposes the canonical table names") {
    const auto c = conversation_from_user_turns({"one two three"});
    JudgeAnnotation annotation;
    annotation.user_dialog_acts["critique"] = 3;
    const MetricSample s = build_sample(c, annotation);
    CHECK(metric_value(s, "Num turns") == doctest::Approx(1.0));
    CHECK(metric_value(s, "Num user words") == doctest::Approx(3.0));
    CHECK(metric_value(s, "Critique") == doctest::Approx(3.0));
    CHECK(metric_value(s, "Satisfaction") == doctest::Approx(3.0));
    CHECK_THROWS_AS(metric_value(s, "No such metric"), Error);
}

TEST_CASE("build_sample_set skips unannotated conversations with diagnostics") {
    const Corpus corpus = testsupport::make_fixture_corpus(3, 2);
    std::map<std::string, JudgeAnnotation> annotations;
    annotations[corpus.conversations[0].id] = JudgeAnnotation{};
    annotations[corpus.conversations[2].id] = JudgeAnnotation{};

    const SampleSetResult r = build_sample_set(corpus, annotations, "fixture");
    CHECK(r.set.name == "fixture");
    CHECK(r.set.samples.size() == 2);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].where == corpus.conversations[1].id);
    CHECK(r.set.samples.size() + r.skipped.size() == corpus.size());
    // stable id ordering
    CHECK(r.set.samples[0].conversation_id < r.set.samples[1].conversation_id);
}

TEST_CASE("build_sample_set of an empty corpus is empty") {
    const SampleSetResult r = build_sample_set(Corpus{}, {}, "empty");
    CHECK(r.set.samples.empty());
    CHECK(r.skipped.empty());
}

TEST_CASE("sample sets round-trip through CSV") {
    const Corpus corpus = testsupport::make_fixture_corpus(8, 4);
    std::map<std::string, JudgeAnnotation> annotations;
    for (const auto& c : corpus.conversations) annotations[c.id] = rule_judge(c);
    const SampleSet set = build_sample_set(corpus, annotations, "rt").set;

    TempDir dir;
    const auto path = dir.file("set.csv");
    write_sample_set_csv(set, path);
    const SampleSet loaded = read_sample_set_csv(path, "rt");

    REQUIRE(loaded.samples.size() == set.samples.size());
    std::vector<std::string> names(kAlignmentMetricNames.begin(), kAlignmentMetricNames.end());
    const auto original = metric_table(set, names);
    const auto reread = metric_table(loaded, names);
    for (const auto& name : names) {
        REQUIRE(original.at(name).size() == reread.at(name).size());
        for (std::size_t i = 0; i < original.at(name).size(); ++i)
            CHECK(original.at(name)[i] == doctest::Approx(reread.at(name)[i]).epsilon(1e-6));
    }
}

TEST_CASE("every sample respects the question and word invariants") {
    const Corpus corpus = testsupport::make_fixture_corpus(40, 6);
    for (const auto& c : corpus.conversations) {
        const MetricSample s = build_sample(c, rule_judge(c));
        CHECK(s.user_turns_with_question <= s.num_turns);
        CHECK(s.mean_user_words >= 0.0);
        CHECK(s.num_turns >= 1);
        for (const auto& [act, count] : s.act_counts) CHECK(count >= 0);
    }
}
