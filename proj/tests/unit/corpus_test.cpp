#include <doctest.h>

#include <set>

#include "simfid/corpus.hpp"
#include "support/synthetic.hpp"
#include "support/temp.hpp"

using namespace simfid;
using testsupport::TempDir;

namespace {

// A record in the released shape: literal survey strings as rating keys.
const char* kRecordJson = R"({
  "turns": [
    {"user_utterance": "Hoodie",
     "assistant_utterance": "**Are you looking for a hoodie for a specific gender or occasion?**",
     "recommendations": [
       {"item_id": "B09825F9GP", "title": "Men's Fashion Hoodie",
        "description": "A fashion hoodie.", "features": "Casual, Comfortable",
        "image_url": "https://example.com/a.jpg"}],
     "ratings": {"Frustrated": true, "In control": true, "Satisfied": true,
       "How likely would you be to purchase one of the recommended products in this turn?": "Probably not"}},
    {"user_utterance": "Blue colour ",
     "assistant_utterance": "**Here are some blue hoodies.**",
     "recommendations": [],
     "ratings": {"Delighted": true,
       "How likely would you be to purchase one of the recommended products in this turn?": "Extremely likely"}}
  ],
  "ratings": {
    "Were you able to find a product you would consider purchasing?": "Yes",
    "How often do you shop online?": "Rarely",
    "The conversation felt unnatural": true,
    "It was hard to use the system": true,
    "If yes, which product would you consider purchasing? If no, why not?": "The blue one "
  },
  "task_id": "footwear_good"
})";

} // namespace

TEST_CASE("parse_condition follows the task-id suffix rule") {
    CHECK(parse_condition("footwear_good") == AgentCondition::good);
    CHECK(parse_condition("outerwear_bad") == AgentCondition::bad);
    CHECK(parse_condition("") == AgentCondition::unknown);
    CHECK(parse_condition("good") == AgentCondition::unknown);
    CHECK(parse_condition("x_goodish") == AgentCondition::unknown);
}

TEST_CASE("parse_conversation reads the released record shape") {
    const Conversation c = parse_conversation(nlohmann::json::parse(kRecordJson), "file:0");
    CHECK(c.id == "file:0");
    CHECK(c.task_id == "footwear_good");
    CHECK(c.condition == AgentCondition::good);
    CHECK_FALSE(c.is_simulated());
    REQUIRE(c.turns.size() == 2);
    CHECK(c.turns[0].user_utterance == "Hoodie");
    REQUIRE(c.turns[0].recommendations.size() == 1);
    CHECK(c.turns[0].recommendations[0].item_id == "B09825F9GP");
    CHECK(c.turns[0].recommendations[0].description == "A fashion hoodie.");
    REQUIRE(c.turns[0].turn_ratings.has_value());
    CHECK(c.turns[0].turn_ratings->emotions ==
          std::set<std::string>{"Frustrated", "In control", "Satisfied"});
    CHECK(c.turns[0].turn_ratings->purchase_likelihood == PurchaseLikelihood::probably_not);
    REQUIRE(c.task_ratings.has_value());
    CHECK(c.task_ratings->found_product == true);
    CHECK(c.task_ratings->shop_frequency == ShopFrequency::rarely);
    CHECK(c.task_ratings->session_checkboxes ==
          std::set<std::string>{"The conversation felt unnatural", "It was hard to use the system"});
    CHECK(c.task_ratings->considered_product == "The blue one ");
}

TEST_CASE("records round-trip through serialization structurally") {
    const Conversation c = parse_conversation(nlohmann::json::parse(kRecordJson), "file:0");
    const Conversation again = parse_conversation(to_json(c), "file:0");
    CHECK(c == again);

    for (const auto& conv : testsupport::make_fixture_corpus(25, 3).conversations) {
        CHECK(parse_conversation(to_json(conv), conv.id) == conv);
    }
}

TEST_CASE("unknown emotion labels land in the nonstandard bucket and survive round trip") {
    nlohmann::json record = nlohmann::json::parse(kRecordJson);
    record["turns"][0]["ratings"]["Euphoric"] = true;
    const Conversation c = parse_conversation(record, "x");
    CHECK(c.turns[0].turn_ratings->nonstandard == std::set<std::string>{"Euphoric"});
    CHECK(parse_conversation(to_json(c), "x") == c);
}

TEST_CASE("load_corpus handles arrays, lines, and malformed records") {
    TempDir dir;

    SUBCASE("empty array file gives an empty corpus with no diagnostics") {
        const auto path = dir.write("empty.json", "[]");
        const LoadResult r = load_corpus(path);
        CHECK(r.corpus.size() == 0);
        CHECK(r.diagnostics.empty());
    }

    SUBCASE("record missing turns becomes a diagnostic, not a crash") {
        nlohmann::json good = nlohmann::json::parse(kRecordJson);
        std::string lines = good.dump() + "\n";
        lines += "{\"task_id\": \"footwear_bad\"}\n"; // no turns
        lines += good.dump() + "\n";
        const auto path = dir.write("three.jsonl", lines);
        const LoadResult r = load_corpus(path);
        CHECK(r.corpus.size() == 2);
        REQUIRE(r.diagnostics.size() == 1);
        CHECK(r.diagnostics[0].where == "three:1");
        CHECK(r.diagnostics[0].message.find("turns") != std::string::npos);
    }

    SUBCASE("array files load identically to line files") {
        nlohmann::json good = nlohmann::json::parse(kRecordJson);
        const auto array_path =
            dir.write("as_array.json", nlohmann::json::array({good, good}).dump());
        const auto line_path = dir.write("as_lines.jsonl", good.dump() + "\n" + good.dump() + "\n");
        CHECK(load_corpus(array_path).corpus.size() == 2);
        CHECK(load_corpus(line_path).corpus.size() == 2);
    }

    SUBCASE("unreadable file is fatal") {
        CHECK_THROWS_AS(load_corpus(dir.file("missing.json")), Error);
    }

    SUBCASE("invalid JSON line becomes a diagnostic") {
        const auto path = dir.write("bad.jsonl", "{not json}\n");
        const LoadResult r = load_corpus(path);
        CHECK(r.corpus.size() == 0);
        REQUIRE(r.diagnostics.size() == 1);
    }

    SUBCASE("a carousel larger than twelve items rejects the record") {
        nlohmann::json record = nlohmann::json::parse(kRecordJson);
        auto& recs = record["turns"][0]["recommendations"];
        for (int i = 0; i < 13; ++i)
            recs.push_back({{"item_id", "X" + std::to_string(i)}, {"title", "T"}});
        const auto path = dir.write("wide.jsonl", record.dump() + "\n");
        const LoadResult r = load_corpus(path);
        CHECK(r.corpus.size() == 0);
        REQUIRE(r.diagnostics.size() == 1);
    }

    SUBCASE("empty user utterance rejects the record") {
        nlohmann::json record = nlohmann::json::parse(kRecordJson);
        record["turns"][0]["user_utterance"] = "   ";
        const auto path = dir.write("blank.jsonl", record.dump() + "\n");
        const LoadResult r = load_corpus(path);
        CHECK(r.corpus.size() == 0);
        CHECK(r.diagnostics.size() == 1);
    }
}

TEST_CASE("save_corpus then load_corpus preserves every conversation") {
    TempDir dir;
    Corpus corpus = testsupport::make_fixture_corpus(12, 5);
    corpus.conversations[0].source = "prompted"; // a generated record keeps its source
    const auto path = dir.file("out.jsonl");
    save_corpus(corpus, path);
    const LoadResult r = load_corpus(path);
    CHECK(r.diagnostics.empty());
    REQUIRE(r.corpus.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        CHECK(r.corpus.conversations[i] == corpus.conversations[i]);
    CHECK(r.corpus.conversations[0].source == "prompted");
}

TEST_CASE("split_by_condition partitions the corpus") {
    Corpus corpus = testsupport::make_fixture_corpus(10, 7);
    corpus.conversations[3].task_id = "mystery";
    corpus.conversations[3].condition = AgentCondition::unknown;
    const ConditionSplit split = split_by_condition(corpus);
    CHECK(split.good.size() + split.bad.size() + split.unknown.size() == corpus.size());
    std::multiset<std::string> in, out;
    for (const auto& c : corpus.conversations) in.insert(c.id);
    for (const auto& c : split.good.conversations) out.insert(c.id);
    for (const auto& c : split.bad.conversations) out.insert(c.id);
    for (const auto& c : split.unknown.conversations) out.insert(c.id);
    CHECK(in == out);
    CHECK(split.unknown.size() == 1);

    Corpus all_unknown;
    for (auto c : corpus.conversations) {
        c.task_id = "none";
        c.condition = AgentCondition::unknown;
        all_unknown.conversations.push_back(c);
    }
    const ConditionSplit u = split_by_condition(all_unknown);
    CHECK(u.good.size() == 0);
    CHECK(u.bad.size() == 0);
    CHECK(u.unknown.size() == all_unknown.size());
}

TEST_CASE("sample_disjoint draws disjoint equal halves deterministically") {
    const Corpus corpus = testsupport::make_fixture_corpus(20, 9);

    auto [a1, b1] = sample_disjoint(corpus, 7, 42);
    auto [a2, b2] = sample_disjoint(corpus, 7, 42);
    CHECK(a1.size() == 7);
    CHECK(b1.size() == 7);
    std::set<std::string> ids_a, ids_b;
    for (const auto& c : a1.conversations) ids_a.insert(c.id);
    for (const auto& c : b1.conversations) ids_b.insert(c.id);
    for (const auto& id : ids_a) CHECK_FALSE(ids_b.contains(id));
    // same seed twice gives identical draws
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(a1.conversations[i].id == a2.conversations[i].id);
        CHECK(b1.conversations[i].id == b2.conversations[i].id);
    }
    // different seed differs somewhere (overwhelmingly likely)
    auto [a3, b3] = sample_disjoint(corpus, 7, 43);
    bool same = true;
    for (std::size_t i = 0; i < 7; ++i)
        if (a3.conversations[i].id != a1.conversations[i].id) same = false;
    CHECK_FALSE(same);
}

TEST_CASE("sample_disjoint on a two-conversation corpus yields the two singletons") {
    const Corpus corpus = testsupport::make_fixture_corpus(2, 13);
    auto [a, b] = sample_disjoint(corpus, 1, 5);
    CHECK(a.size() == 1);
    CHECK(b.size() == 1);
    CHECK(a.conversations[0].id != b.conversations[0].id);
}

TEST_CASE("sample_disjoint names the required size when the corpus is too small") {
    const Corpus corpus = testsupport::make_fixture_corpus(5, 13);
    try {
        sample_disjoint(corpus, 3, 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("6") != std::string::npos);
    }
}

TEST_CASE("corpus_summary counts everything consistently") {
    SUBCASE("empty corpus is all zero") {
        const CorpusSummary s = corpus_summary(Corpus{});
        CHECK(s.conversations == 0);
        CHECK(s.turns == 0);
        CHECK(s.median_turns() == doctest::Approx(0.0));
    }

    SUBCASE("hand-built two-conversation fixture") {
        Conversation a;
        a.id = "a";
        a.task_id = "footwear_good";
        a.condition = AgentCondition::good;
        Turn t1;
        t1.user_utterance = "Hoodie";
        TurnRatings r1;
        r1.emotions = {"Satisfied", "Engaged"};
        t1.turn_ratings = r1;
        a.turns = {t1};

        Conversation b;
        b.id = "b";
        b.task_id = "footwear_bad";
        b.condition = AgentCondition::bad;
        Turn t2;
        t2.user_utterance = "Boots";
        TurnRatings r2;
        r2.emotions = {"Frustrated"};
        t2.turn_ratings = r2;
        Turn t3;
        t3.user_utterance = "Red ones";
        b.turns = {t2, t3};

        const CorpusSummary s = corpus_summary(Corpus{{a, b}});
        CHECK(s.conversations == 2);
        CHECK(s.turns == 3);
        CHECK(s.by_condition.at(AgentCondition::good) == 1);
        CHECK(s.by_condition.at(AgentCondition::bad) == 1);
        CHECK(s.turn_count_histogram.at(1) == 1);
        CHECK(s.turn_count_histogram.at(2) == 1);
        CHECK(s.emotion_incidence.at(AgentCondition::good).at("Satisfied") == 1);
        CHECK(s.emotion_incidence.at(AgentCondition::bad).at("Frustrated") == 1);
        CHECK(s.rated_turns_by_condition.at(AgentCondition::bad) == 1);
        CHECK(s.median_turns() == doctest::Approx(1.5));
        CHECK(s.mean_turns(AgentCondition::bad) == doctest::Approx(2.0));
    }

    SUBCASE("turn total equals the sum over conversations") {
        const Corpus corpus = testsupport::make_fixture_corpus(30, 21);
        const CorpusSummary s = corpus_summary(corpus);
        std::size_t total = 0;
        for (const auto& c : corpus.conversations) total += c.turns.size();
        CHECK(s.turns == total);
        std::size_t hist_total = 0;
        for (const auto& [len, count] : s.turn_count_histogram) hist_total += len * count;
        CHECK(hist_total == total);
    }
}
