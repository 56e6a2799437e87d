#include <doctest.h>

#include "simfid/text.hpp"

using namespace simfid;

TEST_CASE("strip_markdown removes emphasis, breaks and backticks") {
    CHECK(text::strip_markdown("**Take a look!**") == "Take a look!");
    CHECK(text::strip_markdown("a<br>b") == "a b");
    CHECK(text::strip_markdown("`code` here") == "code here");
    CHECK(text::strip_markdown("  spaced   out \n text ") == "spaced out text");
    CHECK(text::strip_markdown("") == "");
}

TEST_CASE("word_count counts whitespace tokens after stripping") {
    CHECK(text::word_count("Hoodie") == 1);
    CHECK(text::word_count("Blue colour ") == 2);
    CHECK(text::word_count("Does it come in size 9?") == 6);
    CHECK(text::word_count("**bold** and<br>broken") == 3);
    CHECK(text::word_count("") == 0);
}

TEST_CASE("alnum_tokens lowercases and splits on punctuation") {
    CHECK(text::alnum_tokens("size 9?") == std::vector<std::string>{"size", "9"});
    CHECK(text::alnum_tokens("Men hoodie") == std::vector<std::string>{"men", "hoodie"});
    CHECK(text::alnum_tokens("I'd like-it") == std::vector<std::string>{"i", "d", "like", "it"});
    CHECK(text::alnum_tokens("?!").empty());
}

TEST_CASE("contains_question and trim") {
    CHECK(text::contains_question("really?"));
    CHECK_FALSE(text::contains_question("sure."));
    CHECK(text::trim("  x  ") == "x");
    CHECK(text::trim("\t\n") == "");
    CHECK(text::lowercase("AbC") == "abc");
}
