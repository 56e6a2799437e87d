#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace simfid::text {

// Removes "**", "<br>" and backticks, then collapses whitespace runs to a
// single space and trims the ends. Stored utterances keep their markdown;
// this is applied only inside metric and tokenizer code.
std::string strip_markdown(std::string_view s);

// Whitespace-delimited token count after markdown stripping.
std::size_t word_count(std::string_view s);

// Lowercased alphanumeric tokens: any non-alphanumeric byte splits.
std::vector<std::string> alnum_tokens(std::string_view s);

bool contains_question(std::string_view s);

std::string trim(std::string_view s);
std::string lowercase(std::string_view s);

} // namespace simfid::text
