#pragma once

#include <span>
#include <string>
#include <string_view>

#include "simfid/corpus.hpp"

namespace simfid::prompts {

// Conversation-evaluation rater prompt; placeholder: {conversation}.
extern const std::string_view kJudgeTemplate;

// Shopping-user simulator prompt; placeholders: {category}, {category_short},
// {examples}, {conversation}.
extern const std::string_view kUserSimTemplate;

// Human-vs-simulation forensic classification prompt; placeholder:
// {conversation}.
extern const std::string_view kForensicTemplate;

// Recommender-agent prompts; placeholder: {conversation}.
extern const std::string_view kHelpfulAgentTemplate;
extern const std::string_view kUnhelpfulAgentTemplate;

// Replaces every occurrence of `placeholder` in `text`.
std::string replace_all(std::string text, std::string_view placeholder, std::string_view value);

// Turn-numbered plain-text transcript:
//   ======
//   Turn 0:
//   User Utterance: ...
//   Assistant Utterance: ...
//   Recommendations:
//   Item 0: Title: ...
//   ======
// A closing separator line ends the block. Turns without recommendations
// render no Recommendations section.
std::string render_transcript(std::span<const Turn> turns);

// App-style labeled block: "Conversation:" header, transcript, "Label: x".
std::string render_labeled_transcript(const Conversation& conversation, std::string_view label);

} // namespace simfid::prompts
