#pragma once

#include <cstdint>

#include "simfid/agent.hpp"
#include "simfid/corpus.hpp"

namespace simfid::testsupport {

// Parameters of the synthetic stand-in corpus. Defaults mirror the released
// dataset's headline shape: conversation/turn totals, 80/20 condition split,
// per-condition emotion incidence, and a sparse found-product answer table
// whose acceptance drop is ~11 points without reaching significance.
struct SyntheticSpec {
    std::size_t conversations = 4146;
    std::size_t total_turns = 14736; // exact total; 0 disables the adjustment
    double good_fraction = 0.8;
    std::uint64_t seed = 20250809;
    std::size_t found_answered_good = 180;
    std::size_t found_yes_good = 140;
    std::size_t found_answered_bad = 45;
    std::size_t found_yes_bad = 30;
};

Corpus make_synthetic_corpus(const SyntheticSpec& spec = {});

// Small, diverse corpus for unit and integration fixtures. Each conversation
// carries unique user text; half good, half bad condition.
Corpus make_fixture_corpus(std::size_t n, std::uint64_t seed = 1);

Catalog make_synthetic_catalog(std::size_t items = 60, std::uint64_t seed = 7);

} // namespace simfid::testsupport
