#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace simfid {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Non-fatal per-record problem; operations collect these instead of
// aborting a whole batch.
struct Diagnostic {
    std::string where;
    std::string message;
};

// Deterministic uniform integer in [0, n), portable across standard
// library implementations (std::uniform_int_distribution is not).
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_uint(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace simfid
