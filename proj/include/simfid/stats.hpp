#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simfid/common.hpp"

namespace simfid::stats {

enum class Method { exact, asymptotic };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    Method method = Method::asymptotic;
};

enum class MwuMode { automatic, exact, asymptotic };

// Two-sided Mann-Whitney U. Exact permutation distribution when the pooled
// size is at most kMwuExactCutoff (automatic mode), otherwise the normal
// approximation with tie and continuity corrections. The statistic is U for
// the first sample.
inline constexpr std::size_t kMwuExactCutoff = 16;
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          MwuMode mode = MwuMode::automatic);

// Two-sample Kolmogorov-Smirnov. D = sup |F_a - F_b|; p-value from the
// asymptotic Kolmogorov distribution at sqrt(n_a*n_b/(n_a+n_b)) * D.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Pearson chi-square test of independence on an r x k count table, no
// continuity correction. Throws on negative counts or degenerate margins.
TestResult chi_square(const std::vector<std::vector<double>>& table);

// Kendall tau-b with tie correction. Returns nullopt when either list is
// constant (0/0 denominator).
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Standard normal CDF.
double normal_cdf(double x);

// Upper tail of the asymptotic Kolmogorov distribution,
// Q(lambda) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2),
// alternating series truncated when a term drops below 1e-10.
double kolmogorov_q(double lambda);

// Survival function of the chi-square distribution for integer degrees of
// freedom, via the two-step recurrence on the dof.
double chi_square_sf(double x, int dof);

struct AlignmentRow {
    std::string metric_name;
    TestResult mwu;
    TestResult ks; // statistic is D in [0,1]
};

// Metric name -> one value per conversation.
using MetricTable = std::map<std::string, std::vector<double>>;

// One row per requested metric, in the given order. Throws when a metric is
// missing from either table.
std::vector<AlignmentRow> align(const MetricTable& a, const MetricTable& b,
                                std::span<const std::string> metric_names);

} // namespace simfid::stats
