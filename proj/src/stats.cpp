#include "simfid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace simfid::stats {

namespace {

constexpr double kPEps = 1e-9;

double clamp_p(double p) { return std::min(1.0, std::max(0.0, p)); }

// Midranks of the pooled sample (ties share the average rank, 1-based).
std::vector<double> midranks(std::vector<double> pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[k] = avg;
        i = j + 1;
    }
    return ranks;
}

// Counts subsets of size `na` of `ranks` whose rank sum is at least as far
// from the null mean as the observed one.
struct ExactMwuCounter {
    const std::vector<double>& ranks;
    std::size_t na;
    double mean_u;
    double observed_dev;
    double offset; // na*(na+1)/2, converts rank sum to U
    std::uint64_t extreme = 0;
    std::uint64_t total = 0;

    void walk(std::size_t next, std::size_t chosen, double rank_sum) {
        if (chosen == na) {
            ++total;
            const double u = rank_sum - offset;
            if (std::abs(u - mean_u) >= observed_dev - kPEps) ++extreme;
            return;
        }
        if (ranks.size() - next < na - chosen) return;
        walk(next + 1, chosen + 1, rank_sum + ranks[next]);
        walk(next + 1, chosen, rank_sum);
    }
};

} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-10) break;
        sign = -sign;
    }
    return clamp_p(2.0 * sum);
}

double chi_square_sf(double x, int dof) {
    if (dof < 1) throw Error("chi_square_sf: dof must be >= 1");
    if (x <= 0.0) return 1.0;
    // S(x;1) = erfc(sqrt(x/2)); S(x;2) = exp(-x/2);
    // S(x;k) = S(x;k-2) + (x/2)^(k/2-1) exp(-x/2) / Gamma(k/2)
    double s = (dof % 2 == 1) ? std::erfc(std::sqrt(x / 2.0)) : std::exp(-x / 2.0);
    for (int k = (dof % 2 == 1) ? 3 : 4; k <= dof; k += 2) {
        const double half = static_cast<double>(k) / 2.0;
        s += std::exp((half - 1.0) * std::log(x / 2.0) - x / 2.0 - std::lgamma(half));
    }
    return clamp_p(s);
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMode mode) {
    if (a.empty() || b.empty()) throw Error("mann_whitney_u: empty sample");
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n = na + nb;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = pooled[order[i]];
    const std::vector<double> ranks = midranks(sorted);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (order[i] < na) rank_sum_a += ranks[i];
    const double u = rank_sum_a - static_cast<double>(na) * (na + 1) / 2.0;
    const double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;

    const bool exact = mode == MwuMode::exact ||
                       (mode == MwuMode::automatic && n <= kMwuExactCutoff);
    TestResult result;
    result.statistic = u;
    if (exact) {
        ExactMwuCounter counter{ranks, na, mean_u, std::abs(u - mean_u),
                                static_cast<double>(na) * (na + 1) / 2.0};
        counter.walk(0, 0, 0.0);
        result.p_value = static_cast<double>(counter.extreme) / static_cast<double>(counter.total);
        result.method = Method::exact;
        return result;
    }

    // tie correction term: sum over tie groups of (t^3 - t)
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double nd = static_cast<double>(n);
    const double variance = (static_cast<double>(na) * nb / 12.0) *
                            (nd + 1.0 - tie_term / (nd * (nd - 1.0)));
    if (variance <= 0.0) {
        result.p_value = 1.0; // all observations tied
        result.method = Method::asymptotic;
        return result;
    }
    double dev = std::abs(u - mean_u) - 0.5; // continuity correction
    if (dev < 0.0) dev = 0.0;
    const double z = dev / std::sqrt(variance);
    result.p_value = clamp_p(2.0 * (1.0 - normal_cdf(z)));
    result.method = Method::asymptotic;
    return result;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    double d = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < sa.size() && ib < sb.size()) {
        const double x = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= x) ++ia;
        while (ib < sb.size() && sb[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }

    TestResult result;
    result.statistic = d;
    const double ne = na * nb / (na + nb);
    result.p_value = kolmogorov_q(std::sqrt(ne) * d);
    result.method = Method::asymptotic;
    return result;
}

TestResult chi_square(const std::vector<std::vector<double>>& table) {
    if (table.size() < 2) throw Error("chi_square: need at least 2 rows");
    const std::size_t cols = table.front().size();
    if (cols < 2) throw Error("chi_square: need at least 2 columns");
    for (const auto& row : table) {
        if (row.size() != cols) throw Error("chi_square: ragged table");
        for (double v : row)
            if (v < 0.0) throw Error("chi_square: negative count");
    }
    std::vector<double> row_sum(table.size(), 0.0);
    std::vector<double> col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            row_sum[r] += table[r][c];
            col_sum[c] += table[r][c];
            total += table[r][c];
        }
    }
    for (double v : row_sum)
        if (v == 0.0) throw Error("chi_square: all-zero row");
    for (double v : col_sum)
        if (v == 0.0) throw Error("chi_square: all-zero column");

    double stat = 0.0;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double expected = row_sum[r] * col_sum[c] / total;
            const double diff = table[r][c] - expected;
            stat += diff * diff / expected;
        }
    }
    const int dof = static_cast<int>((table.size() - 1) * (cols - 1));
    TestResult result;
    result.statistic = stat;
    result.p_value = chi_square_sf(stat, dof);
    result.method = Method::asymptotic;
    return result;
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("kendall_tau_b: length mismatch");
    if (x.size() < 2) throw Error("kendall_tau_b: need at least 2 observations");
    const std::size_t n = x.size();
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t ties_x = 0; // pairs tied in x (including both)
    std::int64_t ties_y = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0) ++ties_x;
            if (dy == 0.0) ++ties_y;
            if (dx == 0.0 || dy == 0.0) continue;
            if (dx * dy > 0.0) ++concordant;
            else ++discordant;
        }
    }
    const auto n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    if (ties_x == n0 || ties_y == n0) return std::nullopt; // constant list
    const double denom = std::sqrt(static_cast<double>(n0 - ties_x)) *
                         std::sqrt(static_cast<double>(n0 - ties_y));
    return static_cast<double>(concordant - discordant) / denom;
}

std::vector<AlignmentRow> align(const MetricTable& a, const MetricTable& b,
                                std::span<const std::string> metric_names) {
    std::vector<AlignmentRow> rows;
    rows.reserve(metric_names.size());
    for (const auto& name : metric_names) {
        auto ia = a.find(name);
        auto ib = b.find(name);
        if (ia == a.end() || ib == b.end())
            throw Error("align: metric missing from a sample set: " + name);
        AlignmentRow row;
        row.metric_name = name;
        row.mwu = mann_whitney_u(ia->second, ib->second);
        row.ks = ks_two_sample(ia->second, ib->second);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace simfid::stats
