#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "simfid/stats.hpp"

using namespace simfid;

namespace {

// ---- independent oracles ------------------------------------------------
// These recompute each statistic from the definition by a different route
// than the library implementation.

// U by direct pair comparison (half credit for ties).
double oracle_u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double x : a) {
        for (double y : b) {
            if (x > y) u += 1.0;
            else if (x == y) u += 0.5;
        }
    }
    return u;
}

// Exact two-sided MWU p by enumerating every assignment of pooled positions
// to the first sample.
double oracle_exact_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    const std::size_t na = a.size();
    const double mean_u = static_cast<double>(na) * b.size() / 2.0;
    const double observed = std::abs(oracle_u_statistic(a, b) - mean_u);

    std::vector<std::size_t> pick(na);
    for (std::size_t i = 0; i < na; ++i) pick[i] = i;
    std::uint64_t extreme = 0;
    std::uint64_t total = 0;
    while (true) {
        std::vector<double> ga;
        std::vector<double> gb;
        std::vector<bool> in_a(n, false);
        for (auto i : pick) in_a[i] = true;
        for (std::size_t i = 0; i < n; ++i) (in_a[i] ? ga : gb).push_back(pooled[i]);
        ++total;
        if (std::abs(oracle_u_statistic(ga, gb) - mean_u) >= observed - 1e-12) ++extreme;
        // advance to the next combination
        std::size_t i = na;
        bool advanced = false;
        while (i > 0) {
            --i;
            if (pick[i] != i + n - na) {
                ++pick[i];
                for (std::size_t j = i + 1; j < na; ++j) pick[j] = pick[j - 1] + 1;
                advanced = true;
                break;
            }
        }
        if (!advanced) return static_cast<double>(extreme) / static_cast<double>(total);
    }
}

// KS D by evaluating both empirical CDFs at every pooled sample point.
double oracle_ks_d(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> points(a);
    points.insert(points.end(), b.begin(), b.end());
    double d = 0.0;
    for (double x : points) {
        const double fa =
            static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= x; })) /
            a.size();
        const double fb =
            static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= x; })) /
            b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// Kendall tau-b by pair enumeration with explicit tie bookkeeping.
std::optional<double> oracle_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long long c = 0, d = 0, tx = 0, ty = 0, txy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool ex = x[i] == x[j];
            const bool ey = y[i] == y[j];
            if (ex && ey) ++txy;
            else if (ex) ++tx;
            else if (ey) ++ty;
            else if ((x[i] < x[j]) == (y[i] < y[j])) ++c;
            else ++d;
        }
    }
    const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
    const long long n1 = tx + txy;
    const long long n2 = ty + txy;
    if (n0 == n1 || n0 == n2) return std::nullopt;
    return (static_cast<double>(c) - d) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

// Chi-square survival via the regularized lower incomplete gamma series.
double oracle_chi2_sf(double stat, int dof) {
    const double a = dof / 2.0;
    const double x = stat / 2.0;
    if (x <= 0.0) return 1.0;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (term < sum * 1e-16) break;
    }
    const double p_lower = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return std::clamp(1.0 - p_lower, 0.0, 1.0);
}

double oracle_kolmogorov_q(double lambda) {
    double sum = 0.0;
    for (int j = 1; j <= 1000; ++j)
        sum += (j % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * lambda * lambda);
    return std::clamp(sum, 0.0, 1.0);
}

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n, int distinct) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(bounded_uint(rng, distinct));
    return v;
}

std::vector<double> random_tie_free(std::mt19937_64& rng, std::size_t n) {
    while (true) {
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(bounded_uint(rng, 1u << 30));
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return v;
    }
}

} // namespace

TEST_CASE("mwu identical samples has p 1 under the exact method") {
    const std::vector<double> v = {1, 2, 3};
    const auto r = stats::mann_whitney_u(v, v);
    CHECK(r.method == stats::Method::exact);
    CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("mwu fully separated pair has exact two-sided p 1/3") {
    const std::vector<double> a = {1, 2};
    const std::vector<double> b = {3, 4};
    const auto r = stats::mann_whitney_u(a, b);
    CHECK(r.method == stats::Method::exact);
    CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
    CHECK(r.statistic == doctest::Approx(0.0));
}

TEST_CASE("mwu is symmetric and U_a + U_b = n_a n_b") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_sample(rng, 3 + trial % 6, 5);
        const auto b = random_sample(rng, 2 + trial % 7, 5);
        const auto rab = stats::mann_whitney_u(a, b);
        const auto rba = stats::mann_whitney_u(b, a);
        CHECK(rab.p_value == doctest::Approx(rba.p_value).epsilon(1e-12));
        CHECK(rab.statistic + rba.statistic ==
              doctest::Approx(static_cast<double>(a.size()) * b.size()));
    }
}

TEST_CASE("exact mwu equals the permutation-enumeration oracle") {
    std::mt19937_64 rng(17);
    // exhaustive rank patterns for small pools
    for (std::size_t na = 1; na <= 4; ++na) {
        for (std::size_t nb = 1; nb <= 4; ++nb) {
            const std::size_t n = na + nb;
            std::vector<bool> mask(n, false);
            std::fill(mask.begin(), mask.begin() + na, true);
            std::sort(mask.begin(), mask.end());
            do {
                std::vector<double> a;
                std::vector<double> b;
                for (std::size_t i = 0; i < n; ++i)
                    (mask[i] ? a : b).push_back(static_cast<double>(i + 1));
                const auto r = stats::mann_whitney_u(a, b, stats::MwuMode::exact);
                CHECK(r.p_value == oracle_exact_mwu_p(a, b));
            } while (std::next_permutation(mask.begin(), mask.end()));
        }
    }
    // randomized coverage with ties, up to the exact cutoff
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t na = 1 + trial % 8;
        const std::size_t nb = 1 + (trial / 3) % 8;
        const auto a = random_sample(rng, na, 4);
        const auto b = random_sample(rng, nb, 4);
        const auto r = stats::mann_whitney_u(a, b, stats::MwuMode::exact);
        CHECK(r.p_value == oracle_exact_mwu_p(a, b));
    }
}

TEST_CASE("mwu exact and asymptotic agree within 0.05 on tie-free mid-size input") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t na = 4 + trial % 5;
        const std::size_t nb = 4 + (trial / 5) % 5;
        const auto a = random_tie_free(rng, na);
        const auto b = random_tie_free(rng, nb);
        const auto exact = stats::mann_whitney_u(a, b, stats::MwuMode::exact);
        const auto asym = stats::mann_whitney_u(a, b, stats::MwuMode::asymptotic);
        CHECK(std::abs(exact.p_value - asym.p_value) < 0.05);
    }
}

TEST_CASE("mwu p is invariant under a common strictly increasing transform") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = random_sample(rng, 5 + trial % 8, 6);
        const auto b = random_sample(rng, 4 + trial % 9, 6);
        auto ta = a;
        auto tb = b;
        auto f = [](double v) { return std::exp(v) + v * v * v; };
        for (auto& v : ta) v = f(v);
        for (auto& v : tb) v = f(v);
        CHECK(stats::mann_whitney_u(a, b).p_value ==
              doctest::Approx(stats::mann_whitney_u(ta, tb).p_value).epsilon(1e-12));
    }
}

TEST_CASE("mwu rejects empty samples") {
    const std::vector<double> v = {1.0};
    const std::vector<double> empty;
    CHECK_THROWS_AS(stats::mann_whitney_u(empty, v), Error);
    CHECK_THROWS_AS(stats::mann_whitney_u(v, empty), Error);
}

TEST_CASE("ks statistic on identical and disjoint samples") {
    const std::vector<double> a = {1, 2, 3, 4};
    CHECK(stats::ks_two_sample(a, a).statistic == doctest::Approx(0.0));
    CHECK(stats::ks_two_sample(a, a).p_value == doctest::Approx(1.0));
    const std::vector<double> b = {5, 6, 7, 8};
    CHECK(stats::ks_two_sample(a, b).statistic == doctest::Approx(1.0));
}

TEST_CASE("ks interleaved sample matches the cdf-sweep oracle") {
    const std::vector<double> a = {1, 3, 5};
    const std::vector<double> b = {2, 4, 6};
    const auto r = stats::ks_two_sample(a, b);
    CHECK(r.statistic == doctest::Approx(oracle_ks_d(a, b)));
    CHECK(r.statistic == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ks equals the oracle on random tied inputs") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_sample(rng, 1 + trial % 9, 5);
        const auto b = random_sample(rng, 1 + (trial / 2) % 9, 5);
        CHECK(stats::ks_two_sample(a, b).statistic ==
              doctest::Approx(oracle_ks_d(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("ks is symmetric, bounded and triangle-like") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 60; ++trial) {
        const auto a = random_sample(rng, 3 + trial % 6, 4);
        const auto b = random_sample(rng, 3 + (trial / 2) % 6, 4);
        const auto c = random_sample(rng, 3 + (trial / 4) % 6, 4);
        const double dab = stats::ks_two_sample(a, b).statistic;
        const double dba = stats::ks_two_sample(b, a).statistic;
        const double dac = stats::ks_two_sample(a, c).statistic;
        const double dbc = stats::ks_two_sample(b, c).statistic;
        CHECK(dab == doctest::Approx(dba));
        CHECK(dab >= 0.0);
        CHECK(dab <= 1.0);
        CHECK(dac <= dab + dbc + 1e-12);
    }
}

TEST_CASE("ks is invariant under a strictly increasing transform of both samples") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = random_sample(rng, 4 + trial % 5, 6);
        const auto b = random_sample(rng, 4 + (trial / 3) % 5, 6);
        auto ta = a;
        auto tb = b;
        for (auto& v : ta) v = v * v * v + 2.0 * v;
        for (auto& v : tb) v = v * v * v + 2.0 * v;
        CHECK(stats::ks_two_sample(a, b).statistic ==
              doctest::Approx(stats::ks_two_sample(ta, tb).statistic).epsilon(1e-12));
    }
}

TEST_CASE("kolmogorov upper tail matches its series definition") {
    CHECK(stats::kolmogorov_q(0.0) == doctest::Approx(1.0));
    for (double lambda : {0.3, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0}) {
        CHECK(stats::kolmogorov_q(lambda) ==
              doctest::Approx(oracle_kolmogorov_q(lambda)).epsilon(1e-9));
    }
    CHECK(stats::kolmogorov_q(1.0) > stats::kolmogorov_q(1.5));
}

TEST_CASE("chi-square on a uniform table is zero") {
    const std::vector<std::vector<double>> table = {{10, 10}, {10, 10}};
    const auto r = stats::chi_square(table);
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("chi-square matches hand-computed expectations on a fixed 2x2 table") {
    const std::vector<std::vector<double>> table = {{20, 10}, {10, 20}};
    const auto r = stats::chi_square(table);
    // margins 30/30; all expectations 15; stat = 4 * 25/15 = 20/3
    CHECK(r.statistic == doctest::Approx(20.0 / 3.0).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(oracle_chi2_sf(20.0 / 3.0, 1)).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(0.0098).epsilon(0.02));
}

TEST_CASE("chi-square survival matches the gamma-series oracle across dofs") {
    for (int dof = 1; dof <= 8; ++dof) {
        for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0}) {
            CHECK(stats::chi_square_sf(x, dof) ==
                  doctest::Approx(oracle_chi2_sf(x, dof)).epsilon(1e-9));
        }
    }
}

TEST_CASE("chi-square statistic scales linearly with a uniform count multiplier") {
    const std::vector<std::vector<double>> table = {{12, 7, 5}, {3, 9, 14}};
    const auto r1 = stats::chi_square(table);
    std::vector<std::vector<double>> scaled = table;
    for (auto& row : scaled)
        for (auto& v : row) v *= 3.0;
    const auto r3 = stats::chi_square(scaled);
    CHECK(r3.statistic == doctest::Approx(3.0 * r1.statistic).epsilon(1e-9));
}

TEST_CASE("chi-square rejects degenerate tables") {
    CHECK_THROWS_AS(stats::chi_square({{1, 2}}), Error);
    CHECK_THROWS_AS(stats::chi_square({{1, 2}, {-1, 2}}), Error);
    CHECK_THROWS_AS(stats::chi_square({{0, 0}, {1, 2}}), Error);
    CHECK_THROWS_AS(stats::chi_square({{0, 2}, {0, 2}}), Error);
}

TEST_CASE("kendall tau-b on monotone sequences") {
    const std::vector<double> inc = {1, 2, 3};
    const std::vector<double> dec = {3, 2, 1};
    CHECK(*stats::kendall_tau_b(inc, inc) == doctest::Approx(1.0));
    CHECK(*stats::kendall_tau_b(inc, dec) == doctest::Approx(-1.0));
}

TEST_CASE("kendall tau-b equals the pair-enumeration oracle with ties") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + trial % 9;
        const auto x = random_sample(rng, n, 4);
        const auto y = random_sample(rng, n, 4);
        const auto mine = stats::kendall_tau_b(x, y);
        const auto reference = oracle_tau_b(x, y);
        REQUIRE(mine.has_value() == reference.has_value());
        if (mine) CHECK(*mine == doctest::Approx(*reference).epsilon(1e-12));
    }
}

TEST_CASE("kendall tau-b is undefined for a constant list") {
    const std::vector<double> constant = {2, 2, 2, 2};
    const std::vector<double> varying = {1, 2, 3, 4};
    CHECK_FALSE(stats::kendall_tau_b(constant, varying).has_value());
    CHECK_FALSE(stats::kendall_tau_b(varying, constant).has_value());
}

TEST_CASE("kendall tau-b negates when one tie-free list is order-reversed") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = random_tie_free(rng, 6);
        const auto y = random_tie_free(rng, 6);
        auto y_flip = y;
        for (auto& v : y_flip) v = -v;
        CHECK(*stats::kendall_tau_b(x, y) ==
              doctest::Approx(-*stats::kendall_tau_b(x, y_flip)).epsilon(1e-12));
    }
}

TEST_CASE("kendall tau-b validates input lengths") {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {1, 2};
    const std::vector<double> single = {1};
    CHECK_THROWS_AS(stats::kendall_tau_b(a, b), Error);
    CHECK_THROWS_AS(stats::kendall_tau_b(single, single), Error);
}

TEST_CASE("align produces one row per metric in request order") {
    stats::MetricTable a;
    a["x"] = {1, 2, 3};
    a["y"] = {4, 5, 6};
    stats::MetricTable b;
    b["x"] = {1, 2, 3};
    b["y"] = {9, 10, 11};
    const std::vector<std::string> names = {"y", "x"};
    const auto rows = stats::align(a, b, names);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].metric_name == "y");
    CHECK(rows[1].metric_name == "x");
    // rows match direct calls of the two tests
    CHECK(rows[1].mwu.p_value == stats::mann_whitney_u(a["x"], b["x"]).p_value);
    CHECK(rows[0].ks.statistic == stats::ks_two_sample(a["y"], b["y"]).statistic);
    // self comparison is maximally aligned
    const auto self_rows = stats::align(a, a, names);
    for (const auto& row : self_rows) {
        CHECK(row.ks.statistic == doctest::Approx(0.0));
        CHECK(row.mwu.p_value >= 0.9);
    }
}

TEST_CASE("align reports missing metrics") {
    stats::MetricTable a;
    a["x"] = {1, 2};
    stats::MetricTable b;
    const std::vector<std::string> names = {"x"};
    CHECK_THROWS_AS(stats::align(a, b, names), Error);
}

TEST_CASE("normal cdf reference points") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-4));
    CHECK(stats::normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-3));
}
