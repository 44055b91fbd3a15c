#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "projmon/common.hpp"
#include "projmon/critval.hpp"
#include "projmon/rng.hpp"

using namespace projmon;

namespace {

double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

SimConfig quick(std::size_t reps, std::size_t grid, std::uint64_t seed) {
    SimConfig cfg;
    cfg.reps = reps;
    cfg.grid = grid;
    cfg.seed = seed;
    cfg.threads = 2;
    return cfg;
}

}  // namespace

TEST_CASE("higher-rule quantile on 1..100") {
    std::vector<double> s(100);
    for (int i = 0; i < 100; ++i) s[i] = i + 1;
    CHECK(quantile_higher(s, 0.05) == 95.0);
    CHECK(quantile_higher(s, 0.5) == 50.0);
    CHECK(quantile_higher(s, 0.999) == 1.0);
    CHECK_THROWS_AS(quantile_higher({}, 0.05), Error);
    CHECK_THROWS_AS(quantile_higher(s, 0.0), Error);
    // nonincreasing in alpha
    CHECK(quantile_higher(s, 0.01) >= quantile_higher(s, 0.05));
    CHECK(quantile_higher(s, 0.05) >= quantile_higher(s, 0.2));
}

TEST_CASE("identical seeds reproduce samples; thread count does not matter") {
    auto a = simulate_openend_sup(0.25, 0.1, quick(64, 500, 9));
    auto b = simulate_openend_sup(0.25, 0.1, quick(64, 500, 9));
    CHECK(a == b);
    SimConfig one = quick(64, 500, 9);
    one.threads = 1;
    CHECK(simulate_openend_sup(0.25, 0.1, one) == a);

    auto c1 = simulate_closedend_sup(0.25, 0.1, 2.0, quick(64, 500, 9));
    auto c2 = simulate_closedend_sup(0.25, 0.1, 2.0, one);
    CHECK(c1 == c2);
}

TEST_CASE("restricting the supremum interval shrinks the quantiles") {
    // delta = 1 evaluates only [1/2, 1]; near-zero delta evaluates almost all of [0, 1]
    // identical seeds couple the paths, so the narrow supremum is dominated
    // path by path; quantiles can tie when the argmax lies in the overlap
    auto wide = simulate_openend_sup(0.0, 1e-9, quick(4000, 2000, 21));
    auto narrow = simulate_openend_sup(0.0, 1.0, quick(4000, 2000, 21));
    for (double alpha : {0.01, 0.05, 0.1, 0.5}) {
        CHECK(quantile_higher(narrow, alpha) <= quantile_higher(wide, alpha));
    }
    CHECK(quantile_higher(narrow, 0.5) < quantile_higher(wide, 0.5));
}

TEST_CASE("heavier weighting (larger gamma) enlarges the supremum") {
    auto g0 = simulate_openend_sup(0.0, 0.1, quick(4000, 2000, 22));
    auto g45 = simulate_openend_sup(0.45, 0.1, quick(4000, 2000, 22));
    CHECK(quantile_higher(g45, 0.05) > quantile_higher(g0, 0.05));
}

TEST_CASE("closed-end quantiles grow with the horizon") {
    auto t2 = simulate_closedend_sup(0.25, 0.1, 2.0, quick(4000, 1000, 23));
    auto t4 = simulate_closedend_sup(0.25, 0.1, 4.0, quick(4000, 1000, 23));
    CHECK(quantile_higher(t4, 0.05) > quantile_higher(t2, 0.05));
    CHECK(quantile_higher(t4, 0.5) > quantile_higher(t2, 0.5));
}

TEST_CASE("T = delta degenerates to a single evaluation point with a known law") {
    // |B1(d) - d B2(1)| / ((1+d)(d/(1+d))^g) with d = 0.5: sd = sqrt(d + d^2)
    const double delta = 0.5, gamma = 0.25;
    auto s = simulate_closedend_sup(gamma, delta, delta, quick(20000, 1000, 24));
    const double g = 1.5 * std::pow(0.5 / 1.5, gamma);
    const double sd = std::sqrt(delta + delta * delta);
    const double q95 = quantile_higher(s, 0.05);
    CHECK(q95 == doctest::Approx(1.959964 * sd / g).epsilon(0.03));
}

TEST_CASE("flat weighting removes the boundary shape") {
    // at T = delta the flat statistic is plain |B1(d) - d B2(1)|
    const double delta = 0.5;
    auto s = simulate_closedend_sup(0.25, delta, delta, quick(20000, 1000, 25),
                                    BoundaryWeighting::flat);
    const double sd = std::sqrt(delta + delta * delta);
    CHECK(quantile_higher(s, 0.05) == doctest::Approx(1.959964 * sd).epsilon(0.03));
}

TEST_CASE("bridge refinement never lowers the discrete supremum") {
    Rng rng = make_rng(31);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        const double h = 1.0 / 64;
        std::vector<double> path{0.0};
        for (int i = 0; i < 64; ++i) path.push_back(path.back() + std::sqrt(h) * nd(rng));
        double sup0 = 0;
        for (double v : path) sup0 = std::max(sup0, std::abs(v));
        auto fine = refine_brownian_path(path, h, derive_seed(31, 7, rep));
        REQUIRE(fine.size() == 2 * path.size() - 1);
        double sup1 = 0;
        for (double v : fine) sup1 = std::max(sup1, std::abs(v));
        CHECK(sup1 >= sup0);
        // original grid points are preserved
        for (std::size_t i = 0; i < path.size(); ++i) CHECK(fine[2 * i] == path[i]);
        auto finer = refine_brownian_path(fine, h / 2, derive_seed(31, 8, rep));
        double sup2 = 0;
        for (double v : finer) sup2 = std::max(sup2, std::abs(v));
        CHECK(sup2 >= sup1);
    }
}

TEST_CASE("open-end and long-horizon closed-end suprema share one distribution") {
    // smoke version of the distribution identity at modest sizes
    auto open = simulate_openend_sup(0.0, 0.1, quick(4000, 2000, 26));
    auto closed = simulate_closedend_sup(0.0, 0.1, 50.0, quick(4000, 2000, 27));
    CHECK(ks_distance(open, closed) < 0.06);
}

TEST_CASE("zero drift reproduces the null rejection rate") {
    auto cfg = quick(4000, 1000, 28);
    auto sample = simulate_closedend_sup(0.25, 0.1, 2.0, cfg);
    const double c = quantile_higher(sample, 0.05);
    LocalAlternativeSpec spec;
    spec.theta_break = 0.5;
    spec.T = 2.0;
    spec.delta_fn = [](double) { return 0.0; };
    const double rate = simulate_power(spec, 0.25, 0.1, c, quick(4000, 1000, 29));
    CHECK(rate > 0.02);
    CHECK(rate < 0.09);
}

TEST_CASE("rejection probability grows with the drift and saturates") {
    auto cfg = quick(2000, 1000, 30);
    auto sample = simulate_closedend_sup(0.25, 0.1, 2.0, cfg);
    const double c = quantile_higher(sample, 0.05);
    double prev = -1;
    for (double level : {0.0, 2.0, 5.0, 10.0}) {
        LocalAlternativeSpec spec;
        spec.theta_break = 0.5;
        spec.T = 2.0;
        spec.delta_fn = [level](double) { return level; };
        const double rate = simulate_power(spec, 0.25, 0.1, c, quick(2000, 1000, 31));
        CHECK(rate >= prev);
        prev = rate;
    }
    LocalAlternativeSpec big;
    big.theta_break = 0.5;
    big.T = 2.0;
    big.delta_fn = [](double) { return 60.0; };
    CHECK(simulate_power(big, 0.25, 0.1, c, quick(2000, 1000, 32)) == doctest::Approx(1.0));
}

TEST_CASE("power simulation validates its inputs") {
    LocalAlternativeSpec spec;
    spec.theta_break = 0.5;
    spec.T = 2.0;
    spec.delta_fn = [](double) { return std::nan(""); };
    CHECK_THROWS_AS(simulate_power(spec, 0.25, 0.1, 2.0, quick(10, 500, 1)), Error);
    spec.theta_break = 0.05;  // below delta
    spec.delta_fn = [](double) { return 1.0; };
    CHECK_THROWS_AS(simulate_power(spec, 0.25, 0.1, 2.0, quick(10, 500, 1)), Error);
}

TEST_CASE("table caches entries, simulates on miss and round-trips as JSON") {
    CriticalValueTable table;
    BoundaryConfig b = BoundaryConfig::closed(0.25, 0.1, 2.0);
    auto e1 = table.get_or_simulate(b, 0.05, quick(2000, 500, 33));
    CHECK(e1.c > 0);
    // a second call hits the cache: even a different sim config returns the entry
    auto e2 = table.get_or_simulate(b, 0.05, quick(10, 500, 999));
    CHECK(e2.c == e1.c);
    CHECK(e2.reps == 2000);

    auto many = table.get_or_simulate_many(b, std::vector<double>{0.01, 0.05, 0.1},
                                           quick(2000, 500, 33));
    CHECK(many.size() == 3);
    CHECK(many[0].c >= many[1].c);
    CHECK(many[1].c >= many[2].c);
    CHECK(many[1].c == e1.c);  // cached entry reused

    CriticalValueTable back = CriticalValueTable::from_json(table.to_json());
    REQUIRE(back.entries().size() == table.entries().size());
    auto hit = back.lookup(0.25, 0.1, 2.0, 0.05);
    REQUIRE(hit.has_value());
    CHECK(hit->c == e1.c);

    const std::string path = "/tmp/projmon_test_table.json";
    table.save(path);
    CriticalValueTable loaded = CriticalValueTable::load(path);
    CHECK(loaded.entries().size() == table.entries().size());
    std::filesystem::remove(path);

    CHECK(CriticalValueTable::load("/tmp/does_not_exist_projmon.json").entries().empty());
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(simulate_openend_sup(0.5, 0.1, quick(10, 500, 1)), Error);
    CHECK_THROWS_AS(simulate_openend_sup(0.0, 0.0, quick(10, 500, 1)), Error);
    CHECK_THROWS_AS(simulate_closedend_sup(0.0, 0.2, 0.1, quick(10, 500, 1)), Error);
    CHECK_THROWS_AS(simulate_openend_sup(0.0, 0.1, quick(0, 500, 1)), Error);
    CHECK_THROWS_AS(simulate_openend_sup(0.0, 0.1, quick(10, 50, 1)), Error);
}
