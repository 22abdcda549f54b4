#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "grid_entropy/error.hpp"
#include "grid_entropy/estimators.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/prokhorov.hpp"

using namespace grid_entropy;

namespace {

// rho((1/n) mu_pi, nu) for every path, straight from the definitions.
std::vector<double> naive_distances(const Environment& env, const LatticePoint& end, const Measure& nu, std::int64_t n) {
    std::vector<double> out;
    enumerate_paths(env, LatticePoint(end.size(), 0), end, [&](const Path& p, std::span<const double>) {
        out.push_back(prokhorov_distance(scale(empirical_measure(p.labels(env)), 1.0 / static_cast<double>(n)), nu));
    });
    return out;
}

double naive_eps_sum(const std::vector<double>& distances, std::int64_t n, double eps) {
    double sum = 0.0;
    for (double d : distances) sum += std::exp(-(static_cast<double>(n) / eps) * d);
    return std::log(sum) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("order_stat_series examples") {
    const Direction q = Direction::parse("1,1");

    SUBCASE("a path's own empirical measure is at distance zero") {
        const Environment env{3, 2};
        Path first;
        enumerate_paths(env, {0, 0}, {2, 2}, [&](const Path& p, std::span<const double>) {
            if (first.steps.empty()) first = p;
        });
        const Measure nu = scale(empirical_measure(first.labels(env)), 0.5);
        const std::vector<std::uint64_t> js{1};
        CHECK(order_stat_series(env, q, nu, 2, js).values[0] == 0.0);
    }

    SUBCASE("ranks past the path count are infinite") {
        const std::vector<std::uint64_t> js{6, 7};
        const auto s = order_stat_series(Environment{1, 2}, q, discretize_lebesgue(16), 2, js);
        CHECK(s.path_count == 6);
        CHECK(std::isfinite(s.values[0]));
        CHECK(s.values[1] == kPosInf);
    }

    SUBCASE("matches a full sort at n = 3, seed 42") {
        const Environment env{42, 2};
        const Measure nu = discretize_lebesgue(16);
        auto all = naive_distances(env, {3, 3}, nu, 3);
        std::sort(all.begin(), all.end());
        const std::vector<std::uint64_t> js{1, 6, 20};
        const auto s = order_stat_series(env, q, nu, 3, js);
        CHECK(s.values[0] == all[0]);
        CHECK(s.values[1] == all[5]);
        CHECK(s.values[2] == all[19]);
    }
}

TEST_CASE("heap order statistics equal a full sort") {
    const Direction q = Direction::parse("1/2,1/2");
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (std::int64_t n : {8, 12}) {
            const Environment env{seed, 2};
            const Measure nu = seed % 2 ? discretize_lebesgue(32) : Measure({{0.2, 0.3}, {0.7, 0.7}});
            auto all = path_distances(env, q, nu, n);
            std::sort(all.begin(), all.end());
            std::vector<std::uint64_t> js;
            for (std::uint64_t j = 1; j <= all.size() + 2; j = j * 3 + 1) js.push_back(j);
            const auto s = order_stat_series(env, q, nu, n, js);
            for (std::size_t k = 0; k < js.size(); ++k) {
                if (js[k] > all.size())
                    CHECK(s.values[k] == kPosInf);
                else
                    CHECK(s.values[k] == all[js[k] - 1]);
                if (k > 0) CHECK(s.values[k] >= s.values[k - 1]);
            }
        }
    }
}

TEST_CASE("eps_sum matches the naive sum") {
    const Direction q = Direction::parse("1,1");
    const Environment env{7, 2};
    const Measure nu = discretize_lebesgue(8);
    const auto d = naive_distances(env, {2, 2}, nu, 2);
    REQUIRE(d.size() == 6);
    CHECK(eps_sum(env, q, nu, 2, 1.0) == doctest::Approx(naive_eps_sum(d, 2, 1.0)).epsilon(1e-10));

    const Direction half = Direction::parse("1/2,1/2");
    for (std::int64_t n : {6, 10}) {
        for (double eps : {4.0, 1.0, 0.25}) {
            const auto dn = naive_distances(env, half.floor_scaled(n), nu, n);
            CHECK(eps_sum(env, half, nu, n, eps) == doctest::Approx(naive_eps_sum(dn, n, eps)).epsilon(1e-10));
            CHECK(eps_sum_from_distances(dn, n, eps) == doctest::Approx(naive_eps_sum(dn, n, eps)).epsilon(1e-10));
        }
    }
}

TEST_CASE("eps_sum bounds and monotonicity in eps") {
    const Direction q = Direction::parse("2/3,1/3");
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Environment env{seed, 2};
        for (const Measure& nu : {discretize_lebesgue(16), Measure::dirac(0.3, 2.0), Measure()}) {
            for (std::int64_t n : {3, 6, 9}) {
                const double len = static_cast<double>(l1_norm(q.floor_scaled(n))) / static_cast<double>(n);
                double previous = kPosInf;
                for (double eps : {8.0, 2.0, 0.5, 0.125}) {
                    const double v = eps_sum(env, q, nu, n, eps);
                    CHECK(v <= len * std::log(2.0) + 1e-12);
                    CHECK(v >= -(1.0 / eps) * (len + tv_norm(nu)) - 1e-12);
                    CHECK(v <= previous + 1e-12);
                    previous = v;
                }
            }
        }
    }
}

TEST_CASE("eps_sum refuses over budget") {
    EnsembleOptions opt;
    opt.budget = 100;
    CHECK_THROWS_AS(eps_sum(Environment{1, 2}, Direction::parse("1/2,1/2"), discretize_lebesgue(8), 20, 1.0, opt),
                    BudgetExceeded);
}

TEST_CASE("eps_sum_level") {
    const Environment env{5, 2};
    const Measure nu = discretize_lebesgue(8);

    SUBCASE("empty level") {
        CHECK(eps_sum_level(env, Rational(0), Measure(), 4, 1.0) == 0.0);
        CHECK(eps_sum_level(env, Rational(0), scale(nu, 0.5), 4, 2.0) == doctest::Approx(-0.5 / 2.0));
    }

    SUBCASE("decomposes over the level endpoints") {
        LogSumExp parts;
        for (std::int64_t x = 0; x <= 3; ++x) parts.add(3.0 * eps_sum_endpoint(env, {x, 3 - x}, nu, 3, 1.0));
        CHECK(3.0 * eps_sum_level(env, Rational(1), nu, 3, 1.0) == doctest::Approx(parts.value()).epsilon(1e-10));
    }

    SUBCASE("dominates each endpoint and obeys the endpoint-count bound") {
        for (std::int64_t n : {4, 8}) {
            const double level = eps_sum_level(env, Rational(1), nu, n, 0.5);
            double best = kNegInf;
            for (std::int64_t x = 0; x <= n; ++x) {
                const double e = eps_sum_endpoint(env, {x, n - x}, nu, n, 0.5);
                CHECK(level >= e - 1e-12);
                best = std::max(best, e);
            }
            CHECK(level <= std::log(static_cast<double>(n + 1)) / static_cast<double>(n) + best + 1e-12);
        }
    }
}

TEST_CASE("order-statistic estimator on a mass mismatch returns -inf") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<std::int64_t> ladder{4, 6, 8};
    const std::vector<double> grid{0.0, 0.2, 0.4};
    const auto e = estimate_entropy_orderstats(seeds, Direction::parse("1/2,1/2"), scale(discretize_lebesgue(16), 2.0),
                                               ladder, grid);
    CHECK(e.value == kNegInf);
    CHECK(e.method == EstimateMethod::OrderStats);
}

TEST_CASE("order-statistic estimator on the single-path direction") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<std::int64_t> ladder{64, 256, 1024};
    const std::vector<double> grid{0.0, 0.1, 0.2};
    OrderStatOptions opt;
    opt.threshold = 0.1;
    const auto e = estimate_entropy_orderstats(seeds, Direction::parse("1,0"), discretize_lebesgue(64), ladder, grid, opt);
    CHECK(e.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("default vanishing threshold") {
    CHECK(default_vanishing_threshold(64, 12) == doctest::Approx(2.0 * (1.0 / 128.0 + 1.0 / 12.0)));
}

TEST_CASE("eps-sum estimator on Lebesgue measure") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<std::int64_t> ladder{6, 8, 10, 12};
    const std::vector<double> eps{16.0, 8.0, 4.0};
    const auto e = estimate_entropy_eps(seeds, Direction::parse("1/2,1/2"), discretize_lebesgue(64), ladder, eps);
    CHECK(std::abs(e.value - std::log(2.0)) <= 0.1);
    CHECK(e.diagnostics.monotone);
    CHECK(e.rows.size() == seeds.size() * ladder.size() * eps.size());
}

TEST_CASE("level estimator") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<double> eps{16.0, 8.0, 4.0};

    SUBCASE("zero measure has entropy zero") {
        const std::vector<std::int64_t> ladder{4, 6};
        const auto e = estimate_entropy_level(2, seeds, Measure(), ladder, eps);
        CHECK(e.value == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("Lebesgue measure") {
        const std::vector<std::int64_t> ladder{6, 8, 10, 12};
        const auto e = estimate_entropy_level(2, seeds, discretize_lebesgue(64), ladder, eps);
        CHECK(std::abs(e.value - std::log(2.0)) <= 0.1);
        REQUIRE(e.cross_check.has_value());
        CHECK(*e.cross_check <= 0.1);
    }
}

TEST_CASE("mass_as_rational") {
    CHECK(mass_as_rational(discretize_lebesgue(64)) == Rational(1));
    CHECK(mass_as_rational(Measure::dirac(0.5, 1.5)) == Rational(3, 2));
}
