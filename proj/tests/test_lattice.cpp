#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "grid_entropy/error.hpp"
#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"
#include "grid_entropy/variational.hpp"

using namespace grid_entropy;

TEST_CASE("path_count") {
    CHECK(path_count({2, 2}) == 6);
    CHECK(path_count({7, 0, 0}) == 1);
    CHECK(path_count({3, 2, 1}) == 60);
    CHECK(path_count({-1, 2}) == 0);
    CHECK(path_count({30, 30}) == BigInt("118264581564861424"));
    CHECK(log_path_count({30, 30}) == doctest::Approx(std::log(118264581564861424.0)));

    std::uint64_t visited = 0;
    const Environment env{1, 3};
    enumerate_paths(env, {0, 0, 0}, {3, 2, 1}, [&](const Path&, std::span<const double>) { ++visited; });
    CHECK(visited == 60);
}

TEST_CASE("path_count and shannon_entropy are permutation invariant") {
    CHECK(path_count({4, 1, 2}) == path_count({2, 4, 1}));
    CHECK(shannon_entropy(Direction::parse("1/2,1/6,1/3")) == doctest::Approx(shannon_entropy(Direction::parse("1/3,1/2,1/6"))));
}

TEST_CASE("shannon_entropy") {
    CHECK(shannon_entropy(Direction::parse("1/2,1/2")) == doctest::Approx(std::log(2.0)));
    CHECK(shannon_entropy(Direction::parse("1,0")) == 0.0);
    const Direction q = Direction::parse("2/3,1/3");
    const double h = shannon_entropy(q);
    CHECK(h == doctest::Approx(std::log(3.0) - 2.0 / 3.0 * std::log(2.0)));
    const auto e = q.floor_scaled(3000);
    CHECK(std::abs(log_path_count(e) / 3000.0 - h) < 5e-3);
}

TEST_CASE("Direction and Rational parsing") {
    const Direction q = Direction::parse("2/4,1/4");
    CHECK(q.denominator() == 4);
    CHECK(q.floor_scaled(7) == std::vector<std::int64_t>{3, 1});
    CHECK(Rational::parse("6/4") == Rational(3, 2));
    CHECK_THROWS_AS(Rational::parse("0.25"), InputError);
    CHECK_THROWS_AS(Direction::parse("1/2,-1/2"), InputError);
}

TEST_CASE("edge_label") {
    const Environment env{42, 2};
    const LatticePoint a{3, 5};
    CHECK(edge_label(env, a, 0) == edge_label(env, a, 0));
    CHECK(edge_label(env, a, 0) != edge_label(env, a, 1));
    CHECK(edge_label(env, a, 0) != edge_label(Environment{43, 2}, a, 0));

    double sum = 0.0;
    const int side = 1000;
    for (int x = 0; x < side; ++x)
        for (int y = 0; y < side; ++y) sum += edge_label(env, LatticePoint{x, y}, (x + y) % 2);
    CHECK(std::abs(sum / (side * side) - 0.5) < 0.002);
}

TEST_CASE("enumerate_paths") {
    const Environment env{7, 2};
    std::uint64_t count = 0;
    enumerate_paths(env, {0, 0}, {1, 1}, [&](const Path&, std::span<const double>) { ++count; });
    CHECK(count == 2);

    count = 0;
    enumerate_paths(env, {0, 0}, {2, 2}, [&](const Path& p, std::span<const double> sorted) {
        ++count;
        CHECK(p.length() == 4);
        auto labels = p.labels(env);
        std::sort(labels.begin(), labels.end());
        CHECK(std::equal(labels.begin(), labels.end(), sorted.begin(), sorted.end()));
    });
    CHECK(count == 6);

    count = 0;
    enumerate_paths(env, {0, 0}, {3, 3}, [&](const Path&, std::span<const double>) { ++count; });
    CHECK(count == 20);

    try {
        enumerate_paths(env, {0, 0}, {10, 10}, [](const Path&, std::span<const double>) {}, 1000);
        FAIL("expected a budget refusal");
    } catch (const BudgetExceeded& e) {
        CHECK(e.required() == 184756.0);
        CHECK(e.budget() == 1000);
    }
}

TEST_CASE("enumerate_paths with a prefix visits only its subtree") {
    const Environment env{7, 2};
    std::uint64_t first = 0, second = 0;
    const std::vector<std::uint8_t> p0{0}, p1{1};
    enumerate_paths(env, {0, 0}, {3, 3}, [&](const Path& p, std::span<const double>) { first += p.steps[0] == 0; }, 1000, p0);
    enumerate_paths(env, {0, 0}, {3, 3}, [&](const Path& p, std::span<const double>) { second += p.steps[0] == 1; }, 1000, p1);
    CHECK(first == 10);
    CHECK(second == 10);
}

TEST_CASE("path_weight") {
    const Environment env{11, 2};
    Path p{{0, 0}, {0, 1, 1, 0, 1}};
    CHECK(path_weight(env, TauFn::constant(1.5), p) == doctest::Approx(7.5));
    CHECK(path_weight(env, TauFn(), p) == 0.0);

    const TauFn two_step({0.4}, {-1.0, 2.0});
    const Measure mu = empirical_measure(p.labels(env));
    CHECK(std::abs(path_weight(env, two_step, p) - integral(two_step, mu)) < 1e-12);
}

TEST_CASE("concatenation adds empirical measures") {
    const Environment env{19, 3};
    const Path a{{0, 0, 0}, {0, 2, 1, 1}};
    const Path b{a.end(), {2, 2, 0}};
    const Path ab = concatenate(a, b);
    CHECK(ab.end() == LatticePoint{2, 2, 3});
    CHECK(empirical_measure(ab.labels(env)) == add(empirical_measure(a.labels(env)), empirical_measure(b.labels(env))));
}

TEST_CASE("staircase labels are close to uniform") {
    const Environment env{2024, 2};
    const int n = 100000;
    std::vector<double> labels;
    labels.reserve(n);
    LatticePoint v{0, 0};
    for (int k = 0; k < n; ++k) {
        labels.push_back(edge_label(env, v, k % 2));
        ++v[k % 2];
    }
    std::sort(labels.begin(), labels.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i)
        ks = std::max({ks, std::abs(static_cast<double>(i + 1) / n - labels[i]), std::abs(static_cast<double>(i) / n - labels[i])});
    CHECK(ks <= 0.01);
}

TEST_CASE("TauFn") {
    const TauFn tau({0.25, 0.5}, {1.0, -2.0, 3.0});
    CHECK(tau(0.0) == 1.0);
    CHECK(tau(0.25) == -2.0);
    CHECK(tau(0.49) == -2.0);
    CHECK(tau(1.0) == 3.0);
    CHECK(tau.bound() == 3.0);
    CHECK(tau_from_json(to_json(tau)).hash() == tau.hash());
    CHECK(TauFn::identity_ladder(4)(0.3) == doctest::Approx(0.375));
    CHECK(TauFn::indicator_from(0.5)(0.5) == 1.0);
    CHECK(TauFn::indicator_from(0.5)(0.4999) == 0.0);
    std::vector<double> too_many(TauFn::kMaxCells + 1, 0.0);
    CHECK_THROWS_AS(TauFn::equal_bins(too_many), InputError);
}
