#include <doctest.h>

#include <random>

#include "grid_entropy/error.hpp"
#include "grid_entropy/prokhorov.hpp"

using namespace grid_entropy;

namespace {

Measure random_measure(std::mt19937_64& rng, int max_atoms, double grid) {
    std::uniform_int_distribution<int> count(1, max_atoms);
    std::uniform_real_distribution<double> pos(0.0, 1.0), mass(0.1, 2.0);
    std::vector<Atom> atoms;
    for (int i = count(rng); i > 0; --i) {
        const double x = grid > 0 ? std::round(pos(rng) / grid) * grid : pos(rng);
        atoms.push_back({std::min(x, 1.0), mass(rng)});
    }
    return Measure(atoms);
}

}  // namespace

TEST_CASE("max_deficiency") {
    const Measure a = Measure::dirac(0.2), b = Measure::dirac(0.5);
    CHECK(max_deficiency(a, a, 0.0, false) == 0.0);
    CHECK(max_deficiency(a, b, 0.1, true) == 1.0);
    CHECK(max_deficiency(a, b, 0.4, true) == 0.0);
}

TEST_CASE("prokhorov_distance examples") {
    const Measure mu({{0.1, 0.7}, {0.6, 1.3}});
    CHECK(prokhorov_distance(mu, Measure()) == doctest::Approx(tv_norm(mu)));
    CHECK(prokhorov_distance(Measure::dirac(0.2), Measure::dirac(0.5)) == doctest::Approx(0.3));
    CHECK(prokhorov_distance(Measure::dirac(0.3, 2.0), Measure::dirac(0.3)) == 1.0);
}

TEST_CASE("prokhorov_brute examples") {
    CHECK(prokhorov_brute(Measure::dirac(0.0), Measure::dirac(1.0)) == 1.0);
    CHECK(prokhorov_brute(Measure({{0.0, 0.5}, {1.0, 0.5}}), Measure::dirac(0.5)) == 0.5);
    CHECK(prokhorov_brute(Measure::dirac(0.2), Measure::dirac(0.5)) == doctest::Approx(0.3));

    std::vector<Atom> many;
    for (int i = 0; i < 17; ++i) many.push_back({i / 20.0, 1.0});
    CHECK_THROWS_AS(prokhorov_brute(Measure(many), Measure()), InputError);
}

TEST_CASE("interval greedy, capacity scaling and brute force agree") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const double grid = trial % 2 == 0 ? 0.05 : 0.0;  // gridded positions create distance ties
        const Measure a = random_measure(rng, 8, grid), b = random_measure(rng, 8, grid);
        const double greedy = prokhorov_distance(a, b, FlowSolver::Interval);
        const double scaling = prokhorov_distance(a, b, FlowSolver::CapacityScaling);
        const double brute = prokhorov_brute(a, b);
        CHECK(std::abs(greedy - brute) <= 1e-12);
        CHECK(std::abs(scaling - brute) <= 1e-12);
    }
}

TEST_CASE("flow solvers agree on every radius") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Measure a = random_measure(rng, 12, 0.05), b = random_measure(rng, 12, 0.05);
        for (double r : {0.0, 0.05, 0.1, 0.25, 0.5}) {
            for (bool strict : {false, true}) {
                const double general = FlowProblem::between(a, b, r, strict).max_flow();
                CHECK(interval_max_flow(a, b, r, strict) == doctest::Approx(general).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("metric laws") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const Measure a = random_measure(rng, 6, 0.0), b = random_measure(rng, 6, 0.0), c = random_measure(rng, 6, 0.0);
        const Measure d = random_measure(rng, 6, 0.0);
        const double ab = prokhorov_distance(a, b);
        CHECK(ab == doctest::Approx(prokhorov_distance(b, a)).epsilon(1e-14));
        CHECK(prokhorov_distance(a, c) <= ab + prokhorov_distance(b, c) + 1e-9);
        CHECK(ab <= tv_distance(a, b) + 1e-9);
        CHECK(prokhorov_distance(add(a, c), add(b, d)) <= ab + prokhorov_distance(c, d) + 1e-9);
        CHECK(prokhorov_distance(a, a) == 0.0);
        CHECK(prokhorov_lower_bound(a, b) <= ab + 1e-12);
    }
}
