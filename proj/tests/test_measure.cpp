#include <doctest.h>

#include <cmath>
#include <random>

#include "grid_entropy/error.hpp"
#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"

using namespace grid_entropy;

namespace {

Measure random_measure(std::mt19937_64& rng, int max_atoms) {
    std::uniform_int_distribution<int> count(0, max_atoms);
    std::uniform_real_distribution<double> pos(0.0, 1.0), mass(0.1, 2.0);
    std::vector<Atom> atoms;
    for (int i = count(rng); i > 0; --i) atoms.push_back({std::round(pos(rng) * 20) / 20, mass(rng)});
    return Measure(atoms);
}

}  // namespace

TEST_CASE("tv_norm") {
    CHECK(tv_norm(Measure()) == 0.0);
    CHECK(tv_norm(Measure::dirac(0.5)) == 1.0);
    CHECK(tv_norm(Measure({{0.1, 3.0}, {0.9, 2.0}})) == 5.0);
}

TEST_CASE("tv_distance") {
    CHECK(tv_distance(Measure::dirac(0.0), Measure::dirac(0.0)) == 0.0);
    CHECK(tv_distance(Measure::dirac(0.0), Measure::dirac(1.0)) == 1.0);
    CHECK(tv_distance(Measure::dirac(0.3, 2.0), Measure::dirac(0.3)) == 1.0);
}

TEST_CASE("add and scale") {
    CHECK(add(Measure::dirac(0.2), Measure::dirac(0.2)) == Measure::dirac(0.2, 2.0));
    CHECK(scale(Measure::dirac(0.1, 3.0), 1.0 / 3.0).atoms()[0].mass == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(add(Measure::dirac(0.1), Measure::dirac(0.4)).total_mass() == 2.0);
}

TEST_CASE("measure construction rejects bad atoms") {
    CHECK_THROWS_AS(Measure({{1.5, 1.0}}), InputError);
    CHECK_THROWS_AS(Measure({{0.5, -1.0}}), InputError);
    CHECK_THROWS_AS(Measure({{0.5, NAN}}), InputError);
}

TEST_CASE("empirical_measure") {
    CHECK(empirical_measure(std::vector<double>{}).empty());
    CHECK(empirical_measure(std::vector<double>{0.5, 0.5}) == Measure::dirac(0.5, 2.0));
    CHECK(empirical_measure(std::vector<double>{0.1, 0.9, 0.1}) == Measure({{0.1, 2.0}, {0.9, 1.0}}));
    CHECK_THROWS_AS(empirical_measure(std::vector<double>{1.2}), InputError);
}

TEST_CASE("kl_divergence") {
    for (std::size_t m : {1u, 4u, 64u}) CHECK(kl_divergence(Histogram::uniform(m)) == doctest::Approx(0.0));
    CHECK(kl_divergence(Histogram::uniform_on(0.0, 0.5, 64)) == doctest::Approx(std::log(2.0)));
    CHECK(std::isinf(kl_divergence(Measure::dirac(0.5))));
    CHECK(kl_divergence(Measure()) == 0.0);
    CHECK_THROWS_AS(kl_divergence(Histogram({0.5, 0.2})), InputError);
}

TEST_CASE("discretize_lebesgue") {
    CHECK(discretize_lebesgue(1) == Measure::dirac(0.5));
    CHECK(discretize_lebesgue(2) == Measure({{0.25, 0.5}, {0.75, 0.5}}));
    CHECK_THROWS_AS(discretize_lebesgue(0), InputError);
}

TEST_CASE("pushforward") {
    const Measure mu({{0.2, 1.5}, {0.7, 0.5}});
    const LineMeasure zero = pushforward(TauFn(), mu);
    REQUIRE(zero.atoms.size() == 1);
    CHECK(zero.atoms[0].position == 0.0);
    CHECK(zero.atoms[0].mass == 2.0);

    const LineMeasure ind = pushforward(TauFn::indicator_from(0.25), discretize_lebesgue(64));
    REQUIRE(ind.atoms.size() == 2);
    CHECK(ind.atoms[0].mass == doctest::Approx(0.25));
    CHECK(ind.atoms[1].mass == doctest::Approx(0.75));

    const LineMeasure id = pushforward(TauFn::identity_ladder(16), discretize_lebesgue(16));
    const Measure lambda = discretize_lebesgue(16);
    REQUIRE(id.atoms.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(id.atoms[i].position == doctest::Approx(lambda.atoms()[i].position));
        CHECK(id.atoms[i].mass == doctest::Approx(lambda.atoms()[i].mass));
    }
}

TEST_CASE("tv_distance is a metric and tv_norm is additive") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const Measure a = random_measure(rng, 6), b = random_measure(rng, 6), c = random_measure(rng, 6);
        CHECK(tv_distance(a, b) == doctest::Approx(tv_distance(b, a)));
        CHECK(tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12);
        CHECK((tv_distance(a, b) == 0.0) == (a == b));
        CHECK(tv_norm(add(a, b)) == doctest::Approx(tv_norm(a) + tv_norm(b)).epsilon(1e-14));
    }
}

TEST_CASE("kl_divergence of random histograms is non-negative") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> bins(16);
        double total = 0.0;
        for (double& b : bins) total += (b = u(rng));
        for (double& b : bins) b /= total;
        CHECK(kl_divergence(Histogram(bins)) > 0.0);
    }
}

TEST_CASE("empirical measure of n labels has mass n") {
    const Environment env{3, 2};
    std::vector<double> labels;
    LatticePoint p{0, 0};
    for (int k = 0; k < 1000; ++k) {
        labels.push_back(edge_label(env, p, k % 2));
        ++p[k % 2];
    }
    CHECK(empirical_measure(labels).total_mass() == 1000.0);
}

TEST_CASE("json round trip") {
    const Measure mu({{0.125, 0.5}, {0.75, 2.0}});
    CHECK(measure_from_json(to_json(mu)) == mu);
    const Histogram h({0.25, 0.5, 0.25});
    CHECK(histogram_from_json(to_json(h)).bin_masses == h.bin_masses);
}
