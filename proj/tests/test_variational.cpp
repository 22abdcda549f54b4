#include <doctest.h>

#include <cmath>

#include "grid_entropy/numeric.hpp"
#include "grid_entropy/variational.hpp"

using namespace grid_entropy;

namespace {

const std::vector<std::uint64_t> kSeeds{1, 2, 3};
const std::vector<std::int64_t> kLadder{6, 8, 10, 12};
const std::vector<double> kEps{16.0, 8.0, 4.0};

FamilyMember member(std::string id, Measure m, double entropy, double band = 0.0) {
    FamilyMember f;
    f.id = std::move(id);
    f.measure = std::move(m);
    f.entropy = entropy;
    f.band = band;
    return f;
}

}  // namespace

TEST_CASE("integral") {
    CHECK(integral(TauFn::constant(1.0), scale(discretize_lebesgue(8), 1.5)) == doctest::Approx(1.5));
    CHECK(integral(TauFn(), discretize_lebesgue(8)) == 0.0);
    CHECK(integral(TauFn::indicator_from(0.5), discretize_lebesgue(64)) == doctest::Approx(0.5));
}

TEST_CASE("recipes") {
    const auto grid = histogram_grid_recipe(4, 64, 1.0);
    CHECK(grid.size() == 10);
    for (const auto& m : grid) CHECK(m.measure.total_mass() == doctest::Approx(1.0));
    const std::vector<double> thetas{-2.0, 0.0, 2.0};
    const auto tilts = tilt_recipe(thetas, 32, 2.0);
    CHECK(tilts.size() == 3);
    CHECK(tilts[1].measure == scale(discretize_lebesgue(32), 2.0));
    const std::vector<double> weights{0.0, 0.5, 1.0};
    const auto mix = mixture_recipe(Measure::dirac(0.25), Measure::dirac(0.75), weights);
    CHECK(mix[1].measure == Measure({{0.25, 0.5}, {0.75, 0.5}}));
}

TEST_CASE("variational_sup") {
    const Measure lambda = discretize_lebesgue(64);

    SUBCASE("single member") {
        const CandidateFamily family{"single", {member("lambda", lambda, 0.68, 0.02)}};
        const TauFn tau = TauFn::identity_ladder(8);
        const VariationalResult r = variational_sup(2.0, tau, family);
        CHECK(r.value == doctest::Approx(2.0 * integral(tau, lambda) + 0.68));
        CHECK(r.argmax_id == "lambda");
        CHECK(r.band == 0.02);
    }

    SUBCASE("large beta recovers the best linear functional") {
        const CandidateFamily family{"manual",
                                     {member("low", Measure::dirac(0.1), -0.4), member("lambda", lambda, 0.69),
                                      member("high", Measure::dirac(0.9), -0.6)}};
        const TauFn tau = TauFn::identity_ladder(16);
        double best_linear = kNegInf;
        for (const auto& m : family.members) best_linear = std::max(best_linear, integral(tau, m.measure));
        for (double beta : {10.0, 100.0, 1000.0}) {
            const double scaled = variational_sup(beta, tau, family).value / beta;
            CHECK(std::abs(scaled - best_linear) <= 0.7 / beta);
        }
    }

    SUBCASE("tau = 0 on an estimated family stays below the free energy") {
        const Direction q = Direction::parse("1/2,1/2");
        const CandidateFamily family =
            estimate_family("grid", histogram_grid_recipe(2, 64, 1.0), q, kSeeds, kLadder, kEps);
        const VariationalResult r = variational_sup(1.0, TauFn(), family);
        CHECK(family.members[r.argmax].id == r.argmax_id);
        CHECK(std::abs(r.value - std::log(2.0)) <= 0.1);
        const std::vector<std::int64_t> gibbs_ladder{256, 512, 1024};
        const GibbsEstimate g = gibbs_estimate(GibbsTarget::direction(q), 1.0, TauFn(), gibbs_ladder, kSeeds);
        CHECK(r.value <= g.value + g.band + r.band + 0.1);
    }
}

TEST_CASE("conjugate entropy") {
    const Direction q = Direction::parse("1/2,1/2");
    const Measure lambda = discretize_lebesgue(64);

    SUBCASE("the zero-only family returns the free energy") {
        const std::vector<std::int64_t> ladder{128, 256, 512};
        const std::vector<TauFn> taus{TauFn()};
        const std::vector<GibbsEstimate> gibbs{gibbs_estimate(GibbsTarget::direction(q), 1.0, TauFn(), ladder, kSeeds)};
        const EntropyEstimate e = conjugate_from_family(lambda, 1.0, taus, gibbs);
        CHECK(e.value == doctest::Approx(gibbs[0].value));
        CHECK(std::abs(e.value - shannon_entropy(q)) <= 0.05);
        CHECK(e.method == EstimateMethod::Conjugate);
    }

    SUBCASE("Lebesgue target") {
        ConjugateOptions opt;
        opt.n_ladder = {64, 128, 256};
        opt.ladder_bins = 2;
        const ConjugateResult r = conjugate_entropy(GibbsTarget::direction(q), lambda, 1.0, opt);
        CHECK(std::abs(r.estimate.value - std::log(2.0)) <= 0.15);
        CHECK(r.evaluations > 0);
    }

    SUBCASE("half-interval target sits below the eps-sum estimate") {
        ConjugateOptions opt;
        opt.n_ladder = {64, 128, 256};
        opt.ladder_bins = 2;
        const Histogram half = Histogram::uniform_on(0.0, 0.5, 64);
        const EntropyEstimate conj = conjugate_entropy(GibbsTarget::direction(q), half.to_measure(), 1.0, opt).estimate;
        const EntropyEstimate eps = estimate_entropy_eps(kSeeds, q, half.to_measure(), kLadder, kEps);
        CHECK(conj.value <= eps.value + conj.band + eps.band);
    }
}

TEST_CASE("kl_budget_check") {
    const Direction q = Direction::parse("1/2,1/2");
    EntropyEstimate e;
    e.value = 0.68;
    e.band = 0.02;

    const KlBudgetReport lambda = kl_budget_check(q, Histogram::uniform(64), e);
    CHECK(lambda.kl == doctest::Approx(0.0));
    CHECK(lambda.slack == doctest::Approx(std::log(2.0) - 0.68));
    CHECK_FALSE(lambda.violation);

    e.value = 0.1;
    const KlBudgetReport half = kl_budget_check(q, Histogram::uniform_on(0.0, 0.5, 64), e);
    CHECK(half.kl == doctest::Approx(std::log(2.0)));
    CHECK(half.slack == doctest::Approx(-0.1));
    CHECK(half.violation);

    const Measure atoms({{0.0, 0.5}, {1.0, 0.5}});
    e.value = kNegInf;
    CHECK_FALSE(kl_budget_check(q, atoms, e).violation);
    e.value = 0.2;
    CHECK(kl_budget_check(q, atoms, e).violation);
}

TEST_CASE("bernoulli_exponent_check") {
    const std::vector<std::int64_t> ladder{50, 100, 150, 200};

    SUBCASE("budget case") {
        const BernoulliReport r = bernoulli_exponent_check(2, 0.5, 0.75, ladder, kSeeds);
        CHECK(r.budget == doctest::Approx(std::log(2.0) - bernoulli_kl(0.75, 0.5)));
        CHECK(r.budget == doctest::Approx(0.562335).epsilon(1e-5));
        CHECK(r.measured <= r.budget + 0.05);
        CHECK(r.rows.size() == ladder.size() * kSeeds.size());
    }

    SUBCASE("typical threshold counts almost every path") {
        const BernoulliReport r = bernoulli_exponent_check(2, 0.5, 0.4, ladder, kSeeds);
        CHECK(r.budget == doctest::Approx(std::log(2.0)));
        CHECK(r.measured <= std::log(2.0) + 1e-12);
        CHECK(r.measured >= std::log(2.0) - 0.01);
    }

    SUBCASE("all-ones paths are exponentially rare") {
        const BernoulliReport r = bernoulli_exponent_check(2, 0.5, 1.0, ladder, kSeeds);
        CHECK(r.measured <= 0.0);
    }

    CHECK(bernoulli_kl(0.5, 0.5) == 0.0);
}
