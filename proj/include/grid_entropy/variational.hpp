#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grid_entropy/estimators.hpp"
#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"
#include "grid_entropy/polymer.hpp"

namespace grid_entropy {

/// Integral of tau against nu: sum of mass * tau(position) over the atoms.
double integral(const TauFn& tau, const Measure& nu);

struct FamilyMember {
    std::string id;
    Measure measure;
    double entropy = 0.0;
    double band = 0.0;
    EstimateMethod method = EstimateMethod::EpsSum;
};

/// Finite set of candidate measures with entropy estimates.
struct CandidateFamily {
    std::string recipe;
    std::vector<FamilyMember> members;
};

struct NamedMeasure {
    std::string id;
    Measure measure;
};

/// Uniform densities on the grid intervals [i/k, j/k], discretized to m atoms and
/// scaled to total mass `mass`.
std::vector<NamedMeasure> histogram_grid_recipe(std::size_t k, std::size_t m, double mass);
/// Densities proportional to exp(theta u) on m midpoint atoms, total mass `mass`.
std::vector<NamedMeasure> tilt_recipe(std::span<const double> thetas, std::size_t m, double mass);
/// (1 - w) a + w b for each weight w.
std::vector<NamedMeasure> mixture_recipe(const Measure& a, const Measure& b, std::span<const double> weights);

/// Attaches eps-sum entropy estimates to every recipe member.
CandidateFamily estimate_family(std::string recipe, std::vector<NamedMeasure> measures, const Direction& q,
                                std::span<const std::uint64_t> seeds, std::span<const std::int64_t> n_ladder,
                                std::span<const double> eps_ladder, const EpsEstimateOptions& options = {});

struct VariationalResult {
    double value = 0.0;
    double band = 0.0;  // largest band among the members
    std::size_t argmax = 0;
    std::string argmax_id;
};

/// max over the family of beta * <tau, nu> + entropy estimate.
VariationalResult variational_sup(double beta, const TauFn& tau, const CandidateFamily& family);

struct ConjugateOptions {
    std::vector<std::int64_t> n_ladder{128, 256, 512, 1024};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t ladder_bins = 4;        // k <= 8; the ternary family has 3^k members
    std::size_t random_ladders = 8;
    std::size_t restarts = 3;           // random starting ladders for coordinate ascent
    double cap = 4.0;                   // bound on |tau| during ascent
    double min_step = 0.125;
    std::uint64_t rng_seed = 0x5eed;
};

struct ConjugateResult {
    EntropyEstimate estimate;
    TauFn best_tau;
    GibbsEstimate best_gibbs;
    std::size_t evaluations = 0;
};

/// -max over tau of [beta <tau, nu> - G^beta(tau)], given precomputed free energies.
EntropyEstimate conjugate_from_family(const Measure& nu, double beta, std::span<const TauFn> taus,
                                      std::span<const GibbsEstimate> gibbs);

/// Conjugate entropy estimate with a ladder search: ternary {-1, 0, 1} ladders on
/// k bins, random ladders, then coordinate ascent from the best member and from
/// `restarts` random ladders.
ConjugateResult conjugate_entropy(const GibbsTarget& target, const Measure& nu, double beta,
                                  const ConjugateOptions& options = {});

struct KlBudgetReport {
    double path_entropy = 0.0;  // H(q)
    double kl = 0.0;
    double entropy = 0.0;
    double band = 0.0;
    double slack = 0.0;
    bool violation = false;
};

/// slack = H(q) - D_KL(nu || Lebesgue) - entropy; violation when slack < -band.
KlBudgetReport kl_budget_check(const Direction& q, const Histogram& nu, const EntropyEstimate& estimate);
/// Atomic target: the divergence is infinite, so only an estimate of -inf is consistent.
KlBudgetReport kl_budget_check(const Direction& q, const Measure& nu, const EntropyEstimate& estimate);

struct BernoulliRow {
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    double exponent = 0.0;  // (1/n) log #(length-n paths with >= ceil(n s) unit weights)
};

struct BernoulliReport {
    double budget = 0.0;    // log D - D_KL(Bern(s) || Bern(p)) for s > p, else log D
    double measured = 0.0;  // largest exponent at the largest n across seeds
    std::vector<BernoulliRow> rows;
};

/// Bernoulli(p) weights via tau = indicator of [1 - p, 1]; counts by a (vertex, count) DP.
BernoulliReport bernoulli_exponent_check(std::size_t dim, double p, double s, std::span<const std::int64_t> n_ladder,
                                         std::span<const std::uint64_t> seeds);

/// D_KL(Bern(s) || Bern(p)).
double bernoulli_kl(double s, double p);

}  // namespace grid_entropy
