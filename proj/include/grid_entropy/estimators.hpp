#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"

namespace grid_entropy {

/// How a path's distance to the target enters the exponential cost.
enum class CostScaling {
    /// n * rho(mu_pi / n, nu): the normalized form used by the estimators.
    Normalized,
    /// rho(mu_pi, n nu): the unnormalized directed-metric form, which is exactly
    /// superadditive under path concatenation.
    Unnormalized,
};

struct EnsembleOptions {
    std::uint64_t budget = kDefaultPathBudget;
    CostScaling scaling = CostScaling::Normalized;
};

/// rho((1/n) mu, nu) for a path with the given sorted labels.
double normalized_distance(std::span<const double> sorted_labels, const Measure& nu, std::int64_t n);

/// rho((1/n) mu_pi, nu) for every path 0 -> floor(n q), in enumeration order.
std::vector<double> path_distances(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n,
                                   std::uint64_t budget = kDefaultPathBudget);
/// Same over the paths to an explicit endpoint.
std::vector<double> endpoint_distances(const Environment& env, const LatticePoint& endpoint, const Measure& nu,
                                       std::int64_t n, std::uint64_t budget = kDefaultPathBudget);
/// Same over every length-floor(n t) path from the origin.
std::vector<double> level_distances(const Environment& env, Rational t, const Measure& nu, std::int64_t n,
                                    std::uint64_t budget = kDefaultPathBudget);

/// (1/n) log sum exp(-(n/eps) d) over precomputed normalized distances.
double eps_sum_from_distances(std::span<const double> distances, std::int64_t n, double eps);

struct OrderStatSeries {
    std::int64_t n = 0;
    std::string ensemble;  // direction or level description
    Measure target;
    std::vector<std::uint64_t> js;
    std::vector<double> values;  // +inf when j exceeds the path count
    std::uint64_t path_count = 0;
};

/// Order statistics min^j rho((1/n) mu_pi, nu) over paths 0 -> floor(n q), streamed
/// through a bounded max-heap of size max(js).
OrderStatSeries order_stat_series(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n,
                                  std::span<const std::uint64_t> js, std::uint64_t budget = kDefaultPathBudget);

/// Paper's directed cost sum: log sum_{pi: start -> end} exp(-rho(mu_pi, target) / eps).
double cost_sum(const Environment& env, const LatticePoint& start, const LatticePoint& end, const Measure& target,
                double eps, std::uint64_t budget = kDefaultPathBudget);

/// (1/n) log sum over paths 0 -> floor(n q) of exp(-(n/eps) rho((1/n) mu_pi, nu)),
/// or (1/n) cost_sum(0, floor(n q), n nu) under CostScaling::Unnormalized.
double eps_sum(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n, double eps,
               const EnsembleOptions& options = {});
/// log sum over paths start -> end of exp(-cost / eps), where cost is
/// n rho(mu_pi / n, nu) or rho(mu_pi, n nu) according to options.scaling.
double log_cost_sum(const Environment& env, const LatticePoint& start, const LatticePoint& end, const Measure& nu,
                    std::int64_t n, double eps, const EnsembleOptions& options = {});
/// eps_sum with an explicit endpoint instead of floor(n q).
double eps_sum_endpoint(const Environment& env, const LatticePoint& endpoint, const Measure& nu, std::int64_t n,
                        double eps, const EnsembleOptions& options = {});
/// Direction-free cost sum over all length-floor(n t) paths from the origin.
double eps_sum_level(const Environment& env, Rational t, const Measure& nu, std::int64_t n, double eps,
                     const EnsembleOptions& options = {});

enum class EstimateMethod { OrderStats, EpsSum, Conjugate };
std::string to_string(EstimateMethod m);

struct LadderRow {
    std::uint64_t seed = 0;
    double parameter = 0.0;  // eps, alpha or beta depending on the method
    std::int64_t n = 0;
    double raw = 0.0;
    double extrapolated = 0.0;
};

struct EstimateDiagnostics {
    bool monotone = true;           // the method's monotonicity expectation held
    bool exceeds_upper_bound = false;
    bool ambiguous = false;         // decision rule had split votes
    std::vector<std::string> notes;
};

/// One estimate of a grid entropy. Raw estimates are never clamped to [0, H(q)];
/// violations are recorded in the diagnostics instead.
struct EntropyEstimate {
    EstimateMethod method = EstimateMethod::EpsSum;
    double value = 0.0;  // may be -inf
    std::vector<std::pair<std::int64_t, double>> n_ladder;
    double extrapolated = 0.0;
    double band = 0.0;
    EstimateDiagnostics diagnostics;
    std::optional<double> cross_check;  // direction-free vs balanced-direction gap
    double parameter = 0.0;             // selected eps, beta, or the largest vanishing alpha
    std::vector<std::pair<double, bool>> alpha_classes;  // (alpha, vanishing) for order statistics
    std::vector<LadderRow> rows;
};

struct OrderStatOptions {
    /// Vanishing threshold; when unset, 2 * (1/(2m) + 1/n_max) with m = lebesgue_resolution.
    std::optional<double> threshold;
    std::size_t lebesgue_resolution = 64;
    std::uint64_t budget = kDefaultPathBudget;
};

/// Vanishing threshold used when OrderStatOptions::threshold is unset.
double default_vanishing_threshold(std::size_t lebesgue_resolution, std::int64_t n_max);

/// Critical-exponent estimate from order statistics.
///
/// An alpha is classified vanishing when min^{floor(e^{alpha n})} decreases along
/// the n ladder and ends below the vanishing threshold for a majority of seeds;
/// `parameter` holds the largest vanishing alpha on the grid. The value is -inf
/// when alpha = 0 (the minimum distance) fails to vanish. Otherwise it is the
/// 1/n extrapolation of the finite-n critical exponents (1/n) log #{pi : rho < threshold}
/// (seed-mean counts), which are exactly where the order statistic crosses the threshold.
EntropyEstimate estimate_entropy_orderstats(std::span<const std::uint64_t> seeds, const Direction& q, const Measure& nu,
                                            std::span<const std::int64_t> n_ladder,
                                            std::span<const double> alpha_grid, const OrderStatOptions& options = {});

struct EpsEstimateOptions {
    std::uint64_t budget = kDefaultPathBudget;
};

/// Cost-sum estimate: for each eps, fits raw(n) = a + b/n to the seed-averaged
/// cost sums and returns min over eps of a(eps).
EntropyEstimate estimate_entropy_eps(std::span<const std::uint64_t> seeds, const Direction& q, const Measure& nu,
                                     std::span<const std::int64_t> n_ladder, std::span<const double> eps_ladder,
                                     const EpsEstimateOptions& options = {});

/// Direction-free estimate over paths of length floor(n t), t = tv_norm(nu). The
/// cross_check field holds |estimate - estimate in direction t*(1/D,...,1/D)|,
/// computed on the ladder points where n t / D is an integer.
EntropyEstimate estimate_entropy_level(std::size_t dim, std::span<const std::uint64_t> seeds, const Measure& nu,
                                       std::span<const std::int64_t> n_ladder, std::span<const double> eps_ladder,
                                       const EpsEstimateOptions& options = {});

/// Total mass as an exact rational (denominator up to 10^6); throws InputError otherwise.
Rational mass_as_rational(const Measure& nu);

}  // namespace grid_entropy
