#include "grid_entropy/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include "grid_entropy/error.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/parallel.hpp"
#include "grid_entropy/prokhorov.hpp"

namespace grid_entropy {

namespace {

// Exponential cost of a path: factor * rho(unit * mu_pi, target).
struct PathCost {
    Measure target;
    double unit;
    double factor;

    PathCost(const Measure& nu, std::int64_t n, CostScaling scaling) {
        if (n <= 0) throw InputError("scale n must be positive");
        const auto dn = static_cast<double>(n);
        if (scaling == CostScaling::Normalized) {
            target = nu;
            unit = 1.0 / dn;
            factor = dn;
        } else {
            target = scale(nu, dn);
            unit = 1.0;
            factor = 1.0;
        }
    }

    double operator()(std::span<const double> sorted_labels) const {
        return factor * prokhorov_distance(empirical_measure_sorted(sorted_labels, unit), target);
    }
};

LatticePoint origin(std::size_t dim) { return LatticePoint(dim, 0); }

std::uint64_t alpha_rank(double alpha, std::int64_t n) {
    const double j = std::floor(std::exp(alpha * static_cast<double>(n)) * (1.0 + 1e-12));
    return j < 1.0 ? 1 : (j > 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(j));
}

void require_ladder(std::span<const std::uint64_t> seeds, std::span<const std::int64_t> n_ladder) {
    if (seeds.empty()) throw InputError("at least one seed is required");
    if (n_ladder.empty()) throw InputError("the n ladder must not be empty");
    for (auto n : n_ladder)
        if (n <= 0) throw InputError("ladder scales must be positive");
}

using DistanceProvider = std::function<std::vector<double>(std::uint64_t seed, std::int64_t n)>;

// Shared cost-sum extrapolation for the direction-fixed and direction-free ensembles.
EntropyEstimate eps_estimate(std::span<const std::uint64_t> seeds, std::span<const std::int64_t> n_ladder,
                             std::span<const double> eps_ladder, const DistanceProvider& distances,
                             double upper_bound) {
    require_ladder(seeds, n_ladder);
    if (eps_ladder.empty()) throw InputError("the eps ladder must not be empty");
    for (std::size_t k = 0; k < eps_ladder.size(); ++k) {
        if (!(eps_ladder[k] > 0.0)) throw InputError("eps values must be positive");
        if (k > 0 && !(eps_ladder[k] < eps_ladder[k - 1])) throw InputError("the eps ladder must be decreasing");
    }

    const std::size_t ns = n_ladder.size(), ss = seeds.size();
    auto profiles = parallel_map<std::vector<double>>(ss * ns, [&](std::size_t task) {
        return distances(seeds[task / ns], n_ladder[task % ns]);
    });

    EntropyEstimate est;
    est.method = EstimateMethod::EpsSum;
    std::vector<double> xs(n_ladder.begin(), n_ladder.end());
    std::vector<double> limits;
    std::vector<LinearFit> fits;
    std::vector<std::vector<double>> previous_raw;  // [seed * ns + i] for the monotonicity audit
    for (double eps : eps_ladder) {
        std::vector<double> avg(ns, 0.0);
        std::vector<double> raw(ss * ns);
        for (std::size_t s = 0; s < ss; ++s)
            for (std::size_t i = 0; i < ns; ++i) {
                raw[s * ns + i] = eps_sum_from_distances(profiles[s * ns + i], n_ladder[i], eps);
                avg[i] += raw[s * ns + i] / static_cast<double>(ss);
            }
        if (!previous_raw.empty()) {
            for (std::size_t k = 0; k < raw.size(); ++k)
                if (raw[k] > previous_raw.back()[k] + 1e-12) {
                    est.diagnostics.monotone = false;
                    est.diagnostics.notes.push_back("cost sum increased as eps decreased");
                    break;
                }
        }
        previous_raw.push_back(raw);
        const LinearFit fit = fit_inverse_n(xs, avg);
        fits.push_back(fit);
        limits.push_back(fit.intercept);
        for (std::size_t s = 0; s < ss; ++s)
            for (std::size_t i = 0; i < ns; ++i)
                est.rows.push_back({seeds[s], eps, n_ladder[i], raw[s * ns + i], fit.intercept});
    }

    const auto best = static_cast<std::size_t>(std::min_element(limits.begin(), limits.end()) - limits.begin());
    est.value = limits[best];
    est.extrapolated = limits[best];
    est.parameter = eps_ladder[best];
    const double gap = best > 0 ? std::abs(limits[best] - limits[best - 1]) : 0.0;
    est.band = fits[best].max_abs_residual + gap;
    for (std::size_t i = 0; i < ns; ++i) {
        double m = 0.0;
        for (std::size_t s = 0; s < ss; ++s) m += previous_raw[best][s * ns + i] / static_cast<double>(ss);
        est.n_ladder.emplace_back(n_ladder[i], m);
    }
    for (std::size_t k = 1; k < limits.size(); ++k)
        if (limits[k] > limits[k - 1] + est.band) {
            est.diagnostics.monotone = false;
            est.diagnostics.notes.push_back("extrapolated limit increased as eps decreased beyond the band");
        }
    if (est.value > upper_bound + est.band) {
        est.diagnostics.exceeds_upper_bound = true;
        est.diagnostics.notes.push_back("estimate exceeds the path-count entropy bound");
    }
    return est;
}

}  // namespace

double normalized_distance(std::span<const double> sorted_labels, const Measure& nu, std::int64_t n) {
    if (n <= 0) throw InputError("scale n must be positive");
    return prokhorov_distance(empirical_measure_sorted(sorted_labels, 1.0 / static_cast<double>(n)), nu);
}

std::vector<double> endpoint_distances(const Environment& env, const LatticePoint& endpoint, const Measure& nu,
                                       std::int64_t n, std::uint64_t budget) {
    std::vector<double> out;
    enumerate_paths(
        env, origin(env.dim), endpoint,
        [&](const Path&, std::span<const double> sorted) { out.push_back(normalized_distance(sorted, nu, n)); },
        budget);
    return out;
}

std::vector<double> path_distances(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n,
                                   std::uint64_t budget) {
    if (q.dim() != env.dim) throw InputError("direction dimension does not match the environment");
    return endpoint_distances(env, q.floor_scaled(n), nu, n, budget);
}

std::vector<double> level_distances(const Environment& env, Rational t, const Measure& nu, std::int64_t n,
                                    std::uint64_t budget) {
    std::vector<double> out;
    enumerate_level_paths(
        env, origin(env.dim), static_cast<std::size_t>(t.floor_times(n)),
        [&](const Path&, std::span<const double> sorted) { out.push_back(normalized_distance(sorted, nu, n)); },
        budget);
    return out;
}

double eps_sum_from_distances(std::span<const double> distances, std::int64_t n, double eps) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    const auto dn = static_cast<double>(n);
    LogSumExp acc;
    for (double d : distances) acc.add(-dn * d / eps);
    return acc.value() / dn;
}

OrderStatSeries order_stat_series(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n,
                                  std::span<const std::uint64_t> js, std::uint64_t budget) {
    if (q.dim() != env.dim) throw InputError("direction dimension does not match the environment");
    if (n <= 0) throw InputError("scale n must be positive");
    for (auto j : js)
        if (j == 0) throw InputError("order statistic ranks start at 1");
    const std::uint64_t k = js.empty() ? 0 : *std::max_element(js.begin(), js.end());
    const double path_mass = static_cast<double>(l1_norm(q.floor_scaled(n))) / static_cast<double>(n);
    // Every path has the same total mass, so the mass-mismatch bound is shared.
    const double lower = std::abs(path_mass - nu.total_mass());

    std::priority_queue<double> heap;  // k smallest distances seen so far
    std::uint64_t count = 0;
    enumerate_paths(
        env, origin(env.dim), q.floor_scaled(n),
        [&](const Path&, std::span<const double> sorted) {
            ++count;
            if (k == 0) return;
            if (heap.size() == k && lower >= heap.top()) return;
            const double d = normalized_distance(sorted, nu, n);
            if (heap.size() < k) {
                heap.push(d);
            } else if (d < heap.top()) {
                heap.pop();
                heap.push(d);
            }
        },
        budget);

    std::vector<double> smallest;
    smallest.reserve(heap.size());
    while (!heap.empty()) {
        smallest.push_back(heap.top());
        heap.pop();
    }
    std::reverse(smallest.begin(), smallest.end());

    OrderStatSeries out;
    out.n = n;
    out.ensemble = "q=" + q.str();
    out.target = nu;
    out.js.assign(js.begin(), js.end());
    out.path_count = count;
    for (auto j : js) out.values.push_back(j <= count ? smallest[j - 1] : kPosInf);
    return out;
}

double cost_sum(const Environment& env, const LatticePoint& start, const LatticePoint& end, const Measure& target,
                double eps, std::uint64_t budget) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    LogSumExp acc;
    enumerate_paths(
        env, start, end,
        [&](const Path&, std::span<const double> sorted) {
            acc.add(-prokhorov_distance(empirical_measure_sorted(sorted), target) / eps);
        },
        budget);
    return acc.value();
}

double log_cost_sum(const Environment& env, const LatticePoint& start, const LatticePoint& end, const Measure& nu,
                    std::int64_t n, double eps, const EnsembleOptions& options) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    const PathCost cost(nu, n, options.scaling);
    LogSumExp acc;
    enumerate_paths(
        env, start, end, [&](const Path&, std::span<const double> sorted) { acc.add(-cost(sorted) / eps); },
        options.budget);
    return acc.value();
}

double eps_sum_endpoint(const Environment& env, const LatticePoint& endpoint, const Measure& nu, std::int64_t n,
                        double eps, const EnsembleOptions& options) {
    return log_cost_sum(env, origin(env.dim), endpoint, nu, n, eps, options) / static_cast<double>(n);
}

double eps_sum(const Environment& env, const Direction& q, const Measure& nu, std::int64_t n, double eps,
               const EnsembleOptions& options) {
    if (q.dim() != env.dim) throw InputError("direction dimension does not match the environment");
    return eps_sum_endpoint(env, q.floor_scaled(n), nu, n, eps, options);
}

double eps_sum_level(const Environment& env, Rational t, const Measure& nu, std::int64_t n, double eps,
                     const EnsembleOptions& options) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    const PathCost cost(nu, n, options.scaling);
    LogSumExp acc;
    enumerate_level_paths(
        env, origin(env.dim), static_cast<std::size_t>(t.floor_times(n)),
        [&](const Path&, std::span<const double> sorted) { acc.add(-cost(sorted) / eps); }, options.budget);
    return acc.value() / static_cast<double>(n);
}

std::string to_string(EstimateMethod m) {
    switch (m) {
        case EstimateMethod::OrderStats: return "orderstats";
        case EstimateMethod::EpsSum: return "eps_sum";
        case EstimateMethod::Conjugate: return "conjugate";
    }
    return "unknown";
}

double default_vanishing_threshold(std::size_t lebesgue_resolution, std::int64_t n_max) {
    return 2.0 * (1.0 / (2.0 * static_cast<double>(lebesgue_resolution)) + 1.0 / static_cast<double>(n_max));
}

EntropyEstimate estimate_entropy_orderstats(std::span<const std::uint64_t> seeds, const Direction& q, const Measure& nu,
                                            std::span<const std::int64_t> n_ladder,
                                            std::span<const double> alpha_grid, const OrderStatOptions& options) {
    require_ladder(seeds, n_ladder);
    const std::size_t ns = n_ladder.size(), ss = seeds.size();
    const std::int64_t n_max = *std::max_element(n_ladder.begin(), n_ladder.end());
    const double threshold = options.threshold.value_or(default_vanishing_threshold(options.lebesgue_resolution, n_max));

    std::vector<double> alphas(alpha_grid.begin(), alpha_grid.end());
    for (double a : alphas)
        if (!(a >= 0.0)) throw InputError("alpha grid values must be non-negative");
    alphas.push_back(0.0);  // the minimum distance decides finiteness
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

    auto sorted_profiles = parallel_map<std::vector<double>>(ss * ns, [&](std::size_t task) {
        auto d = path_distances(Environment{seeds[task / ns], q.dim()}, q, nu, n_ladder[task % ns], options.budget);
        std::sort(d.begin(), d.end());
        return d;
    });
    auto statistic = [&](std::size_t s, std::size_t i, double alpha) {
        const auto& d = sorted_profiles[s * ns + i];
        const std::uint64_t j = alpha_rank(alpha, n_ladder[i]);
        return j <= d.size() ? d[j - 1] : kPosInf;
    };

    EntropyEstimate est;
    est.method = EstimateMethod::OrderStats;
    std::vector<bool> vanishing(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        std::size_t votes = 0;
        for (std::size_t s = 0; s < ss; ++s) {
            bool decreasing = true;
            for (std::size_t i = 0; i < ns; ++i) {
                const double v = statistic(s, i, alphas[a]);
                est.rows.push_back({seeds[s], alphas[a], n_ladder[i], v, 0.0});
                if (i > 0 && v > statistic(s, i - 1, alphas[a])) decreasing = false;
            }
            if (decreasing && statistic(s, ns - 1, alphas[a]) < threshold) ++votes;
        }
        vanishing[a] = 2 * votes > ss;
        if (votes != 0 && votes != ss) est.diagnostics.ambiguous = true;
    }
    for (std::size_t a = 1; a < alphas.size(); ++a)
        if (vanishing[a] && !vanishing[a - 1]) {
            est.diagnostics.monotone = false;
            est.diagnostics.notes.push_back("vanishing set is not an interval starting at alpha = 0");
        }

    for (std::size_t a = 0; a < alphas.size(); ++a) est.alpha_classes.emplace_back(alphas[a], vanishing[a]);

    // Finite-n critical exponent: (1/n) log of the seed-mean number of paths
    // below the threshold, extrapolated in 1/n.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ns; ++i) {
        double count = 0.0;
        for (std::size_t s = 0; s < ss; ++s) {
            const auto& d = sorted_profiles[s * ns + i];
            count += static_cast<double>(std::lower_bound(d.begin(), d.end(), threshold) - d.begin());
        }
        const double exponent = std::log(count / static_cast<double>(ss)) / static_cast<double>(n_ladder[i]);
        est.n_ladder.emplace_back(n_ladder[i], exponent);
        if (std::isfinite(exponent)) {
            xs.push_back(static_cast<double>(n_ladder[i]));
            ys.push_back(exponent);
        }
    }

    std::size_t chosen = 0;
    for (std::size_t a = 0; a < alphas.size(); ++a)
        if (vanishing[a]) chosen = a;
    est.parameter = alphas[chosen];
    const double spacing = chosen + 1 < alphas.size() ? alphas[chosen + 1] - alphas[chosen] : 0.0;
    if (!vanishing[0]) {
        est.value = kNegInf;
        est.band = 0.0;
    } else if (xs.size() >= 2) {
        const LinearFit fit = fit_inverse_n(xs, ys);
        est.value = fit.intercept;
        est.band = fit.max_abs_residual + spacing;
    } else {
        est.value = alphas[chosen];
        est.band = spacing;
        est.diagnostics.notes.push_back("too few ladder points with paths below the threshold to extrapolate");
    }
    est.extrapolated = est.value;
    for (auto& row : est.rows) row.extrapolated = est.value;
    est.diagnostics.notes.push_back("vanishing threshold " + std::to_string(threshold));
    if (est.value > shannon_entropy(q) + est.band) est.diagnostics.exceeds_upper_bound = true;
    return est;
}

EntropyEstimate estimate_entropy_eps(std::span<const std::uint64_t> seeds, const Direction& q, const Measure& nu,
                                     std::span<const std::int64_t> n_ladder, std::span<const double> eps_ladder,
                                     const EpsEstimateOptions& options) {
    return eps_estimate(
        seeds, n_ladder, eps_ladder,
        [&](std::uint64_t seed, std::int64_t n) {
            return path_distances(Environment{seed, q.dim()}, q, nu, n, options.budget);
        },
        shannon_entropy(q));
}

Rational mass_as_rational(const Measure& nu) {
    const double t = nu.total_mass();
    for (std::int64_t den = 1; den <= 1'000'000; ++den) {
        const double scaled = t * static_cast<double>(den);
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) <= 1e-9 * static_cast<double>(den))
            return Rational(static_cast<std::int64_t>(rounded), den);
    }
    throw InputError("target mass is not a rational with a small denominator");
}

EntropyEstimate estimate_entropy_level(std::size_t dim, std::span<const std::uint64_t> seeds, const Measure& nu,
                                       std::span<const std::int64_t> n_ladder, std::span<const double> eps_ladder,
                                       const EpsEstimateOptions& options) {
    if (dim == 0) throw InputError("dimension must be positive");
    const Rational t = mass_as_rational(nu);
    EntropyEstimate est = eps_estimate(
        seeds, n_ladder, eps_ladder,
        [&](std::uint64_t seed, std::int64_t n) { return level_distances(Environment{seed, dim}, t, nu, n, options.budget); },
        t.value() * std::log(static_cast<double>(dim)));

    if (t.num == 0) return est;
    std::vector<std::int64_t> aligned;
    const auto step = static_cast<std::int64_t>(dim) * t.den;
    for (auto n : n_ladder)
        if ((n * t.num) % step == 0) aligned.push_back(n);
    if (aligned.size() >= 2) {
        const EntropyEstimate directed =
            estimate_entropy_eps(seeds, Direction::balanced(dim, t), nu, aligned, eps_ladder, options);
        est.cross_check = std::abs(est.value - directed.value);
    } else {
        est.diagnostics.notes.push_back("fewer than two ladder points align with the balanced direction");
    }
    return est;
}

}  // namespace grid_entropy
