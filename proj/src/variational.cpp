#include "grid_entropy/variational.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "grid_entropy/error.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/parallel.hpp"

namespace grid_entropy {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

std::string ladder_id(std::span<const double> values) {
    std::string s = "ladder[";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + fmt(values[i]);
    return s + "]";
}

Measure density_atoms(std::size_t m, double mass, const std::function<double(double)>& density) {
    std::vector<Atom> atoms;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(m));
        atoms.push_back({x, density(x)});
        z += atoms.back().mass;
    }
    for (auto& a : atoms) a.mass *= mass / z;
    return Measure(std::move(atoms));
}

}  // namespace

double integral(const TauFn& tau, const Measure& nu) {
    double s = 0.0;
    for (const Atom& a : nu.atoms()) s += a.mass * tau(a.position);
    return s;
}

std::vector<NamedMeasure> histogram_grid_recipe(std::size_t k, std::size_t m, double mass) {
    if (k == 0 || m % k != 0) throw InputError("histogram grid needs k > 0 dividing m");
    std::vector<NamedMeasure> out;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j <= k; ++j) {
            const double lo = static_cast<double>(i) / static_cast<double>(k);
            const double hi = static_cast<double>(j) / static_cast<double>(k);
            out.push_back({"unif[" + fmt(lo) + "," + fmt(hi) + "]",
                           scale(Histogram::uniform_on(lo, hi, m).to_measure(), mass)});
        }
    return out;
}

std::vector<NamedMeasure> tilt_recipe(std::span<const double> thetas, std::size_t m, double mass) {
    if (m == 0) throw InputError("tilt recipe needs m > 0");
    std::vector<NamedMeasure> out;
    for (double theta : thetas)
        out.push_back({"tilt(" + fmt(theta) + ")", density_atoms(m, mass, [theta](double u) { return std::exp(theta * u); })});
    return out;
}

std::vector<NamedMeasure> mixture_recipe(const Measure& a, const Measure& b, std::span<const double> weights) {
    std::vector<NamedMeasure> out;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw InputError("mixture weights must lie in [0,1]");
        out.push_back({"mix(" + fmt(w) + ")", add(scale(a, 1.0 - w), scale(b, w))});
    }
    return out;
}

CandidateFamily estimate_family(std::string recipe, std::vector<NamedMeasure> measures, const Direction& q,
                                std::span<const std::uint64_t> seeds, std::span<const std::int64_t> n_ladder,
                                std::span<const double> eps_ladder, const EpsEstimateOptions& options) {
    CandidateFamily family;
    family.recipe = std::move(recipe);
    for (auto& m : measures) {
        const EntropyEstimate est = estimate_entropy_eps(seeds, q, m.measure, n_ladder, eps_ladder, options);
        family.members.push_back({std::move(m.id), std::move(m.measure), est.value, est.band, est.method});
    }
    return family;
}

VariationalResult variational_sup(double beta, const TauFn& tau, const CandidateFamily& family) {
    if (family.members.empty()) throw InputError("variational_sup needs a nonempty family");
    VariationalResult r;
    r.value = kNegInf;
    for (std::size_t i = 0; i < family.members.size(); ++i) {
        const FamilyMember& m = family.members[i];
        const double v = beta * integral(tau, m.measure) + m.entropy;
        if (i == 0 || v > r.value) {
            r.value = v;
            r.argmax = i;
            r.argmax_id = m.id;
        }
        r.band = std::max(r.band, m.band);
    }
    return r;
}

EntropyEstimate conjugate_from_family(const Measure& nu, double beta, std::span<const TauFn> taus,
                                      std::span<const GibbsEstimate> gibbs) {
    if (taus.empty() || taus.size() != gibbs.size()) throw InputError("need one free energy per tau");
    EntropyEstimate est;
    est.method = EstimateMethod::Conjugate;
    est.parameter = beta;
    std::size_t best = 0;
    double best_value = kPosInf;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double v = gibbs[i].value - beta * integral(taus[i], nu);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    est.value = best_value;
    est.extrapolated = best_value;
    est.band = gibbs[best].band;
    for (const auto& row : gibbs[best].rows)
        est.rows.push_back({row.seed, beta, row.n, row.raw - beta * integral(taus[best], nu), best_value});
    return est;
}

ConjugateResult conjugate_entropy(const GibbsTarget& target, const Measure& nu, double beta,
                                  const ConjugateOptions& options) {
    const std::size_t k = options.ladder_bins;
    if (k == 0 || k > 8) throw InputError("conjugate search supports 1..8 ladder bins");
    if (!(beta > 0.0)) throw InputError("conjugate entropy needs beta > 0");
    if (!(options.cap > 0.0) || !(options.min_step > 0.0)) throw InputError("cap and step must be positive");

    std::map<std::vector<double>, GibbsEstimate> cache;
    auto objective = [&](const std::vector<double>& values) {
        auto it = cache.find(values);
        if (it == cache.end()) {
            it = cache.emplace(values, gibbs_estimate(target, beta, TauFn::equal_bins(values), options.n_ladder,
                                                      options.seeds))
                     .first;
        }
        return it->second.value - beta * integral(TauFn::equal_bins(values), nu);
    };

    std::vector<std::vector<double>> family;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < k; ++i) combos *= 3;
    for (std::size_t c = 0; c < combos; ++c) {
        std::vector<double> v(k);
        for (std::size_t i = 0, r = c; i < k; ++i, r /= 3) v[i] = static_cast<double>(r % 3) - 1.0;
        family.push_back(v);
    }
    const CounterRng rng(options.rng_seed);
    std::uint64_t draw = 0;
    auto random_ladder = [&] {
        std::vector<double> v(k);
        for (auto& x : v) x = 2.0 * rng.uniform(draw++) - 1.0;
        return v;
    };
    for (std::size_t r = 0; r < options.random_ladders; ++r) family.push_back(random_ladder());

    // Free energies of the family are independent; evaluate them in parallel, then cache.
    auto values = parallel_map<GibbsEstimate>(family.size(), [&](std::size_t i) {
        return gibbs_estimate(target, beta, TauFn::equal_bins(family[i]), options.n_ladder, options.seeds);
    });
    for (std::size_t i = 0; i < family.size(); ++i) cache.emplace(family[i], values[i]);

    std::vector<double> best = family[0];
    double best_value = objective(best);
    for (const auto& v : family) {
        const double f = objective(v);
        if (f < best_value) {
            best_value = f;
            best = v;
        }
    }

    auto ascend = [&](std::vector<double> v) {
        double f = objective(v);
        for (double step = 1.0; step >= options.min_step; step /= 2.0) {
            bool improved = true;
            while (improved) {
                improved = false;
                for (std::size_t i = 0; i < k; ++i)
                    for (double dir : {-1.0, 1.0}) {
                        auto trial = v;
                        trial[i] = std::clamp(trial[i] + dir * step, -options.cap, options.cap);
                        if (trial == v) continue;
                        const double g = objective(trial);
                        if (g < f) {
                            f = g;
                            v = std::move(trial);
                            improved = true;
                        }
                    }
            }
        }
        return std::make_pair(f, v);
    };

    std::vector<std::vector<double>> starts{best};
    for (std::size_t r = 0; r < options.restarts; ++r) starts.push_back(random_ladder());
    for (const auto& s : starts) {
        auto [f, v] = ascend(s);
        if (f < best_value) {
            best_value = f;
            best = v;
        }
    }

    ConjugateResult out;
    out.best_tau = TauFn::equal_bins(best);
    out.best_gibbs = cache.at(best);
    out.evaluations = cache.size();
    const TauFn taus[] = {out.best_tau};
    const GibbsEstimate gibbs[] = {out.best_gibbs};
    out.estimate = conjugate_from_family(nu, beta, taus, gibbs);
    out.estimate.diagnostics.notes.push_back("best tau " + ladder_id(best) + " after " +
                                             std::to_string(out.evaluations) + " free-energy evaluations");
    if (target.q && out.estimate.value > shannon_entropy(*target.q) + out.estimate.band)
        out.estimate.diagnostics.exceeds_upper_bound = true;
    return out;
}

KlBudgetReport kl_budget_check(const Direction& q, const Histogram& nu, const EntropyEstimate& estimate) {
    KlBudgetReport r;
    r.path_entropy = shannon_entropy(q);
    const double mass = nu.total_mass();
    if (std::abs(mass - q.l1_norm()) > 1e-9)
        throw InputError("kl_budget_check: histogram mass must equal |q|_1");
    // Divergence of the probability histogram nu / |q|_1, scaled back by |q|_1.
    std::vector<double> normalized(nu.bin_masses);
    for (double& m : normalized) m /= mass;
    r.kl = mass * kl_divergence(Histogram(std::move(normalized)));
    r.entropy = estimate.value;
    r.band = estimate.band;
    r.slack = r.path_entropy - r.kl - r.entropy;
    r.violation = r.slack < -r.band;
    return r;
}

KlBudgetReport kl_budget_check(const Direction& q, const Measure& nu, const EntropyEstimate& estimate) {
    KlBudgetReport r;
    r.path_entropy = shannon_entropy(q);
    r.kl = kl_divergence(nu);
    r.entropy = estimate.value;
    r.band = estimate.band;
    if (std::isinf(r.kl)) {
        r.violation = estimate.value != kNegInf;
        r.slack = r.violation ? kNegInf : kPosInf;
    } else {
        r.slack = r.path_entropy - r.kl - r.entropy;
        r.violation = r.slack < -r.band;
    }
    return r;
}

double bernoulli_kl(double s, double p) {
    if (!(p > 0.0 && p < 1.0) || !(s >= 0.0 && s <= 1.0)) throw InputError("bernoulli_kl needs 0 < p < 1, 0 <= s <= 1");
    auto term = [](double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; };
    return term(s, p) + term(1.0 - s, 1.0 - p);
}

BernoulliReport bernoulli_exponent_check(std::size_t dim, double p, double s, std::span<const std::int64_t> n_ladder,
                                         std::span<const std::uint64_t> seeds) {
    if (dim == 0) throw InputError("dimension must be positive");
    if (!(p > 0.0 && p < 1.0) || !(s > 0.0 && s <= 1.0)) throw InputError("bernoulli check needs 0 < p < 1, 0 < s <= 1");
    if (n_ladder.empty() || seeds.empty()) throw InputError("bernoulli check needs scales and seeds");
    for (auto n : n_ladder)
        if (n <= 0) throw InputError("ladder scales must be positive");

    const double log_d = std::log(static_cast<double>(dim));
    BernoulliReport report;
    report.budget = s > p ? log_d - bernoulli_kl(s, p) : log_d;
    const TauFn unit = TauFn::indicator_from(1.0 - p);
    const std::int64_t n_max = *std::max_element(n_ladder.begin(), n_ladder.end());

    auto per_seed = parallel_map<std::vector<BernoulliRow>>(seeds.size(), [&](std::size_t si) {
        const Environment env{seeds[si], dim};
        // counts[v][c]: paths 0 -> v with c unit weights, divided by D^level to stay in range.
        std::map<LatticePoint, std::vector<double>> level{{LatticePoint(dim, 0), {1.0}}};
        std::vector<BernoulliRow> rows;
        for (std::int64_t len = 1; len <= n_max; ++len) {
            std::map<LatticePoint, std::vector<double>> next;
            const auto width = static_cast<std::size_t>(len + 1);
            for (auto& [v, counts] : level) {
                for (std::size_t a = 0; a < dim; ++a) {
                    const bool one = unit(edge_label(env, v, a)) == 1.0;
                    LatticePoint w = v;
                    ++w[a];
                    auto& dst = next[w];
                    dst.resize(width, 0.0);
                    for (std::size_t c = 0; c < counts.size(); ++c)
                        dst[c + (one ? 1 : 0)] += counts[c] / static_cast<double>(dim);
                }
            }
            level = std::move(next);
            if (std::find(n_ladder.begin(), n_ladder.end(), len) == n_ladder.end()) continue;
            const auto need = static_cast<std::size_t>(std::ceil(static_cast<double>(len) * s - 1e-9));
            double qualifying = 0.0;
            for (const auto& [v, counts] : level)
                for (std::size_t c = need; c < counts.size(); ++c) qualifying += counts[c];
            const double exponent =
                qualifying > 0.0 ? std::log(qualifying) / static_cast<double>(len) + log_d : kNegInf;
            rows.push_back({seeds[si], len, exponent});
        }
        return rows;
    });

    report.measured = kNegInf;
    for (const auto& rows : per_seed)
        for (const auto& row : rows) {
            report.rows.push_back(row);
            if (row.n == n_max) report.measured = std::max(report.measured, row.exponent);
        }
    return report;
}

}  // namespace grid_entropy
