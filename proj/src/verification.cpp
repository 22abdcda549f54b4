#include "grid_entropy/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "grid_entropy/estimators.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/polymer.hpp"
#include "grid_entropy/prokhorov.hpp"
#include "grid_entropy/variational.hpp"

namespace grid_entropy {

namespace {

constexpr double kFloatSlack = 1e-12;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Measure random_measure(const CounterRng& rng, std::uint64_t& draw) {
    const auto atoms = 1 + static_cast<std::size_t>(rng.uniform(draw++) * 8.0);
    const bool on_grid = rng.uniform(draw++) < 0.5;  // grid positions create tied distances
    std::vector<Atom> out;
    for (std::size_t i = 0; i < atoms; ++i) {
        double x = rng.uniform(draw++);
        if (on_grid) x = std::floor(x * 9.0) / 8.0;
        out.push_back({std::min(x, 1.0), 0.1 + 1.9 * rng.uniform(draw++)});
    }
    return Measure(std::move(out));
}

double chi_square_p(std::span<const double> observed, std::span<const double> expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    const boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

CriterionResult make_result(int id, std::string name, double measured, double bound) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.measured = measured;
    r.bound = bound;
    return r;
}

std::uint64_t path_key(const Path& p) {
    std::uint64_t k = 1;
    for (auto s : p.steps) k = k * 4 + s;
    return k;
}

// Shared estimates reused by several criteria.
struct Context {
    const VerifyOptions& options;
    DistanceFn distance;
    std::vector<std::uint64_t> seeds;
    Direction half = Direction::parse("1/2,1/2");
    Measure lambda = discretize_lebesgue(64);
    std::vector<std::int64_t> n_ladder{6, 8, 10, 12};
    std::vector<double> eps_ladder{16, 8, 4};
    std::optional<EntropyEstimate> eps_lambda;
    std::optional<EntropyEstimate> orderstats_lambda;
    std::optional<EntropyEstimate> conjugate_lambda;

    explicit Context(const VerifyOptions& o) : options(o) {
        distance = o.distance ? o.distance : DistanceFn([](const Measure& a, const Measure& b) { return prokhorov_distance(a, b); });
        for (std::uint64_t s = 0; s < 5; ++s) seeds.push_back(o.seed + s);
    }

    double tol(double t) const { return t * options.tolerance_scale; }

    const EntropyEstimate& eps() {
        if (!eps_lambda) eps_lambda = estimate_entropy_eps(seeds, half, lambda, n_ladder, eps_ladder);
        return *eps_lambda;
    }
    const EntropyEstimate& orderstats() {
        if (!orderstats_lambda) {
            std::vector<double> grid;
            for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
            orderstats_lambda = estimate_entropy_orderstats(seeds, half, lambda, n_ladder, grid);
        }
        return *orderstats_lambda;
    }
    EntropyEstimate conjugate(const Measure& nu) {
        ConjugateOptions co;
        co.ladder_bins = 4;
        return conjugate_entropy(GibbsTarget::direction(half), nu, 1.0, co).estimate;
    }
    const EntropyEstimate& conjugate_lambda_estimate() {
        if (!conjugate_lambda) conjugate_lambda = conjugate(lambda);
        return *conjugate_lambda;
    }
};

CriterionResult oracle_equivalence(Context& ctx) {
    CriterionResult r = make_result(1, "prokhorov oracle equivalence", 0.0, ctx.tol(1e-12));
    const CounterRng rng(ctx.options.seed * 0x9E3779B97F4A7C15ULL + 1);
    std::uint64_t draw = 0;
    for (int i = 0; i < 200; ++i) {
        const Measure mu = random_measure(rng, draw);
        const Measure nu = random_measure(rng, draw);
        r.measured = std::max(r.measured, std::abs(ctx.distance(mu, nu) - prokhorov_brute(mu, nu)));
    }
    r.pass = r.measured <= r.bound;
    r.detail = "200 pairs, max |fast - brute|";
    return r;
}

CriterionResult metric_laws(Context& ctx) {
    CriterionResult r = make_result(2, "metric laws", 0.0, ctx.tol(1e-9));
    const CounterRng rng(ctx.options.seed * 0x9E3779B97F4A7C15ULL + 2);
    std::uint64_t draw = 0;
    double tv_excess = kNegInf, sub_excess = kNegInf;
    for (int i = 0; i < 500; ++i) {
        const Measure mu = random_measure(rng, draw);
        const Measure nu = random_measure(rng, draw);
        tv_excess = std::max(tv_excess, ctx.distance(mu, nu) - tv_distance(mu, nu));
    }
    for (int i = 0; i < 500; ++i) {
        const Measure m1 = random_measure(rng, draw), m2 = random_measure(rng, draw);
        const Measure n1 = random_measure(rng, draw), n2 = random_measure(rng, draw);
        sub_excess = std::max(sub_excess, ctx.distance(add(m1, m2), add(n1, n2)) - ctx.distance(m1, n1) - ctx.distance(m2, n2));
    }
    r.measured = std::max(0.0, std::max(tv_excess, sub_excess));
    r.pass = r.measured <= r.bound;
    r.detail = "max(rho - TV) = " + fmt(tv_excess) + ", max subadditivity excess = " + fmt(sub_excess);
    return r;
}

CriterionResult dp_vs_enumeration(Context& ctx) {
    CriterionResult r = make_result(3, "DP vs enumeration", 0.0, ctx.tol(1e-10));
    const TauFn tau = TauFn::identity_ladder(16);
    std::size_t cases = 0;
    for (auto seed : ctx.seeds)
        for (std::int64_t a = 0; a <= 6; ++a)
            for (std::int64_t b = 0; b <= 6; ++b) {
                const Environment env{seed, 2};
                std::vector<double> weights;
                enumerate_paths(env, {0, 0}, {a, b}, [&](const Path& p, std::span<const double>) {
                    weights.push_back(path_weight(env, tau, p));
                });
                for (double beta : {0.5, 1.0, 2.0}) {
                    double sum = 0.0;
                    for (double w : weights) sum += std::exp(beta * w);
                    const double oracle = std::log(sum);
                    const double dp = log_partition_point(env, {a, b}, beta, tau);
                    const double rel = std::abs(dp - oracle) / std::max(std::abs(oracle), 1e-300);
                    r.measured = std::max(r.measured, oracle == 0.0 ? std::abs(dp) : rel);
                    ++cases;
                }
            }
    r.pass = r.measured <= r.bound;
    r.detail = std::to_string(cases) + " (seed, endpoint, beta) cases, max relative error";
    return r;
}

CriterionResult exact_structure(Context& ctx) {
    CriterionResult r = make_result(4, "exact per-environment structure", 0.0, 0.0);
    std::size_t lemma10 = 0, superadd = 0, perturb = 0, level = 0, checks = 0;
    const Measure lam16 = discretize_lebesgue(16);
    const Measure lam8 = discretize_lebesgue(8);
    const Measure tri8 = Histogram::triangular(8).to_measure();

    for (std::uint64_t k = 0; k < 20; ++k) {
        const std::uint64_t seed = ctx.options.seed + k;
        const Environment env{seed, 2};

        // Interval bounds on the normalized cost sum.
        for (const char* qs : {"1/2,1/2", "2/3,1/3"}) {
            const Direction q = Direction::parse(qs);
            for (std::int64_t n : {3, 6, 9})
                for (const Measure& nu : {lam16, scale(lam16, 0.5), Histogram::triangular(16).to_measure()})
                    for (double eps : {0.5, 2.0}) {
                        const double v = eps_sum(env, q, nu, n, eps);
                        const double len = static_cast<double>(l1_norm(q.floor_scaled(n))) / static_cast<double>(n);
                        const double hi = len * std::log(2.0);
                        const double lo = -(len + nu.total_mass()) / eps;
                        ++checks;
                        if (v > hi + kFloatSlack || v < lo - kFloatSlack) ++lemma10;
                    }
        }

        // Superadditivity of the unnormalized cost sum at q = (1,1).
        EnsembleOptions un;
        un.scaling = CostScaling::Unnormalized;
        for (const Measure& nu : {scale(lam8, 2.0), scale(tri8, 2.0)})
            for (double eps : {0.5, 2.0})
                for (std::int64_t m = 1; m <= 4; ++m)
                    for (std::int64_t n = 1; n <= 4; ++n) {
                        const LatticePoint a{m, m}, b{m + n, m + n};
                        const double whole = log_cost_sum(env, {0, 0}, b, nu, m + n, eps, un);
                        const double parts = log_cost_sum(env, {0, 0}, a, nu, m, eps, un) + log_cost_sum(env, a, b, nu, n, eps, un);
                        ++checks;
                        if (whole < parts - kFloatSlack * std::max(1.0, std::abs(parts))) ++superadd;
                    }

        // South-east perturbation inequality.
        const Direction p = Direction::parse("1/2,1/4"), q = Direction::parse("1/2,1/2");
        const std::vector<Measure> targets{lam8, tri8, scale(lam8, 0.75)};
        for (std::int64_t n : {4, 8})
            for (const Measure& nu : targets)
                for (const Measure& xi : targets)
                    for (double eps : {0.5, 2.0}) {
                        const auto fq = q.floor_scaled(n), fp = p.floor_scaled(n);
                        const double gap = static_cast<double>(l1_norm(fq) - l1_norm(fp)) / static_cast<double>(n);
                        const double lhs = eps_sum(env, p, xi, n, eps) - (gap + prokhorov_distance(nu, xi)) / eps;
                        const double rhs = eps_sum(env, q, nu, n, eps);
                        ++checks;
                        if (lhs > rhs + kFloatSlack * std::max(1.0, std::abs(rhs))) ++perturb;
                    }

        // Level decomposition identity.
        for (std::int64_t n : {3, 5, 7})
            for (const Measure& nu : {lam8, scale(lam8, 0.5)})
                for (double eps : {0.5, 2.0}) {
                    const double lv = eps_sum_level(env, Rational(1), nu, n, eps);
                    LogSumExp endpoints;
                    bool dominated = true;
                    for (std::int64_t x = 0; x <= n; ++x) {
                        const double e = eps_sum_endpoint(env, {x, n - x}, nu, n, eps);
                        endpoints.add(static_cast<double>(n) * e);
                        if (e > lv + kFloatSlack * std::max(1.0, std::abs(lv))) dominated = false;
                    }
                    const double decomposed = endpoints.value() / static_cast<double>(n);
                    ++checks;
                    if (!dominated || std::abs(decomposed - lv) > 1e-10 * std::max(1.0, std::abs(lv))) ++level;
                }
    }
    r.measured = static_cast<double>(lemma10 + superadd + perturb + level);
    r.pass = r.measured <= r.bound;
    r.detail = std::to_string(checks) + " checks over 20 seeds; violations: bounds " + std::to_string(lemma10) +
               ", superadditivity " + std::to_string(superadd) + ", perturbation " + std::to_string(perturb) +
               ", level decomposition " + std::to_string(level);
    return r;
}

CriterionResult entropy_of_lebesgue(Context& ctx) {
    CriterionResult r = make_result(5, "entropy of Lebesgue measure", 0.0, ctx.tol(0.10));
    const EntropyEstimate& e = ctx.eps();
    const EntropyEstimate& o = ctx.orderstats();
    bool some_high = false, none_too_high = true;
    for (const auto& [alpha, vanishing] : o.alpha_classes) {
        if (vanishing && alpha >= 0.45 - 1e-12) some_high = true;
        if (vanishing && alpha >= 0.80 - 1e-12) none_too_high = false;
    }
    r.measured = std::abs(e.value - std::log(2.0));
    r.pass = r.measured <= r.bound && some_high && none_too_high;
    r.detail = "eps-sum " + fmt(e.value) + " (eps " + fmt(e.parameter) + "), largest vanishing alpha " +
               fmt(o.parameter) + (some_high ? "" : " [no alpha >= 0.45 vanishing]") +
               (none_too_high ? "" : " [an alpha >= 0.80 vanished]");
    return r;
}

CriterionResult estimator_triangle(Context& ctx) {
    CriterionResult r = make_result(6, "estimator triangle", 0.0, ctx.tol(0.15));
    const double values[] = {ctx.orderstats().value, ctx.eps().value, ctx.conjugate_lambda_estimate().value};
    for (double a : values)
        for (double b : values) r.measured = std::max(r.measured, std::abs(a - b));
    r.pass = r.measured <= r.bound;
    r.detail = "orderstats " + fmt(values[0]) + ", eps-sum " + fmt(values[1]) + ", conjugate " + fmt(values[2]);
    return r;
}

CriterionResult gibbs_consistency(Context& ctx) {
    CriterionResult r = make_result(7, "Gibbs free energy at tau = 0", 0.0, ctx.tol(0.02));
    const std::vector<std::int64_t> ladder{64, 128, 256, 512, 1024, 2048};
    const std::vector<std::uint64_t> seeds{ctx.options.seed};
    const GibbsEstimate g = gibbs_estimate(GibbsTarget::direction(ctx.half), 1.0, TauFn(), ladder, seeds);
    r.measured = std::abs(g.value - std::log(2.0));
    r.pass = r.measured <= r.bound;
    r.detail = "estimate " + fmt(g.value) + " band " + fmt(g.band);
    return r;
}

CriterionResult zero_temperature(Context& ctx) {
    CriterionResult r = make_result(8, "zero-temperature bridge", 0.0, 0.0);
    const TauFn tau = TauFn::identity_ladder(16);
    const double beta = 100.0;
    std::size_t violations = 0, cases = 0;
    double worst_ratio = 0.0;
    for (auto seed : ctx.seeds)
        for (std::int64_t a = 0; a <= 8; ++a)
            for (std::int64_t b = 0; b <= 8; ++b) {
                const Environment env{seed, 2};
                const double soft = log_partition_point(env, {a, b}, beta, tau) / beta;
                const double hard = last_passage_value(env, {a, b}, tau);
                const double allowance = log_path_count({a, b}) / beta;
                const double gap = soft - hard;
                ++cases;
                if (gap < -kFloatSlack || gap > allowance + kFloatSlack) ++violations;
                if (allowance > 0.0) worst_ratio = std::max(worst_ratio, gap / allowance);
            }
    r.measured = static_cast<double>(violations);
    r.pass = violations == 0;
    r.detail = std::to_string(cases) + " endpoints up to (8,8); largest gap / allowance " + fmt(worst_ratio);
    return r;
}

CriterionResult sampler_law(Context& ctx) {
    CriterionResult r = make_result(9, "polymer sampler law", 1.0, 0.01);
    const TauFn tau = TauFn::identity_ladder(16);
    auto run = [&](const LatticePoint& end, double beta, std::size_t samples, std::uint64_t env_seed) {
        const Environment env{env_seed, 2};
        std::map<std::uint64_t, std::size_t> slot;
        std::vector<double> logw;
        enumerate_paths(env, {0, 0}, end, [&](const Path& p, std::span<const double>) {
            slot[path_key(p)] = logw.size();
            logw.push_back(beta * path_weight(env, tau, p));
        });
        LogSumExp z;
        for (double w : logw) z.add(w);
        std::vector<double> expected(logw.size()), observed(logw.size(), 0.0);
        for (std::size_t i = 0; i < logw.size(); ++i)
            expected[i] = std::exp(logw[i] - z.value()) * static_cast<double>(samples);
        const PolymerSampler sampler(DpTable::point_to_point(env, end, beta, tau));
        for (std::size_t k = 0; k < samples; ++k) observed[slot.at(path_key(sampler.sample(ctx.options.seed, k)))] += 1.0;
        return chi_square_p(observed, expected);
    };
    const double p_tilted = run({3, 3}, 1.0, 200000, 5);
    const double p_uniform = run({2, 2}, 0.0, 100000, 5);
    r.measured = std::min(p_tilted, p_uniform);
    r.pass = r.measured > r.bound;
    r.detail = "p(beta=1, (3,3)) = " + fmt(p_tilted) + ", p(beta=0, (2,2)) = " + fmt(p_uniform);
    return r;
}

CriterionResult kl_budget(Context& ctx) {
    CriterionResult r = make_result(10, "KL budget", kPosInf, ctx.tol(-0.10));
    struct Target {
        const char* id;
        Histogram hist;
    };
    const std::vector<Target> targets{{"lebesgue", Histogram::uniform(64)},
                                      {"uniform[0,1/2]", Histogram::uniform_on(0.0, 0.5, 64)},
                                      {"triangular", Histogram::triangular(64)}};
    for (const Target& t : targets) {
        const EntropyEstimate est = std::string(t.id) == "lebesgue" ? ctx.conjugate_lambda_estimate() : ctx.conjugate(t.hist.to_measure());
        const KlBudgetReport rep = kl_budget_check(ctx.half, t.hist, est);
        r.measured = std::min(r.measured, rep.slack);
        r.detail += std::string(r.detail.empty() ? "" : "; ") + t.id + ": KL " + fmt(rep.kl) + " entropy " + fmt(rep.entropy) +
                    " slack " + fmt(rep.slack);
    }
    r.pass = r.measured >= r.bound;
    return r;
}

CriterionResult bernoulli_budget(Context& ctx) {
    CriterionResult r = make_result(11, "Bernoulli exponent budget", 0.0, 0.0);
    const std::vector<std::int64_t> ladder{50, 100, 150, 200};
    const BernoulliReport rep = bernoulli_exponent_check(2, 0.5, 0.75, ladder, ctx.seeds);
    r.measured = rep.measured;
    r.bound = rep.budget + ctx.tol(0.05);
    r.pass = r.measured <= r.bound;
    r.detail = "budget log 2 - KL(3/4 || 1/2) = " + fmt(rep.budget) + ", largest exponent at n = 200";
    return r;
}

CriterionResult direction_free(Context& ctx) {
    CriterionResult r = make_result(12, "direction-free reduction", 0.0, ctx.tol(0.10));
    const EntropyEstimate lev = estimate_entropy_level(2, ctx.seeds, ctx.lambda, ctx.n_ladder, ctx.eps_ladder);
    const double directed = ctx.eps().value;
    std::size_t violations = 0, checks = 0;
    for (auto seed : ctx.seeds)
        for (auto n : ctx.n_ladder) {
            const Environment env{seed, 2};
            const auto level_d = level_distances(env, Rational(1), ctx.lambda, n);
            const auto point_d = path_distances(env, ctx.half, ctx.lambda, n);
            for (double eps : ctx.eps_ladder) {
                ++checks;
                if (eps_sum_from_distances(level_d, n, eps) < eps_sum_from_distances(point_d, n, eps)) ++violations;
            }
        }
    r.measured = std::abs(lev.value - directed);
    r.pass = r.measured <= r.bound && violations == 0;
    r.detail = "level " + fmt(lev.value) + " vs direction " + fmt(directed) + "; " + std::to_string(violations) +
               " domination violations in " + std::to_string(checks) + " checks";
    return r;
}

}  // namespace

std::vector<CriterionResult> run_verification(const VerifyOptions& options) {
    Context ctx(options);
    using Runner = CriterionResult (*)(Context&);
    const std::vector<std::pair<Runner, double>> criteria{
        {oracle_equivalence, 10},   {metric_laws, 30},    {dp_vs_enumeration, 10}, {exact_structure, 60},
        {entropy_of_lebesgue, 900}, {estimator_triangle, 1200}, {gibbs_consistency, 60}, {zero_temperature, 5},
        {sampler_law, 30},          {kl_budget, 1200},    {bernoulli_budget, 5},   {direction_free, 900},
    };
    std::vector<CriterionResult> results;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!options.only.empty() && !options.only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        CriterionResult r = criteria[i].first(ctx);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.time_limit = criteria[i].second;
        if (r.seconds >= r.time_limit) {
            r.pass = false;
            r.detail += " [runtime limit exceeded]";
        }
        if (options.on_result) options.on_result(r);
        results.push_back(std::move(r));
    }
    return results;
}

std::string verification_table(const std::vector<CriterionResult>& results) {
    std::ostringstream out;
    out << "id,name,measured,bound,pass,seconds\n";
    char buf[256];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%s,%.3f\n", r.id, r.name.c_str(), r.measured, r.bound,
                      r.pass ? "true" : "false", r.seconds);
        out << buf;
    }
    return out.str();
}

}  // namespace grid_entropy
