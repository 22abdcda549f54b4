#include "grid_entropy/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "grid_entropy/error.hpp"
#include "grid_entropy/estimators.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/polymer.hpp"
#include "grid_entropy/prokhorov.hpp"
#include "grid_entropy/variational.hpp"
#include "grid_entropy/verification.hpp"

namespace grid_entropy {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double to_double(const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw InputError("'" + text + "' is not a number");
    }
    if (used != t.size()) throw InputError("'" + text + "' is not a number");
    return v;
}

std::int64_t to_int(const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        throw InputError("'" + text + "' is not an integer");
    }
    if (used != t.size()) throw InputError("'" + text + "' is not an integer");
    return v;
}

std::uint64_t to_uint(const std::string& text) {
    const std::int64_t v = to_int(text);
    if (v < 0) throw InputError("'" + text + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

// Runs fn, prefixing any InputError with the config field it came from.
template <typename Fn>
auto field(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const InputError& e) {
        throw InputError("field " + name + ": " + e.what());
    }
}

nlohmann::json jnum(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

nlohmann::json estimate_json(const EntropyEstimate& e) {
    nlohmann::json j;
    j["method"] = to_string(e.method);
    j["value"] = jnum(e.value);
    j["extrapolated"] = jnum(e.extrapolated);
    j["band"] = jnum(e.band);
    j["parameter"] = jnum(e.parameter);
    auto ladder = nlohmann::json::array();
    for (const auto& [n, v] : e.n_ladder) ladder.push_back({{"n", n}, {"raw", jnum(v)}});
    j["n_ladder"] = ladder;
    j["diagnostics"] = {{"monotone", e.diagnostics.monotone},
                        {"exceeds_upper_bound", e.diagnostics.exceeds_upper_bound},
                        {"ambiguous", e.diagnostics.ambiguous},
                        {"notes", e.diagnostics.notes}};
    if (e.cross_check) j["cross_check"] = jnum(*e.cross_check);
    if (!e.alpha_classes.empty()) {
        auto classes = nlohmann::json::array();
        for (const auto& [a, v] : e.alpha_classes) classes.push_back({{"alpha", a}, {"vanishing", v}});
        j["alpha_classes"] = classes;
    }
    return j;
}

std::vector<CsvRow> estimate_rows(const EntropyEstimate& e, std::size_t dim, const std::string& q_or_t,
                                  const std::string& nu_id) {
    std::vector<CsvRow> rows;
    for (const LadderRow& r : e.rows)
        rows.push_back({to_string(e.method), dim, r.seed, q_or_t, nu_id, r.n, r.parameter, r.raw, r.extrapolated, e.band});
    return rows;
}

struct Output {
    nlohmann::json result = nlohmann::json::object();
    std::vector<CsvRow> rows;
    std::string plain;  // replaces the JSON summary on stdout when set
};

class Runner {
public:
    explicit Runner(const ExperimentConfig& c) : c_(c) {}

    Output run() {
        const std::string& cmd = c_.command;
        if (cmd == "metric") return metric();
        if (cmd == "count") return count();
        if (cmd == "orderstats") return orderstats();
        if (cmd == "entropy-eps") return entropy_eps();
        if (cmd == "entropy-level") return entropy_level();
        if (cmd == "gibbs") return gibbs();
        if (cmd == "lpp") return lpp();
        if (cmd == "sample") return sample();
        if (cmd == "conjugate") return conjugate();
        if (cmd == "klbudget") return klbudget();
        if (cmd == "bernoulli") return bernoulli();
        throw InputError("field command: unknown command '" + cmd + "'");
    }

private:
    const ExperimentConfig& c_;

    Direction q() const {
        if (!c_.q) throw InputError("field q: required for " + c_.command);
        return field("q", [&] {
            Direction d = Direction::parse(*c_.q);
            if (d.dim() != c_.dim) throw InputError("dimension " + std::to_string(d.dim()) + " does not match D");
            return d;
        });
    }
    Rational t() const { return field("t", [&] { return Rational::parse(c_.t); }); }
    TargetSpec nu() const { return field("nu", [&] { return parse_target(c_.nu); }); }
    TauFn tau() const { return field("tau", [&] { return parse_tau(c_.tau); }); }
    std::vector<std::uint64_t> seeds() const { return field("seeds", [&] { return parse_seeds(c_.seeds); }); }
    std::vector<double> eps() const { return field("eps_ladder", [&] { return parse_doubles(c_.eps_ladder); }); }
    std::vector<std::int64_t> ladder(const char* fallback) const {
        return field("n_ladder", [&] { return parse_n_ladder(c_.n_ladder.empty() ? fallback : c_.n_ladder); });
    }
    LatticePoint endpoint() const {
        if (!c_.endpoint) throw InputError("field endpoint: required for " + c_.command);
        return field("endpoint", [&] {
            LatticePoint p = parse_point(*c_.endpoint);
            if (p.size() != c_.dim) throw InputError("dimension " + std::to_string(p.size()) + " does not match D");
            return p;
        });
    }
    GibbsTarget gibbs_target() const {
        return c_.q ? GibbsTarget::direction(q()) : GibbsTarget::level(c_.dim, t());
    }
    std::string q_or_t() const { return c_.q ? "q=" + *c_.q : "t=" + c_.t; }

    Output metric() {
        if (!c_.mu) throw InputError("field mu: required for metric");
        const Measure a = field("mu", [&] { return parse_target(*c_.mu).measure; });
        const Measure b = nu().measure;
        Output o;
        const double rho = prokhorov_distance(a, b);
        o.result = {{"rho", rho}};
        if (a.size() + b.size() <= kBruteForceSupportLimit) o.result["rho_brute"] = prokhorov_brute(a, b);
        o.plain = num(rho) + "\n";
        return o;
    }

    Output count() {
        const LatticePoint e = endpoint();
        Output o;
        const std::string value = path_count(e).str();
        o.result = {{"path_count", value}, {"log_path_count", log_path_count(e)}};
        o.plain = value + "\n";
        return o;
    }

    Output orderstats() {
        const Direction d = q();
        const TargetSpec target = nu();
        OrderStatOptions opt;
        opt.threshold = c_.threshold;
        opt.budget = c_.budget;
        if (target.histogram) opt.lebesgue_resolution = target.histogram->bin_count();
        const auto grid = field("alpha_grid", [&] { return parse_grid(c_.alpha_grid); });
        const EntropyEstimate e = estimate_entropy_orderstats(seeds(), d, target.measure, ladder("6,8,10,12"), grid, opt);
        return {{{"estimate", estimate_json(e)}}, estimate_rows(e, c_.dim, q_or_t(), target.id), ""};
    }

    Output entropy_eps() {
        const Direction d = q();
        const TargetSpec target = nu();
        EpsEstimateOptions opt;
        opt.budget = c_.budget;
        const EntropyEstimate e = estimate_entropy_eps(seeds(), d, target.measure, ladder("6,8,10,12"), eps(), opt);
        return {{{"estimate", estimate_json(e)}}, estimate_rows(e, c_.dim, q_or_t(), target.id), ""};
    }

    Output entropy_level() {
        const TargetSpec target = nu();
        EpsEstimateOptions opt;
        opt.budget = c_.budget;
        const EntropyEstimate e = estimate_entropy_level(c_.dim, seeds(), target.measure, ladder("6,8,10,12"), eps(), opt);
        return {{{"estimate", estimate_json(e)}},
                estimate_rows(e, c_.dim, "t=" + mass_as_rational(target.measure).str(), target.id), ""};
    }

    Output gibbs() {
        const GibbsTarget target = gibbs_target();
        const GibbsEstimate g = gibbs_estimate(target, c_.beta, tau(), ladder("64..2048"), seeds());
        Output o;
        o.result = {{"value", jnum(g.value)}, {"band", jnum(g.band)}, {"per_seed", g.per_seed}, {"beta", c_.beta}};
        for (const auto& r : g.rows) o.rows.push_back({"gibbs", c_.dim, r.seed, target.str(), "tau=" + c_.tau, r.n, c_.beta, r.raw, g.value, g.band});
        return o;
    }

    Output lpp() {
        const Environment env{seeds().front(), c_.dim};
        const LastPassage lp = last_passage(env, endpoint(), tau());
        std::string steps;
        for (auto s : lp.path.steps) steps += static_cast<char>('1' + s);
        Output o;
        o.result = {{"value", lp.value}, {"path", steps}, {"seed", env.seed}};
        return o;
    }

    Output sample() {
        const Environment env{seeds().front(), c_.dim};
        const TauFn tf = tau();
        DpTable table = [&] {
            if (!c_.dp_in.empty()) return field("dp_in", [&] { return DpTable::load(c_.dp_in, tf); });
            if (c_.endpoint) return DpTable::point_to_point(env, endpoint(), c_.beta, tf);
            const auto n = ladder("").at(0);
            return DpTable::point_to_level(env, n, c_.beta, tf);
        }();
        if (!c_.dp_out.empty()) table.save(c_.dp_out);
        const PolymerSampler sampler(std::move(table));
        Output o;
        auto paths = nlohmann::json::array();
        for (std::size_t k = 0; k < c_.samples; ++k) {
            const Path p = sampler.sample(c_.rng_seed, k);
            std::string steps;
            for (auto s : p.steps) steps += static_cast<char>('1' + s);
            paths.push_back({{"index", k}, {"path", steps}, {"weight", path_weight(sampler.table().env(), tf, p)}});
        }
        o.result = {{"log_partition", sampler.table().total()}, {"samples", paths}};
        return o;
    }

    Output conjugate() {
        const TargetSpec target = nu();
        ConjugateOptions opt;
        opt.ladder_bins = c_.ladder_bins;
        opt.n_ladder = ladder("128..1024");
        opt.seeds = field("seeds", [&] { return parse_seeds(c_.seeds.empty() ? "1..3" : c_.seeds); });
        opt.rng_seed = c_.rng_seed;
        const ConjugateResult r = conjugate_entropy(gibbs_target(), target.measure, c_.beta, opt);
        Output o;
        o.result = {{"estimate", estimate_json(r.estimate)},
                    {"best_tau", to_json(r.best_tau)},
                    {"evaluations", r.evaluations}};
        o.rows = estimate_rows(r.estimate, c_.dim, q_or_t(), target.id);
        return o;
    }

    Output klbudget() {
        const Direction d = q();
        const TargetSpec target = nu();
        EntropyEstimate e;
        if (c_.method == "conjugate") {
            ConjugateOptions opt;
            opt.ladder_bins = c_.ladder_bins;
            opt.n_ladder = ladder("128..1024");
            opt.seeds = seeds();
            opt.rng_seed = c_.rng_seed;
            e = conjugate_entropy(GibbsTarget::direction(d), target.measure, c_.beta, opt).estimate;
        } else if (c_.method == "eps_sum") {
            EpsEstimateOptions opt;
            opt.budget = c_.budget;
            e = estimate_entropy_eps(seeds(), d, target.measure, ladder("6,8,10,12"), eps(), opt);
        } else if (c_.method == "orderstats") {
            OrderStatOptions opt;
            opt.threshold = c_.threshold;
            opt.budget = c_.budget;
            e = estimate_entropy_orderstats(seeds(), d, target.measure, ladder("6,8,10,12"),
                                            field("alpha_grid", [&] { return parse_grid(c_.alpha_grid); }), opt);
        } else {
            throw InputError("field method: expected conjugate, eps_sum or orderstats");
        }
        const KlBudgetReport rep =
            target.histogram ? kl_budget_check(d, *target.histogram, e) : kl_budget_check(d, target.measure, e);
        Output o;
        o.result = {{"path_entropy", rep.path_entropy}, {"kl", jnum(rep.kl)},   {"entropy", jnum(rep.entropy)},
                    {"band", jnum(rep.band)},           {"slack", jnum(rep.slack)}, {"violation", rep.violation},
                    {"estimate", estimate_json(e)}};
        o.rows = estimate_rows(e, c_.dim, q_or_t(), target.id);
        return o;
    }

    Output bernoulli() {
        const BernoulliReport rep = bernoulli_exponent_check(c_.dim, c_.p, c_.s, ladder("50,100,150,200"), seeds());
        Output o;
        o.result = {{"budget", rep.budget}, {"measured", jnum(rep.measured)}, {"within_budget", rep.measured <= rep.budget + 0.05}};
        for (const auto& r : rep.rows)
            o.rows.push_back({"bernoulli", c_.dim, r.seed, "s=" + num(c_.s), "p=" + num(c_.p), r.n, c_.s, r.exponent, rep.measured, 0.0});
        return o;
    }
};

// Option name on the command line -> config key.
const std::vector<std::pair<std::string, std::string>> kFlags{
    {"--D", "D"},
    {"--q", "q"},
    {"--t", "t"},
    {"--nu", "nu"},
    {"--mu", "mu"},
    {"--tau", "tau"},
    {"--beta", "beta"},
    {"--n", "n_ladder"},
    {"--eps", "eps_ladder"},
    {"--alpha", "alpha_grid"},
    {"--seeds", "seeds"},
    {"--budget", "budget"},
    {"--endpoint", "endpoint"},
    {"--threshold", "threshold"},
    {"--method", "method"},
    {"--k", "ladder_bins"},
    {"--p", "p"},
    {"--s", "s"},
    {"--samples", "samples"},
    {"--rng-seed", "rng_seed"},
    {"--tolerance-scale", "tolerance_scale"},
    {"--criteria", "criteria"},
    {"--csv", "csv"},
    {"--json", "json"},
    {"--svg", "svg"},
    {"--dp-out", "dp_out"},
    {"--dp-in", "dp_in"},
};

int run_verify(const ExperimentConfig& c, std::ostream& out) {
    VerifyOptions opt;
    opt.seed = c.rng_seed;
    opt.tolerance_scale = c.tolerance_scale;
    if (!c.criteria.empty())
        for (const auto& id : split(c.criteria, ',')) opt.only.insert(static_cast<int>(to_int(id)));
    const auto results = run_verification(opt);
    out << verification_table(results);
    if (!c.json.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& r : results)
            arr.push_back({{"id", r.id}, {"name", r.name}, {"measured", jnum(r.measured)}, {"bound", jnum(r.bound)},
                           {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}});
        std::ofstream(c.json) << nlohmann::json{{"criteria", arr}}.dump(2) << "\n";
    }
    const bool ok = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
    return ok ? kExitOk : kExitVerification;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
    auto opt = [](const auto& o) { return o ? std::string(*o) : std::string(); };
    return {
        {"command", command},
        {"D", std::to_string(dim)},
        {"q", opt(q)},
        {"t", t},
        {"nu", nu},
        {"mu", opt(mu)},
        {"tau", tau},
        {"beta", num(beta)},
        {"n_ladder", n_ladder},
        {"eps_ladder", eps_ladder},
        {"alpha_grid", alpha_grid},
        {"seeds", seeds},
        {"budget", std::to_string(budget)},
        {"endpoint", opt(endpoint)},
        {"threshold", threshold ? num(*threshold) : std::string()},
        {"method", method},
        {"ladder_bins", std::to_string(ladder_bins)},
        {"p", num(p)},
        {"s", num(s)},
        {"samples", std::to_string(samples)},
        {"rng_seed", std::to_string(rng_seed)},
        {"tolerance_scale", num(tolerance_scale)},
        {"criteria", criteria},
        {"csv", csv},
        {"json", json},
        {"svg", svg},
        {"dp_out", dp_out},
        {"dp_in", dp_in},
    };
}

std::vector<KeyValue> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    std::vector<KeyValue> out;
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        const std::string t = trim(line.substr(0, line.find('#')));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError(path + ":" + std::to_string(number) + ": expected key=value, got '" + t + "'");
        out.push_back({trim(t.substr(0, eq)), trim(t.substr(eq + 1)), path + ":" + std::to_string(number)});
    }
    return out;
}

void apply_key_values(ExperimentConfig& c, const std::vector<KeyValue>& values) {
    for (const KeyValue& kv : values) {
        const std::string& k = kv.key;
        const std::string& v = kv.value;
        try {
            if (k == "command") c.command = v;
            else if (k == "D") {
                const auto d = to_int(v);
                if (d < 1 || d > 8) throw InputError("D must lie in 1..8");
                c.dim = static_cast<std::size_t>(d);
            } else if (k == "q") c.q = v;
            else if (k == "t") c.t = v;
            else if (k == "nu") c.nu = v;
            else if (k == "mu") c.mu = v;
            else if (k == "tau") c.tau = v;
            else if (k == "beta") c.beta = to_double(v);
            else if (k == "n_ladder") c.n_ladder = v;
            else if (k == "eps_ladder") c.eps_ladder = v;
            else if (k == "alpha_grid") c.alpha_grid = v;
            else if (k == "seeds") c.seeds = v;
            else if (k == "budget") c.budget = to_uint(v);
            else if (k == "endpoint") c.endpoint = v;
            else if (k == "threshold") c.threshold = to_double(v);
            else if (k == "method") c.method = v;
            else if (k == "ladder_bins") c.ladder_bins = to_uint(v);
            else if (k == "p") c.p = to_double(v);
            else if (k == "s") c.s = to_double(v);
            else if (k == "samples") c.samples = to_uint(v);
            else if (k == "rng_seed") c.rng_seed = to_uint(v);
            else if (k == "tolerance_scale") c.tolerance_scale = to_double(v);
            else if (k == "criteria") {
                for (const auto& id : split(v, ','))
                    if (to_int(id) < 1 || to_int(id) > 12) throw InputError("criterion ids lie in 1..12");
                c.criteria = v;
            }            else if (k == "csv") c.csv = v;
            else if (k == "json") c.json = v;
            else if (k == "svg") c.svg = v;
            else if (k == "dp_out") c.dp_out = v;
            else if (k == "dp_in") c.dp_in = v;
            else throw InputError("unknown key");
        } catch (const InputError& e) {
            throw InputError(kv.origin + ": field " + k + ": " + e.what());
        }
    }
}

std::vector<std::int64_t> parse_n_ladder(const std::string& text) {
    std::vector<std::int64_t> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::int64_t lo = to_int(text.substr(0, dots)), hi = to_int(text.substr(dots + 2));
        if (lo <= 0 || hi < lo) throw InputError("ladder range needs 0 < a <= b");
        for (std::int64_t n = lo; n <= hi; n *= 2) out.push_back(n);
    } else {
        for (const auto& part : split(text, ',')) out.push_back(to_int(part));
    }
    if (out.empty()) throw InputError("empty n ladder");
    for (auto n : out)
        if (n <= 0) throw InputError("ladder scales must be positive");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::uint64_t lo = to_uint(text.substr(0, dots)), hi = to_uint(text.substr(dots + 2));
        if (hi < lo || hi - lo > 100000) throw InputError("seed range must be a..b with a <= b");
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
        for (const auto& part : split(text, ',')) out.push_back(to_uint(part));
    }
    if (out.empty()) throw InputError("no seeds given");
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) out.push_back(to_double(part));
    if (out.empty()) throw InputError("empty list");
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() == 1) return parse_doubles(text);
    if (parts.size() != 3) throw InputError("grid must be lo:hi:step or a comma list");
    const double lo = to_double(parts[0]), hi = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || hi < lo) throw InputError("grid needs step > 0 and lo <= hi");
    std::vector<double> out;
    for (std::size_t i = 0; lo + static_cast<double>(i) * step <= hi + 1e-9 * step; ++i)
        out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

LatticePoint parse_point(const std::string& text) {
    LatticePoint p;
    for (const auto& part : split(text, ',')) p.push_back(to_int(part));
    if (p.empty()) throw InputError("empty lattice point");
    for (auto c : p)
        if (c < 0) throw InputError("lattice point coordinates must be non-negative");
    return p;
}

TargetSpec parse_target(const std::string& text) {
    TargetSpec spec;
    spec.id = text;
    std::string body = trim(text);
    double factor = 1.0;
    if (const auto star = body.find('*'); star != std::string::npos) {
        factor = to_double(body.substr(0, star));
        body = trim(body.substr(star + 1));
    }
    const auto colon = body.find(':');
    const std::string kind = body.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : body.substr(colon + 1);

    std::optional<Histogram> hist;
    if (kind == "zero") {
        spec.measure = Measure();
    } else if (kind == "lebesgue") {
        hist = Histogram::uniform(static_cast<std::size_t>(to_uint(arg)));
    } else if (kind == "uniform") {
        const auto v = parse_doubles(arg);
        if (v.size() != 3) throw InputError("uniform:lo,hi,m needs three values");
        hist = Histogram::uniform_on(v[0], v[1], static_cast<std::size_t>(v[2]));
    } else if (kind == "triangular") {
        hist = Histogram::triangular(static_cast<std::size_t>(to_uint(arg)));
    } else if (kind == "hist") {
        hist = Histogram(parse_doubles(arg));
    } else if (kind == "atoms") {
        std::vector<Atom> atoms;
        for (const auto& part : split(arg, ',')) {
            const auto at = part.find('@');
            if (at == std::string::npos) throw InputError("atoms are written position@mass");
            atoms.push_back({to_double(part.substr(0, at)), to_double(part.substr(at + 1))});
        }
        spec.measure = Measure(std::move(atoms));
    } else if (kind == "file") {
        std::ifstream in(arg);
        if (!in) throw InputError("cannot open " + arg);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError(arg + ": " + e.what());
        }
        if (j.is_object())
            hist = histogram_from_json(j);
        else
            spec.measure = measure_from_json(j);
    } else {
        throw InputError("unknown measure spec '" + kind + "'");
    }
    if (hist) {
        for (double& m : hist->bin_masses) m *= factor;
        spec.measure = hist->to_measure();
        spec.histogram = std::move(hist);
    } else {
        spec.measure = scale(spec.measure, factor);
    }
    return spec;
}

TauFn parse_tau(const std::string& text) {
    const std::string body = trim(text);
    const auto colon = body.find(':');
    const std::string kind = body.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : body.substr(colon + 1);
    if (kind == "zero") return TauFn();
    if (kind == "const") return TauFn::constant(to_double(arg));
    if (kind == "indicator") return TauFn::indicator_from(to_double(arg));
    if (kind == "identity") return TauFn::identity_ladder(static_cast<std::size_t>(to_uint(arg)));
    if (kind == "ladder") return TauFn::equal_bins(parse_doubles(arg));
    if (kind == "file") {
        std::ifstream in(arg);
        if (!in) throw InputError("cannot open " + arg);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError(arg + ": " + e.what());
        }
        return tau_from_json(j);
    }
    throw InputError("unknown tau spec '" + kind + "'");
}

void write_csv(std::ostream& out, CsvDocument doc) {
    std::stable_sort(doc.rows.begin(), doc.rows.end(), [](const CsvRow& a, const CsvRow& b) {
        if (a.n != b.n) return a.n < b.n;
        if (a.parameter != b.parameter) return a.parameter > b.parameter;
        return a.seed < b.seed;
    });
    for (const auto& [k, v] : doc.header) out << "# " << k << "=" << v << "\n";
    out << kCsvColumns << "\n";
    for (const CsvRow& r : doc.rows)
        out << csv_field(r.method) << ',' << r.dim << ',' << r.seed << ',' << csv_field(r.q_or_t) << ','
            << csv_field(r.nu_id) << ',' << r.n << ',' << num(r.parameter) << ',' << num(r.raw) << ','
            << num(r.extrapolated) << ',' << num(r.band) << "\n";
}

CsvDocument read_csv(std::istream& in) {
    CsvDocument doc;
    std::string line;
    bool columns_seen = false;
    for (int number = 1; std::getline(in, line); ++number) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw InputError("csv line " + std::to_string(number) + ": malformed header");
            doc.header.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        if (!columns_seen) {
            if (line != kCsvColumns) throw InputError("csv line " + std::to_string(number) + ": unexpected columns");
            columns_seen = true;
            continue;
        }
        const auto f = parse_csv_line(line);
        if (f.size() != 10) throw InputError("csv line " + std::to_string(number) + ": expected 10 fields");
        CsvRow r;
        r.method = f[0];
        r.dim = static_cast<std::size_t>(to_uint(f[1]));
        r.seed = to_uint(f[2]);
        r.q_or_t = f[3];
        r.nu_id = f[4];
        r.n = to_int(f[5]);
        r.parameter = to_double(f[6]);
        r.raw = to_double(f[7]);
        r.extrapolated = to_double(f[8]);
        r.band = to_double(f[9]);
        doc.rows.push_back(std::move(r));
    }
    if (!columns_seen) throw InputError("csv has no column header");
    return doc;
}

std::string render_svg(const std::vector<CsvRow>& rows, const std::string& title) {
    // Seed-mean raw value per (parameter, n), finite values only.
    std::map<double, std::map<std::int64_t, std::pair<double, int>>> series;
    for (const CsvRow& r : rows)
        if (std::isfinite(r.raw)) {
            auto& cell = series[r.parameter][r.n];
            cell.first += r.raw;
            cell.second += 1;
        }
    double xmin = kPosInf, xmax = kNegInf, ymin = kPosInf, ymax = kNegInf;
    for (const auto& [param, pts] : series)
        for (const auto& [n, cell] : pts) {
            const double y = cell.first / cell.second;
            xmin = std::min(xmin, static_cast<double>(n));
            xmax = std::max(xmax, static_cast<double>(n));
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    const double w = 640, h = 400, pad = 60;
    if (!(xmax > xmin)) xmax = xmin + 1, xmin -= 1;
    if (!(ymax > ymin)) ymax = ymin + 1, ymin -= 1;
    auto sx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad); };
    auto sy = [&](double y) { return h - pad - (y - ymin) / (ymax - ymin) * (h - 2 * pad); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"" << h - pad + 18 << "\" font-size=\"11\">" << xmin << "</text>\n";
    out << "<text x=\"" << w - pad << "\" y=\"" << h - pad + 18 << "\" font-size=\"11\" text-anchor=\"end\">n = " << xmax << "</text>\n";
    out << "<text x=\"" << pad - 6 << "\" y=\"" << sy(ymin) << "\" font-size=\"11\" text-anchor=\"end\">" << num(ymin).substr(0, 7) << "</text>\n";
    out << "<text x=\"" << pad - 6 << "\" y=\"" << sy(ymax) << "\" font-size=\"11\" text-anchor=\"end\">" << num(ymax).substr(0, 7) << "</text>\n";
    std::size_t k = 0;
    for (const auto& [param, pts] : series) {
        const char* color = colors[k % 7];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& [n, cell] : pts) out << sx(static_cast<double>(n)) << ',' << sy(cell.first / cell.second) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << w - pad + 4 << "\" y=\"" << pad + 14 * static_cast<double>(k) << "\" font-size=\"11\" fill=\"" << color
            << "\">" << num(param).substr(0, 8) << "</text>\n";
        ++k;
    }
    out << "</svg>\n";
    return out.str();
}

int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (config.command.empty()) throw InputError("field command: no command given");
        if (config.command == "verify") return run_verify(config, out);

        Output o = Runner(config).run();
        nlohmann::json summary;
        auto cfg = nlohmann::json::object();
        for (const auto& [k, v] : config.resolved()) cfg[k] = v;
        summary["config"] = cfg;
        summary["command"] = config.command;
        summary["result"] = o.result;
        if (o.plain.empty())
            out << summary.dump(2) << "\n";
        else
            out << o.plain;
        if (!config.json.empty()) {
            std::ofstream f(config.json);
            if (!f) throw InputError("field json: cannot write " + config.json);
            f << summary.dump(2) << "\n";
        }
        if (!config.csv.empty()) {
            std::ofstream f(config.csv);
            if (!f) throw InputError("field csv: cannot write " + config.csv);
            write_csv(f, {config.resolved(), o.rows});
        }
        if (!config.svg.empty()) {
            std::ofstream f(config.svg);
            if (!f) throw InputError("field svg: cannot write " + config.svg);
            f << render_svg(o.rows, config.command + " " + (config.q ? "q=" + *config.q : "") + " nu=" + config.nu);
        }
        return kExitOk;
    } catch (const BudgetExceeded& e) {
        err << "budget refusal: " << e.what() << "\n";
        return kExitBudget;
    } catch (const InputError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grid entropy experiments on directed lattice paths"};
    app.set_help_flag("-h,--help", "Print help");
    std::string command, config_path;
    app.add_option("command", command,
                   "metric | count | orderstats | entropy-eps | entropy-level | gibbs | lpp | sample | conjugate | "
                   "klbudget | bernoulli | verify");
    app.add_option("--config", config_path, "key=value configuration file; flags override it");
    std::map<std::string, std::string> flag_values;
    for (const auto& [flag, key] : kFlags) app.add_option(flag, flag_values[key], "config key " + key);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    ExperimentConfig config;
    try {
        if (!config_path.empty()) apply_key_values(config, read_key_values(config_path));
        std::vector<KeyValue> flags;
        if (!command.empty()) flags.push_back({"command", command, "command line"});
        for (const auto& [flag, key] : kFlags)
            if (app.count(flag) > 0) flags.push_back({key, flag_values[key], "flag " + flag});
        apply_key_values(config, flags);
    } catch (const InputError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return run_experiment(config, out, err);
}

}  // namespace grid_entropy
