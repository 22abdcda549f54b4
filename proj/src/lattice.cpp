#include "grid_entropy/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "grid_entropy/error.hpp"
#include "grid_entropy/numeric.hpp"

namespace grid_entropy {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    return parts;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d <= 0 || n < 0) throw InputError("rational must be non-negative with positive denominator");
    const std::int64_t g = std::gcd(n, d);
    num = g == 0 ? 0 : n / g;
    den = g == 0 ? 1 : d / g;
}

Rational Rational::parse(const std::string& text) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const auto slash = t.find('/');
        if (slash == std::string::npos) {
            const auto n = std::stoll(t, &used);
            if (used != t.size()) throw InputError("bad rational: " + text);
            return Rational(n);
        }
        const std::string a = t.substr(0, slash), b = t.substr(slash + 1);
        const auto n = std::stoll(a, &used);
        if (used != a.size()) throw InputError("bad rational: " + text);
        const auto d = std::stoll(b, &used);
        if (used != b.size()) throw InputError("bad rational: " + text);
        return Rational(n, d);
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const InputError*>(&e)) throw;
        throw InputError("bad rational: " + text);
    }
}

std::string Rational::str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

Direction::Direction(std::vector<std::int64_t> numerators, std::int64_t denominator)
    : num_(std::move(numerators)), den_(denominator) {
    if (num_.empty()) throw InputError("direction needs at least one coordinate");
    if (den_ <= 0) throw InputError("direction denominator must be positive");
    std::int64_t g = den_;
    for (auto v : num_) {
        if (v < 0) throw InputError("direction coordinates must be non-negative");
        g = std::gcd(g, v);
    }
    for (auto& v : num_) v /= g;
    den_ /= g;
}

Direction Direction::from_rationals(std::span<const Rational> coords) {
    std::int64_t l = 1;
    for (const auto& r : coords) l = std::lcm(l, r.den);
    std::vector<std::int64_t> num;
    num.reserve(coords.size());
    for (const auto& r : coords) num.push_back(r.num * (l / r.den));
    return Direction(std::move(num), l);
}

Direction Direction::parse(const std::string& text) {
    std::vector<Rational> coords;
    for (const auto& part : split(text, ',')) coords.push_back(Rational::parse(part));
    return from_rationals(coords);
}

Direction Direction::balanced(std::size_t dim, Rational t) {
    if (dim == 0) throw InputError("dimension must be positive");
    return Direction(std::vector<std::int64_t>(dim, t.num), t.den * static_cast<std::int64_t>(dim));
}

double Direction::l1_norm() const { return l1_rational().value(); }

Rational Direction::l1_rational() const {
    return Rational(std::accumulate(num_.begin(), num_.end(), std::int64_t{0}), den_);
}

std::vector<std::int64_t> Direction::floor_scaled(std::int64_t n) const {
    std::vector<std::int64_t> out(num_.size());
    for (std::size_t i = 0; i < num_.size(); ++i) out[i] = n * num_[i] / den_;
    return out;
}

std::string Direction::str() const {
    std::string s;
    for (std::size_t i = 0; i < num_.size(); ++i) {
        if (i) s += ',';
        s += Rational(num_[i], den_).str();
    }
    return s;
}

std::int64_t l1_norm(const LatticePoint& p) {
    std::int64_t s = 0;
    for (auto v : p) s += v < 0 ? -v : v;
    return s;
}

double edge_label(const Environment& env, std::span<const std::int64_t> anchor, std::size_t axis) {
    std::uint64_t h = mix64(env.seed ^ 0x243F6A8885A308D3ULL);
    for (auto c : anchor) h = mix64(h ^ static_cast<std::uint64_t>(c));
    h = mix64(h ^ (static_cast<std::uint64_t>(axis) + 0x13198A2E03707344ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

TauFn::TauFn() : values_{0.0} {}

TauFn::TauFn(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.size() != breakpoints_.size() + 1)
        throw InputError("tau needs exactly one more value than breakpoints");
    if (values_.size() > kMaxCells) throw InputError("tau supports at most 64 cells");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i] > 0.0 && breakpoints_[i] < 1.0))
            throw InputError("tau breakpoints must lie strictly inside (0,1)");
        if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
            throw InputError("tau breakpoints must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InputError("tau values must be finite");
        bound_ = std::max(bound_, std::abs(v));
    }
}

TauFn TauFn::constant(double c) { return TauFn({}, {c}); }

TauFn TauFn::indicator_from(double p) {
    if (p <= 0.0) return constant(1.0);
    if (p >= 1.0) return TauFn({}, {0.0});  // [1,1] is Lebesgue-null; labels are < 1
    return TauFn({p}, {0.0, 1.0});
}

TauFn TauFn::identity_ladder(std::size_t m) {
    if (m == 0 || m > kMaxCells) throw InputError("identity ladder needs 1..64 steps");
    std::vector<double> bps, vals;
    const double dm = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0) bps.push_back(static_cast<double>(i) / dm);
        vals.push_back((2.0 * static_cast<double>(i) + 1.0) / (2.0 * dm));
    }
    return TauFn(std::move(bps), std::move(vals));
}

TauFn TauFn::equal_bins(std::vector<double> values) {
    const std::size_t k = values.size();
    if (k == 0) throw InputError("equal_bins needs at least one value");
    std::vector<double> bps;
    for (std::size_t i = 1; i < k; ++i) bps.push_back(static_cast<double>(i) / static_cast<double>(k));
    return TauFn(std::move(bps), std::move(values));
}

double TauFn::operator()(double u) const {
    const auto cell = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), u) - breakpoints_.begin();
    return values_[static_cast<std::size_t>(cell)];
}

std::uint64_t TauFn::hash() const {
    std::uint64_t h = mix64(values_.size());
    for (double b : breakpoints_) h = mix64(h ^ std::bit_cast<std::uint64_t>(b));
    for (double v : values_) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

nlohmann::json to_json(const TauFn& tau) {
    return {{"breakpoints", std::vector<double>(tau.breakpoints().begin(), tau.breakpoints().end())},
            {"values", std::vector<double>(tau.values().begin(), tau.values().end())}};
}

TauFn tau_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("values")) throw InputError("tau JSON needs breakpoints and values");
    auto bps = j.value("breakpoints", std::vector<double>{});
    return TauFn(std::move(bps), j.at("values").get<std::vector<double>>());
}

LatticePoint Path::end() const {
    LatticePoint p = start;
    for (auto s : steps) ++p[s];
    return p;
}

std::vector<double> Path::labels(const Environment& env) const {
    std::vector<double> out;
    out.reserve(steps.size());
    LatticePoint p = start;
    for (auto s : steps) {
        out.push_back(edge_label(env, p, s));
        ++p[s];
    }
    return out;
}

Path concatenate(const Path& p, const Path& q) {
    if (p.end() != q.start) throw InputError("concatenate: second path must start where the first ends");
    Path out = p;
    out.steps.insert(out.steps.end(), q.steps.begin(), q.steps.end());
    return out;
}

BigInt path_count(const LatticePoint& displacement) {
    BigInt result = 1;
    std::int64_t placed = 0;
    for (auto k : displacement) {
        if (k < 0) return 0;
        // Multiply by C(placed + k, k) incrementally; each partial product is an integer.
        for (std::int64_t i = 1; i <= k; ++i) {
            result *= (placed + i);
            result /= i;
        }
        placed += k;
    }
    return result;
}

double path_count_double(const LatticePoint& displacement) { return path_count(displacement).convert_to<double>(); }

double log_path_count(const LatticePoint& displacement) {
    double total = 0.0, r = 0.0;
    for (auto k : displacement) {
        if (k < 0) return -HUGE_VAL;
        total += static_cast<double>(k);
        r -= std::lgamma(static_cast<double>(k) + 1.0);
    }
    return r + std::lgamma(total + 1.0);
}

double shannon_entropy(const Direction& q) {
    const double norm = q.l1_norm();
    if (norm == 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < q.dim(); ++i) {
        const double qi = q.coord(i);
        if (qi > 0.0) h -= qi * std::log(qi / norm);
    }
    return h;
}

namespace {

// Shared DFS state. Labels are kept in a sorted buffer: inserted on descent,
// erased on backtrack.
struct Dfs {
    const Environment& env;
    const PathVisitor& visit;
    LatticePoint remaining;  // unused for level enumeration
    bool level = false;
    std::size_t level_length = 0;
    Path path;
    LatticePoint cursor;
    std::vector<double> sorted;

    void descend(std::size_t axis) {
        const double u = edge_label(env, cursor, axis);
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), u), u);
        path.steps.push_back(static_cast<std::uint8_t>(axis));
        ++cursor[axis];
        if (!level) --remaining[axis];
    }

    void ascend() {
        const auto axis = path.steps.back();
        path.steps.pop_back();
        --cursor[axis];
        if (!level) ++remaining[axis];
        const double u = edge_label(env, cursor, axis);
        sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), u));
    }

    bool done() const {
        if (level) return path.steps.size() == level_length;
        return std::all_of(remaining.begin(), remaining.end(), [](auto v) { return v == 0; });
    }

    void run() {
        if (done()) {
            visit(path, sorted);
            return;
        }
        for (std::size_t axis = 0; axis < cursor.size(); ++axis) {
            if (!level && remaining[axis] == 0) continue;
            descend(axis);
            run();
            ascend();
        }
    }
};

}  // namespace

void enumerate_paths(const Environment& env, const LatticePoint& start, const LatticePoint& end,
                     const PathVisitor& visit, std::uint64_t budget, std::span<const std::uint8_t> prefix) {
    if (start.size() != env.dim || end.size() != env.dim) throw InputError("endpoint dimension mismatch");
    LatticePoint disp(env.dim);
    for (std::size_t i = 0; i < env.dim; ++i) {
        disp[i] = end[i] - start[i];
        if (disp[i] < 0) throw InputError("endpoint is not NE of the start point");
    }
    const BigInt count = path_count(disp);
    if (count > budget) throw BudgetExceeded(count.convert_to<double>(), budget);

    Dfs dfs{env, visit, disp, false, 0, Path{start, {}}, start, {}};
    dfs.path.steps.reserve(static_cast<std::size_t>(l1_norm(disp)));
    for (auto axis : prefix) {
        if (axis >= env.dim || dfs.remaining[axis] == 0) throw InputError("prefix leaves the endpoint box");
        dfs.descend(axis);
    }
    dfs.run();
}

void enumerate_level_paths(const Environment& env, const LatticePoint& start, std::size_t length,
                           const PathVisitor& visit, std::uint64_t budget) {
    if (start.size() != env.dim) throw InputError("start dimension mismatch");
    const double count = std::pow(static_cast<double>(env.dim), static_cast<double>(length));
    if (count > static_cast<double>(budget)) throw BudgetExceeded(count, budget);
    Dfs dfs{env, visit, {}, true, length, Path{start, {}}, start, {}};
    dfs.path.steps.reserve(length);
    dfs.run();
}

double path_weight(const Environment& env, const TauFn& tau, const Path& path) {
    double w = 0.0;
    LatticePoint p = path.start;
    for (auto s : path.steps) {
        w += tau(edge_label(env, p, s));
        ++p[s];
    }
    return w;
}

}  // namespace grid_entropy
