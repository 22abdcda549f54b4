#include "grid_entropy/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "grid_entropy/error.hpp"
#include "grid_entropy/numeric.hpp"
#include "grid_entropy/parallel.hpp"
#include "grid_entropy/prokhorov.hpp"

namespace grid_entropy {

namespace {

constexpr char kDumpMagic[8] = {'G', 'E', 'D', 'P', 'T', 'B', 'L', '\0'};
constexpr std::uint32_t kDumpVersion = 1;

void check_beta(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be finite and non-negative");
}

void check_endpoint(const Environment& env, const LatticePoint& endpoint) {
    if (endpoint.size() != env.dim) throw InputError("endpoint dimension does not match the environment");
    for (auto c : endpoint)
        if (c < 0) throw InputError("endpoint coordinates must be non-negative");
}

// Slab strides for the box with coordinate 0 slowest.
std::vector<std::size_t> strides_of(const LatticePoint& extents) {
    std::vector<std::size_t> stride(extents.size(), 1);
    for (std::size_t k = extents.size(); k-- > 1;)
        stride[k - 1] = stride[k] * static_cast<std::size_t>(extents[k] + 1);
    return stride;
}

// Visits every point of the box in flat index order and hands visit(coord, value)
// the DP entry. Only the current and previous coordinate-0 slabs are held.
template <typename Visit>
void sweep(const Environment& env, const LatticePoint& extents, std::optional<std::int64_t> level_cap, double beta,
           const TauFn& tau, DpMode mode, Visit&& visit) {
    const std::size_t dim = extents.size();
    const auto stride = strides_of(extents);
    const std::size_t slab = stride[0];
    std::vector<double> prev(slab, kNegInf), cur(slab, kNegInf);
    LatticePoint coord(dim, 0);

    for (std::int64_t i0 = 0; i0 <= extents[0]; ++i0) {
        coord.assign(dim, 0);
        coord[0] = i0;
        std::int64_t l1 = i0;
        for (std::size_t s = 0; s < slab; ++s) {
            if (s > 0) {
                // Mixed-radix increment over coordinates 1..D-1, last fastest.
                for (std::size_t k = dim - 1; k >= 1; --k) {
                    if (coord[k] < extents[k]) {
                        ++coord[k];
                        ++l1;
                        break;
                    }
                    l1 -= coord[k];
                    coord[k] = 0;
                }
            }
            double value;
            if (level_cap && l1 > *level_cap) {
                value = kNegInf;
            } else if (l1 == 0) {
                value = 0.0;
            } else {
                value = kNegInf;
                for (std::size_t a = 0; a < dim; ++a) {
                    if (coord[a] == 0) continue;
                    const double from = a == 0 ? prev[s] : cur[s - stride[a]];
                    if (from == kNegInf) continue;
                    --coord[a];
                    const double w = tau(edge_label(env, coord, a));
                    ++coord[a];
                    if (mode == DpMode::Softmax)
                        value = log_sum_exp(value, from + beta * w);
                    else
                        value = std::max(value, from + w);
                }
            }
            cur[s] = value;
            visit(coord, l1, value);
        }
        std::swap(prev, cur);
    }
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError("truncated DP table dump");
    return v;
}

}  // namespace

DpTable DpTable::point_to_point(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau,
                                DpMode mode) {
    check_endpoint(env, endpoint);
    check_beta(beta);
    DpTable t;
    t.kind_ = Kind::Point;
    t.mode_ = mode;
    t.env_ = env;
    t.beta_ = beta;
    t.tau_ = tau;
    t.extents_ = endpoint;
    t.endpoint_ = endpoint;
    t.length_ = l1_norm(endpoint);
    sweep(env, t.extents_, std::nullopt, beta, tau, mode,
          [&](const LatticePoint&, std::int64_t, double v) { t.values_.push_back(v); });
    return t;
}

DpTable DpTable::point_to_level(const Environment& env, std::int64_t n, double beta, const TauFn& tau, DpMode mode) {
    if (n < 0) throw InputError("level length must be non-negative");
    if (env.dim == 0) throw InputError("dimension must be positive");
    check_beta(beta);
    DpTable t;
    t.kind_ = Kind::Level;
    t.mode_ = mode;
    t.env_ = env;
    t.beta_ = beta;
    t.tau_ = tau;
    t.extents_.assign(env.dim, n);
    t.length_ = n;
    sweep(env, t.extents_, n, beta, tau, mode,
          [&](const LatticePoint&, std::int64_t, double v) { t.values_.push_back(v); });
    return t;
}

std::size_t DpTable::index(const LatticePoint& v) const {
    const auto stride = strides_of(extents_);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] < 0 || v[k] > extents_[k]) return SIZE_MAX;
        flat += static_cast<std::size_t>(v[k]) * stride[k];
    }
    return flat;
}

double DpTable::at(const LatticePoint& v) const {
    if (v.size() != extents_.size()) throw InputError("lattice point dimension does not match the table");
    const std::size_t i = index(v);
    return i == SIZE_MAX ? kNegInf : values_[i];
}

double DpTable::total() const {
    if (kind_ == Kind::Point) return values_.back();
    double best = kNegInf;
    LogSumExp acc;
    const auto stride = strides_of(extents_);
    for (std::size_t flat = 0; flat < values_.size(); ++flat) {
        std::int64_t l1 = 0;
        std::size_t rest = flat;
        for (std::size_t k = 0; k < extents_.size(); ++k) {
            l1 += static_cast<std::int64_t>(rest / stride[k]);
            rest %= stride[k];
        }
        if (l1 != length_) continue;
        acc.add(values_[flat]);
        best = std::max(best, values_[flat]);
    }
    return mode_ == DpMode::Softmax ? acc.value() : best;
}

bool DpTable::header_equal(const DpTable& o) const {
    return kind_ == o.kind_ && mode_ == o.mode_ && env_.seed == o.env_.seed && env_.dim == o.env_.dim &&
           beta_ == o.beta_ && tau_.hash() == o.tau_.hash() && extents_ == o.extents_ && length_ == o.length_;
}

void DpTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out.write(kDumpMagic, sizeof kDumpMagic);
    write_pod(out, kDumpVersion);
    write_pod(out, static_cast<std::uint32_t>(env_.dim));
    write_pod(out, length_);
    write_pod(out, beta_);
    write_pod(out, tau_.hash());
    write_pod(out, env_.seed);
    write_pod(out, static_cast<std::uint8_t>(kind_));
    write_pod(out, static_cast<std::uint8_t>(mode_));
    for (auto e : extents_) write_pod(out, e);
    write_pod(out, static_cast<std::uint64_t>(values_.size()));
    out.write(reinterpret_cast<const char*>(values_.data()), static_cast<std::streamsize>(values_.size() * sizeof(double)));
    if (!out) throw InputError("failed writing " + path);
}

DpTable DpTable::load(const std::string& path, const TauFn& tau) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    char magic[sizeof kDumpMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kDumpMagic, sizeof magic) != 0) throw InputError(path + " is not a DP table dump");
    if (read_pod<std::uint32_t>(in) != kDumpVersion) throw InputError(path + ": unsupported DP table version");
    DpTable t;
    t.env_.dim = read_pod<std::uint32_t>(in);
    t.length_ = read_pod<std::int64_t>(in);
    t.beta_ = read_pod<double>(in);
    if (read_pod<std::uint64_t>(in) != tau.hash()) throw InputError(path + ": tau does not match the recorded fingerprint");
    t.tau_ = tau;
    t.env_.seed = read_pod<std::uint64_t>(in);
    t.kind_ = static_cast<Kind>(read_pod<std::uint8_t>(in));
    t.mode_ = static_cast<DpMode>(read_pod<std::uint8_t>(in));
    t.extents_.resize(t.env_.dim);
    std::size_t expected = 1;
    for (auto& e : t.extents_) {
        e = read_pod<std::int64_t>(in);
        if (e < 0) throw InputError(path + ": negative extent");
        expected *= static_cast<std::size_t>(e + 1);
    }
    if (t.kind_ == Kind::Point) t.endpoint_ = t.extents_;
    const auto count = read_pod<std::uint64_t>(in);
    if (count != expected) throw InputError(path + ": value count does not match extents");
    t.values_.resize(count);
    in.read(reinterpret_cast<char*>(t.values_.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw InputError("truncated DP table dump");
    return t;
}

double log_partition_point(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau) {
    check_endpoint(env, endpoint);
    check_beta(beta);
    double last = kNegInf;
    sweep(env, endpoint, std::nullopt, beta, tau, DpMode::Softmax,
          [&](const LatticePoint&, std::int64_t, double v) { last = v; });
    return last;
}

double log_partition_level(const Environment& env, std::int64_t n, double beta, const TauFn& tau) {
    if (n < 0) throw InputError("level length must be non-negative");
    check_beta(beta);
    LogSumExp acc;
    sweep(env, LatticePoint(env.dim, n), n, beta, tau, DpMode::Softmax, [&](const LatticePoint&, std::int64_t l1, double v) {
        if (l1 == n) acc.add(v);
    });
    return acc.value();
}

double last_passage_value(const Environment& env, const LatticePoint& endpoint, const TauFn& tau) {
    check_endpoint(env, endpoint);
    double last = kNegInf;
    sweep(env, endpoint, std::nullopt, 1.0, tau, DpMode::MaxPlus,
          [&](const LatticePoint&, std::int64_t, double v) { last = v; });
    return last;
}

LastPassage last_passage(const Environment& env, const LatticePoint& endpoint, const TauFn& tau) {
    const DpTable table = DpTable::point_to_point(env, endpoint, 1.0, tau, DpMode::MaxPlus);
    LastPassage out;
    out.value = table.total();
    out.path.start = LatticePoint(env.dim, 0);
    LatticePoint v = endpoint;
    std::vector<std::uint8_t> reversed;
    while (l1_norm(v) > 0) {
        const double here = table.at(v);
        std::size_t chosen = env.dim;
        double best = kNegInf;
        for (std::size_t a = 0; a < env.dim; ++a) {
            if (v[a] == 0) continue;
            --v[a];
            const double cand = table.at(v) + tau(edge_label(env, v, a));
            ++v[a];
            if (cand == here) {
                chosen = a;
                break;
            }
            if (cand > best) {
                best = cand;
                chosen = a;
            }
        }
        reversed.push_back(static_cast<std::uint8_t>(chosen));
        --v[chosen];
    }
    out.path.steps.assign(reversed.rbegin(), reversed.rend());
    return out;
}

PolymerSampler::PolymerSampler(DpTable table) : table_(std::move(table)) {
    if (table_.mode() != DpMode::Softmax) throw InputError("polymer sampling needs a softmax table");
}

Path PolymerSampler::sample(std::uint64_t stream_seed, std::uint64_t index) const {
    const CounterRng rng(mix64(stream_seed) ^ mix64(index + 0x5851F42D4C957F2DULL));
    const Environment& env = table_.env();
    const double beta = table_.beta();
    std::uint64_t draw = 0;

    LatticePoint v;
    if (table_.kind() == DpTable::Kind::Point) {
        v = table_.endpoint();
    } else {
        // Endpoint on the level with probability Z(v) / Z_level, by inversion in flat order.
        const double log_total = table_.total();
        const double u = rng.uniform(draw++);
        const std::int64_t n = table_.length();
        LatticePoint last_on_level;
        double cumulative = 0.0;
        LatticePoint c(env.dim, 0);
        bool done = false;
        // Walk the level points in lexicographic order.
        std::function<void(std::size_t, std::int64_t)> walk = [&](std::size_t k, std::int64_t remaining) {
            if (done) return;
            if (k + 1 == env.dim) {
                c[k] = remaining;
                last_on_level = c;
                cumulative += std::exp(table_.at(c) - log_total);
                if (u < cumulative) done = true;
                return;
            }
            for (std::int64_t x = 0; x <= remaining && !done; ++x) {
                c[k] = x;
                walk(k + 1, remaining - x);
            }
        };
        walk(0, n);
        v = last_on_level;
    }

    std::vector<std::uint8_t> reversed;
    std::vector<double> weights(env.dim);
    while (l1_norm(v) > 0) {
        const double here = table_.at(v);
        double sum = 0.0;
        for (std::size_t a = 0; a < env.dim; ++a) {
            weights[a] = 0.0;
            if (v[a] == 0) continue;
            --v[a];
            weights[a] = std::exp(table_.at(v) + beta * table_.tau()(edge_label(env, v, a)) - here);
            ++v[a];
            sum += weights[a];
        }
        const double u = rng.uniform(draw++) * sum;
        std::size_t chosen = env.dim;
        double cumulative = 0.0;
        for (std::size_t a = 0; a < env.dim; ++a) {
            if (weights[a] == 0.0) continue;
            chosen = a;
            cumulative += weights[a];
            if (u < cumulative) break;
        }
        reversed.push_back(static_cast<std::uint8_t>(chosen));
        --v[chosen];
    }
    Path p;
    p.start = LatticePoint(env.dim, 0);
    p.steps.assign(reversed.rbegin(), reversed.rend());
    return p;
}

Path sample_polymer_path(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau,
                         std::uint64_t rng_seed) {
    return PolymerSampler(DpTable::point_to_point(env, endpoint, beta, tau)).sample(rng_seed, 0);
}

Path sample_polymer_level_path(const Environment& env, std::int64_t n, double beta, const TauFn& tau,
                               std::uint64_t rng_seed) {
    return PolymerSampler(DpTable::point_to_level(env, n, beta, tau)).sample(rng_seed, 0);
}

std::string GibbsTarget::str() const { return q ? "q=" + q->str() : "t=" + t.str(); }

GibbsEstimate gibbs_estimate(const GibbsTarget& target, double beta, const TauFn& tau,
                             std::span<const std::int64_t> n_ladder, std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw InputError("at least one seed is required");
    if (n_ladder.size() < 2) throw InputError("the n ladder needs at least two scales");
    if (target.q && target.q->dim() != target.dim) throw InputError("direction dimension mismatch");
    for (auto n : n_ladder)
        if (n <= 0) throw InputError("ladder scales must be positive");
    check_beta(beta);

    const std::size_t ns = n_ladder.size();
    auto raw = parallel_map<double>(seeds.size() * ns, [&](std::size_t task) {
        const Environment env{seeds[task / ns], target.dim};
        const std::int64_t n = n_ladder[task % ns];
        const double log_z = target.q ? log_partition_point(env, target.q->floor_scaled(n), beta, tau)
                                      : log_partition_level(env, target.t.floor_times(n), beta, tau);
        return log_z / static_cast<double>(n);
    });

    GibbsEstimate est;
    std::vector<double> xs(n_ladder.begin(), n_ladder.end());
    double residual = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        std::vector<double> ys(raw.begin() + static_cast<std::ptrdiff_t>(s * ns),
                               raw.begin() + static_cast<std::ptrdiff_t>((s + 1) * ns));
        const LinearFit fit = fit_inverse_n(xs, ys);
        est.per_seed.push_back(fit.intercept);
        residual = std::max(residual, fit.max_abs_residual);
        for (std::size_t i = 0; i < ns; ++i) est.rows.push_back({seeds[s], n_ladder[i], ys[i]});
    }
    double sum = 0.0;
    for (double a : est.per_seed) sum += a;
    est.value = sum / static_cast<double>(est.per_seed.size());
    double spread = 0.0;
    for (double a : est.per_seed) spread = std::max(spread, std::abs(a - est.value));
    est.band = std::max(residual, spread);
    return est;
}

std::vector<ConvergenceRow> empirical_convergence_diagnostic(const Environment& env, const Direction& q, double beta,
                                                             const TauFn& tau, std::span<const std::int64_t> n_ladder,
                                                             std::size_t samples_per_n,
                                                             std::span<const Measure> candidates,
                                                             std::uint64_t rng_seed) {
    if (samples_per_n == 0) throw InputError("need at least one sample per scale");
    if (q.dim() != env.dim) throw InputError("direction dimension does not match the environment");
    std::vector<ConvergenceRow> rows;
    for (std::int64_t n : n_ladder) {
        if (n <= 0) throw InputError("ladder scales must be positive");
        const PolymerSampler sampler(DpTable::point_to_point(env, q.floor_scaled(n), beta, tau));
        std::vector<double> labels;
        for (std::size_t k = 0; k < samples_per_n; ++k) {
            const auto l = sampler.sample(rng_seed ^ static_cast<std::uint64_t>(n), k).labels(env);
            labels.insert(labels.end(), l.begin(), l.end());
        }
        std::sort(labels.begin(), labels.end());
        ConvergenceRow row;
        row.n = n;
        row.mean_measure =
            empirical_measure_sorted(labels, 1.0 / (static_cast<double>(n) * static_cast<double>(samples_per_n)));
        for (const Measure& c : candidates) row.to_candidates.push_back(prokhorov_distance(row.mean_measure, c));
        rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        rows[i].to_next = prokhorov_distance(rows[i].mean_measure, rows[i + 1].mean_measure);
    return rows;
}

}  // namespace grid_entropy
