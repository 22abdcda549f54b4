#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"

namespace grid_entropy {

enum class DpMode {
    Softmax,  // log-sum-exp over predecessors of logZ(u) + beta * tau(U_uv)
    MaxPlus,  // max over predecessors of T(u) + tau(U_uv)
};

/// Transfer-matrix table over the box [0, extent_0] x ... x [0, extent_{D-1}].
///
/// A point-to-point table covers the box spanned by its endpoint. A level table
/// covers [0, n]^D and only entries with |v|_1 <= n are finite.
class DpTable {
public:
    enum class Kind : std::uint8_t { Point, Level };

    static DpTable point_to_point(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau,
                                  DpMode mode = DpMode::Softmax);
    static DpTable point_to_level(const Environment& env, std::int64_t n, double beta, const TauFn& tau,
                                  DpMode mode = DpMode::Softmax);

    /// Entry at v; -inf outside the table or beyond the level.
    double at(const LatticePoint& v) const;
    /// Point table: entry at the endpoint. Level table: reduction over the level.
    double total() const;

    Kind kind() const { return kind_; }
    DpMode mode() const { return mode_; }
    const Environment& env() const { return env_; }
    double beta() const { return beta_; }
    const TauFn& tau() const { return tau_; }
    const LatticePoint& extents() const { return extents_; }
    /// Endpoint of a point table, or the level length.
    std::int64_t length() const { return length_; }
    const LatticePoint& endpoint() const { return endpoint_; }

    /// Binary dump with a version-tagged header (D, n, beta, tau hash, seed).
    void save(const std::string& path) const;
    /// Reads a dump written by save. `tau` must hash to the recorded fingerprint.
    static DpTable load(const std::string& path, const TauFn& tau);

    friend bool operator==(const DpTable& a, const DpTable& b) { return a.header_equal(b) && a.values_ == b.values_; }

private:
    DpTable() = default;
    std::size_t index(const LatticePoint& v) const;
    bool header_equal(const DpTable& o) const;

    Kind kind_ = Kind::Point;
    DpMode mode_ = DpMode::Softmax;
    Environment env_;
    double beta_ = 0.0;
    TauFn tau_;
    LatticePoint extents_;
    LatticePoint endpoint_;
    std::int64_t length_ = 0;
    std::vector<double> values_;
};

/// log sum over paths 0 -> endpoint of exp(beta T(pi)), in O(n^{D-1}) memory.
double log_partition_point(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau);
/// log sum over all D^n length-n paths from the origin.
double log_partition_level(const Environment& env, std::int64_t n, double beta, const TauFn& tau);

struct LastPassage {
    double value = 0.0;
    Path path;  // a maximizing path; ties go to the lowest axis at each backward step
};
LastPassage last_passage(const Environment& env, const LatticePoint& endpoint, const TauFn& tau);
/// Max-plus value only, in O(n^{D-1}) memory.
double last_passage_value(const Environment& env, const LatticePoint& endpoint, const TauFn& tau);

/// Exact sampler for the polymer measure exp(beta T(pi)) / Z by backward recursion.
class PolymerSampler {
public:
    /// `table` must be a softmax table.
    explicit PolymerSampler(DpTable table);
    /// Sample number `index` of the stream `stream_seed`; independent of the environment seed.
    Path sample(std::uint64_t stream_seed, std::uint64_t index) const;
    const DpTable& table() const { return table_; }

private:
    DpTable table_;
};

Path sample_polymer_path(const Environment& env, const LatticePoint& endpoint, double beta, const TauFn& tau,
                         std::uint64_t rng_seed);
Path sample_polymer_level_path(const Environment& env, std::int64_t n, double beta, const TauFn& tau,
                               std::uint64_t rng_seed);

/// Ensemble for the free energy: the direction q (endpoint floor(n q)) or, when
/// unset, every path of length floor(n t).
struct GibbsTarget {
    std::size_t dim = 2;
    std::optional<Direction> q;
    Rational t{1};

    static GibbsTarget direction(const Direction& q) { return {q.dim(), q, Rational(1)}; }
    static GibbsTarget level(std::size_t dim, Rational t = Rational(1)) { return {dim, std::nullopt, t}; }
    std::string str() const;
};

struct GibbsRow {
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    double raw = 0.0;  // (1/n) log Z
};

struct GibbsEstimate {
    double value = 0.0;
    double band = 0.0;
    std::vector<double> per_seed;  // per-seed a + b/n intercepts
    std::vector<GibbsRow> rows;
};

/// (1/n) log Z across the ladder, extrapolated per seed by a + b/n and averaged.
/// The band is the larger of the worst fit residual and the seed spread.
GibbsEstimate gibbs_estimate(const GibbsTarget& target, double beta, const TauFn& tau,
                             std::span<const std::int64_t> n_ladder, std::span<const std::uint64_t> seeds);

struct ConvergenceRow {
    std::int64_t n = 0;
    Measure mean_measure;                   // mean of (1/n) mu_pi over the samples
    std::optional<double> to_next;          // rho(e_n, e_next) for consecutive ladder entries
    std::vector<double> to_candidates;      // rho(e_n, candidate) per candidate
};

/// Monte Carlo diagnostic for the convergence of polymer empirical measures.
/// Reports distances only; it makes no pass/fail judgement.
std::vector<ConvergenceRow> empirical_convergence_diagnostic(const Environment& env, const Direction& q, double beta,
                                                             const TauFn& tau, std::span<const std::int64_t> n_ladder,
                                                             std::size_t samples_per_n,
                                                             std::span<const Measure> candidates,
                                                             std::uint64_t rng_seed);

}  // namespace grid_entropy
