#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

namespace grid_entropy {

using BigInt = boost::multiprecision::cpp_int;

/// Non-negative rational number num/den in lowest terms.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    static Rational parse(const std::string& text);  // "3", "2/3", "0.25" is rejected
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// floor(n * this), exact.
    std::int64_t floor_times(std::int64_t n) const { return n * num / den; }
    std::string str() const;

    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Direction q in Q^D_{>=0}, stored as integer numerators over a shared denominator.
class Direction {
public:
    Direction() = default;
    Direction(std::vector<std::int64_t> numerators, std::int64_t denominator);
    static Direction from_rationals(std::span<const Rational> coords);
    /// Parses "1/2,1/2" or "1,0".
    static Direction parse(const std::string& text);
    /// The balanced direction t * (1/D, ..., 1/D).
    static Direction balanced(std::size_t dim, Rational t = Rational(1));

    std::size_t dim() const { return num_.size(); }
    std::span<const std::int64_t> numerators() const { return num_; }
    std::int64_t denominator() const { return den_; }
    double coord(std::size_t i) const { return static_cast<double>(num_[i]) / static_cast<double>(den_); }
    double l1_norm() const;
    Rational l1_rational() const;

    /// floor(n q), coordinate-wise and exact.
    std::vector<std::int64_t> floor_scaled(std::int64_t n) const;
    std::string str() const;

    friend bool operator==(const Direction&, const Direction&) = default;

private:
    std::vector<std::int64_t> num_;
    std::int64_t den_ = 1;
};

using LatticePoint = std::vector<std::int64_t>;

std::int64_t l1_norm(const LatticePoint& p);

/// Hash-defined i.i.d. Unif[0,1) edge labels on Z^D.
struct Environment {
    std::uint64_t seed = 0;
    std::size_t dim = 2;
};

/// Label U_e of the edge leaving `anchor` along axis `axis` (0-based).
/// A pure function of (seed, anchor, axis); 53-bit resolution in [0,1).
double edge_label(const Environment& env, std::span<const std::int64_t> anchor, std::size_t axis);

/// Bounded right-continuous step function on [0,1].
///
/// Cell k covers [b_{k-1}, b_k) with b_{-1} = 0 and the last cell closed at 1,
/// so values().size() == breakpoints().size() + 1.
class TauFn {
public:
    static constexpr std::size_t kMaxCells = 64;

    TauFn();  // identically zero
    TauFn(std::vector<double> breakpoints, std::vector<double> values);

    static TauFn constant(double c);
    /// 1 on [p,1], 0 elsewhere.
    static TauFn indicator_from(double p);
    /// m-step ladder approximating u -> u: cell i of [i/m,(i+1)/m) maps to its midpoint.
    static TauFn identity_ladder(std::size_t m);
    /// Ladder on k equal bins with the given values.
    static TauFn equal_bins(std::vector<double> values);

    double operator()(double u) const;
    std::span<const double> breakpoints() const { return breakpoints_; }
    std::span<const double> values() const { return values_; }
    std::size_t cells() const { return values_.size(); }
    double bound() const { return bound_; }
    /// Stable 64-bit fingerprint used in DP table headers.
    std::uint64_t hash() const;

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
    double bound_ = 0.0;
};

nlohmann::json to_json(const TauFn& tau);
TauFn tau_from_json(const nlohmann::json& j);

/// NE lattice path as a start point plus a sequence of 0-based axis steps.
struct Path {
    LatticePoint start;
    std::vector<std::uint8_t> steps;

    std::size_t length() const { return steps.size(); }
    LatticePoint end() const;
    /// Edge labels in path order.
    std::vector<double> labels(const Environment& env) const;

    friend bool operator==(const Path&, const Path&) = default;
};

/// Concatenation of p (ending at q.start) and q.
Path concatenate(const Path& p, const Path& q);

/// Multinomial coefficient (|e|_1 choose e_1, ..., e_D); zero when a coordinate is negative.
BigInt path_count(const LatticePoint& displacement);
/// Same, as a double (may be +inf for very large counts).
double path_count_double(const LatticePoint& displacement);
/// Natural log of the multinomial path count, via lgamma.
double log_path_count(const LatticePoint& displacement);

/// Shannon entropy H(q) = sum -q_i log(q_i / |q|_1) with 0 log 0 = 0.
double shannon_entropy(const Direction& q);

inline constexpr std::uint64_t kDefaultPathBudget = 100'000'000;

/// Visitor for enumerate_paths: the path and its labels sorted ascending.
using PathVisitor = std::function<void(const Path&, std::span<const double> sorted_labels)>;

/// Depth-first enumeration of every NE path from `start` to `end`.
///
/// When `prefix` is non-empty only completions of that prefix are visited,
/// which lets callers split the tree across workers. Throws BudgetExceeded
/// when the number of paths exceeds `budget`.
void enumerate_paths(const Environment& env, const LatticePoint& start, const LatticePoint& end,
                     const PathVisitor& visit, std::uint64_t budget = kDefaultPathBudget,
                     std::span<const std::uint8_t> prefix = {});

/// Depth-first enumeration of all D^length paths of the given length from `start`.
void enumerate_level_paths(const Environment& env, const LatticePoint& start, std::size_t length,
                           const PathVisitor& visit, std::uint64_t budget = kDefaultPathBudget);

/// Sum of tau(U_e) over the path's edges.
double path_weight(const Environment& env, const TauFn& tau, const Path& path);

}  // namespace grid_entropy
