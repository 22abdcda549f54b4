#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace grid_entropy {

class TauFn;

struct Atom {
    double position = 0.0;
    double mass = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite non-negative atomic measure on [0,1].
///
/// Atoms are kept sorted by position with strictly increasing positions; atoms
/// at exactly equal positions are merged and zero-mass atoms are dropped.
/// Positions are compared exactly: labels come from a deterministic hash, so
/// equal positions mean the same label value.
class Measure {
public:
    Measure() = default;

    /// Builds from arbitrary (position, mass) pairs. Throws InputError for a
    /// position outside [0,1] or a negative or non-finite mass.
    explicit Measure(std::vector<Atom> atoms);

    static Measure dirac(double position, double mass = 1.0);

    /// Trusted constructor for atoms already sorted, merged and positive.
    static Measure from_sorted(std::vector<Atom> atoms);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    double total_mass() const { return total_mass_; }

    /// Mass of the closed interval [lo, hi].
    double mass_in(double lo, double hi) const;

    friend bool operator==(const Measure& a, const Measure& b) { return a.atoms_ == b.atoms_; }

private:
    std::vector<Atom> atoms_;
    double total_mass_ = 0.0;
};

/// Histogram on [0,1] with m equal bins; bin i carries the mass of [i/m, (i+1)/m).
struct Histogram {
    std::vector<double> bin_masses;

    Histogram() = default;
    explicit Histogram(std::vector<double> masses);

    std::size_t bin_count() const { return bin_masses.size(); }
    double total_mass() const;

    static Histogram uniform(std::size_t m);
    /// Density 1/(hi-lo) on [lo,hi]; both ends must be bin edges of an m-bin grid.
    static Histogram uniform_on(double lo, double hi, std::size_t m);
    /// Density 2u on [0,1].
    static Histogram triangular(std::size_t m);

    /// Bin masses moved to bin midpoints.
    Measure to_measure() const;
};

/// Atomic measure on the real line, produced by pushing a measure through a weight function.
struct LineMeasure {
    std::vector<Atom> atoms;  // sorted, merged
    double total_mass() const;
};

double tv_norm(const Measure& mu);
double tv_distance(const Measure& mu, const Measure& nu);

Measure add(const Measure& mu, const Measure& nu);
Measure scale(const Measure& mu, double c);

/// Unnormalized sum of unit Dirac atoms at the given labels.
Measure empirical_measure(std::span<const double> labels);
/// Same, for labels already sorted ascending; each atom gets `unit_mass`.
Measure empirical_measure_sorted(std::span<const double> sorted_labels, double unit_mass = 1.0);

/// KL divergence of a normalized histogram from Lebesgue measure on the same grid.
/// Throws InputError unless the histogram has total mass 1 (within 1e-9).
double kl_divergence(const Histogram& nu);
/// KL divergence of a normalized histogram against Lambda restricted to an m-bin grid.
/// The histogram bin count must equal m.
double kl_divergence(const Histogram& nu, std::size_t m);
/// Atomic measures are never absolutely continuous: +infinity unless the measure is zero.
double kl_divergence(const Measure& nu);

/// Midpoint discretization of Lebesgue measure: m atoms of mass 1/m at (2i-1)/(2m).
Measure discretize_lebesgue(std::size_t m);

LineMeasure pushforward(const TauFn& tau, const Measure& mu);

nlohmann::json to_json(const Measure& mu);
Measure measure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Histogram& h);
Histogram histogram_from_json(const nlohmann::json& j);

}  // namespace grid_entropy
