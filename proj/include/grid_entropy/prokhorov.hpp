#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "grid_entropy/measure.hpp"

namespace grid_entropy {

/// Bipartite transport network between the atoms of two measures.
///
/// Source -> left atom i has capacity a_i, right atom j -> sink has capacity
/// b_j and every admissible (i, j) edge is uncapacitated. The maximum flow
/// equals min over left subsets A of [a(A^c) + b(N(A))], so
/// total_left - max_flow = max_A [mu(A) - nu(N(A))].
class FlowProblem {
public:
    FlowProblem(std::vector<double> left, std::vector<double> right,
                std::vector<std::pair<std::size_t, std::size_t>> edges);

    /// Edges (i, j) with |x_i - y_j| < radius (strict) or <= radius.
    static FlowProblem between(const Measure& mu, const Measure& nu, double radius, bool strict);

    /// Maximum flow by capacity-scaling shortest augmenting paths.
    double max_flow() const;

    const std::vector<double>& left() const { return left_; }
    const std::vector<double>& right() const { return right_; }
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

private:
    std::vector<double> left_;
    std::vector<double> right_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// Maximum flow when the admissible edges are all pairs within `radius`.
///
/// On the line each left atom's neighbourhood is a contiguous run of right
/// atoms whose endpoints move monotonically with the left position, and filling
/// each left atom from the leftmost remaining capacity is optimal. Linear time.
double interval_max_flow(const Measure& mu, const Measure& nu, double radius, bool strict);

/// max over Borel A of [mu(A) - nu(A^radius)]; strict selects the open neighbourhood
/// |x - y| < radius, otherwise its closure limit |x - y| <= radius.
double max_deficiency(const Measure& mu, const Measure& nu, double radius, bool strict);

enum class FlowSolver {
    Interval,         // linear-time greedy (default)
    CapacityScaling,  // general augmenting-path solver
};

/// Exact Levy-Prokhorov distance between finite atomic measures.
double prokhorov_distance(const Measure& mu, const Measure& nu, FlowSolver solver = FlowSolver::Interval);

/// Cheap lower bound on prokhorov_distance: the total-mass mismatch.
double prokhorov_lower_bound(const Measure& mu, const Measure& nu);

/// Exhaustive-subset reference implementation. Combined support must be at most 16 atoms.
double prokhorov_brute(const Measure& mu, const Measure& nu);

inline constexpr std::size_t kBruteForceSupportLimit = 16;

}  // namespace grid_entropy
