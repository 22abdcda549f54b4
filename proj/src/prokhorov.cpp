#include "grid_entropy/prokhorov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "grid_entropy/error.hpp"

namespace grid_entropy {

namespace {

bool admissible(double x, double y, double radius, bool strict) {
    const double d = std::abs(x - y);
    return strict ? d < radius : d <= radius;
}

// Residual network for the capacity-scaling solver.
struct Network {
    struct Arc {
        std::size_t to;
        std::size_t rev;
        double cap;
    };
    std::vector<std::vector<Arc>> adj;

    explicit Network(std::size_t n) : adj(n) {}

    void add(std::size_t u, std::size_t v, double cap) {
        adj[u].push_back({v, adj[v].size(), cap});
        adj[v].push_back({u, adj[u].size() - 1, 0.0});
    }

    // Shortest augmenting path using only arcs with residual > threshold.
    double augment(std::size_t s, std::size_t t, double threshold) {
        std::vector<std::pair<std::size_t, std::size_t>> parent(adj.size(), {SIZE_MAX, SIZE_MAX});
        std::deque<std::size_t> queue{s};
        parent[s] = {s, 0};
        while (!queue.empty() && parent[t].first == SIZE_MAX) {
            const auto u = queue.front();
            queue.pop_front();
            for (std::size_t k = 0; k < adj[u].size(); ++k) {
                const Arc& a = adj[u][k];
                if (a.cap > threshold && parent[a.to].first == SIZE_MAX) {
                    parent[a.to] = {u, k};
                    queue.push_back(a.to);
                }
            }
        }
        if (parent[t].first == SIZE_MAX) return 0.0;
        double bottleneck = std::numeric_limits<double>::infinity();
        for (auto v = t; v != s; v = parent[v].first) bottleneck = std::min(bottleneck, adj[parent[v].first][parent[v].second].cap);
        for (auto v = t; v != s; v = parent[v].first) {
            Arc& a = adj[parent[v].first][parent[v].second];
            a.cap -= bottleneck;
            adj[a.to][a.rev].cap += bottleneck;
        }
        return bottleneck;
    }
};

}  // namespace

FlowProblem::FlowProblem(std::vector<double> left, std::vector<double> right,
                         std::vector<std::pair<std::size_t, std::size_t>> edges)
    : left_(std::move(left)), right_(std::move(right)), edges_(std::move(edges)) {
    for (double m : left_)
        if (!(m > 0.0)) throw InputError("flow problem masses must be positive");
    for (double m : right_)
        if (!(m > 0.0)) throw InputError("flow problem masses must be positive");
    for (const auto& [i, j] : edges_)
        if (i >= left_.size() || j >= right_.size()) throw InputError("flow problem edge out of range");
}

FlowProblem FlowProblem::between(const Measure& mu, const Measure& nu, double radius, bool strict) {
    std::vector<double> left, right;
    for (const Atom& a : mu.atoms()) left.push_back(a.mass);
    for (const Atom& b : nu.atoms()) right.push_back(b.mass);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            if (admissible(mu.atoms()[i].position, nu.atoms()[j].position, radius, strict)) edges.emplace_back(i, j);
    return FlowProblem(std::move(left), std::move(right), std::move(edges));
}

double FlowProblem::max_flow() const {
    const std::size_t a = left_.size(), b = right_.size();
    const std::size_t s = a + b, t = a + b + 1;
    Network net(a + b + 2);
    double total = 0.0, largest = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
        net.add(s, i, left_[i]);
        total += left_[i];
        largest = std::max(largest, left_[i]);
    }
    for (std::size_t j = 0; j < b; ++j) {
        net.add(a + j, t, right_[j]);
        largest = std::max(largest, right_[j]);
    }
    const double unbounded = 2.0 * (total + 1.0);
    for (const auto& [i, j] : edges_) net.add(i, a + j, unbounded);
    if (largest == 0.0) return 0.0;

    double flow = 0.0;
    const double floor_delta = largest * 0x1.0p-40;
    for (double delta = std::exp2(std::floor(std::log2(largest))); delta >= floor_delta; delta /= 2.0)
        while (const double pushed = net.augment(s, t, std::nextafter(delta, 0.0))) flow += pushed;
    // Final phase: any residual above rounding noise.
    const double noise = largest * 1e-15;
    while (const double pushed = net.augment(s, t, noise)) flow += pushed;
    return flow;
}

double interval_max_flow(const Measure& mu, const Measure& nu, double radius, bool strict) {
    const auto left = mu.atoms();
    const auto right = nu.atoms();
    std::vector<double> cap(right.size());
    for (std::size_t j = 0; j < right.size(); ++j) cap[j] = right[j].mass;
    double flow = 0.0;
    std::size_t j = 0;
    for (const Atom& x : left) {
        while (j < right.size() &&
               (cap[j] <= 0.0 || (right[j].position < x.position && !admissible(x.position, right[j].position, radius, strict))))
            ++j;
        double need = x.mass;
        for (std::size_t k = j; k < right.size() && need > 0.0 && admissible(x.position, right[k].position, radius, strict); ++k) {
            const double take = std::min(need, cap[k]);
            cap[k] -= take;
            need -= take;
            flow += take;
        }
    }
    return flow;
}

double max_deficiency(const Measure& mu, const Measure& nu, double radius, bool strict) {
    if (radius < 0.0) throw InputError("max_deficiency: radius must be non-negative");
    if (mu.empty()) return 0.0;
    const double flow = FlowProblem::between(mu, nu, radius, strict).max_flow();
    return std::max(0.0, mu.total_mass() - flow);
}

double prokhorov_lower_bound(const Measure& mu, const Measure& nu) {
    return std::abs(mu.total_mass() - nu.total_mass());
}

double prokhorov_distance(const Measure& mu, const Measure& nu, FlowSolver solver) {
    const double total = std::max(mu.total_mass(), nu.total_mass());
    if (mu.empty() || nu.empty()) return total;

    // Candidate radii: 0 and every pairwise distance. Over (d_k, d_{k+1}] the open
    // neighbourhood admits exactly the pairs at distance <= d_k, so the infimum on
    // that interval is max(d_k, total - F(d_k)) with F the closed-edge max flow.
    std::vector<double> radii;
    radii.reserve(mu.size() * nu.size() + 1);
    radii.push_back(0.0);
    for (const Atom& x : mu.atoms())
        for (const Atom& y : nu.atoms()) radii.push_back(std::abs(x.position - y.position));
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

    auto deficiency = [&](double r) {
        const double flow = solver == FlowSolver::Interval ? interval_max_flow(mu, nu, r, false)
                                                           : FlowProblem::between(mu, nu, r, false).max_flow();
        return std::max(0.0, total - flow);
    };

    // radii ascend while deficiency descends, so max(radius, deficiency) is
    // minimized where the two cross.
    std::size_t lo = 0, hi = radii.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (radii[mid] >= deficiency(radii[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    if (lo < radii.size()) best = radii[lo];
    if (lo > 0) best = std::min(best, std::max(radii[lo - 1], deficiency(radii[lo - 1])));
    return std::min(best, total);
}

double prokhorov_brute(const Measure& mu, const Measure& nu) {
    if (mu.size() + nu.size() > kBruteForceSupportLimit)
        throw InputError("prokhorov_brute: combined support exceeds 16 atoms");
    const double total = std::max(mu.total_mass(), nu.total_mass());
    if (mu.empty() && nu.empty()) return 0.0;

    // max over subsets A of supp(from) of from(A) - to(A^r), open neighbourhoods.
    auto one_sided = [](const Measure& from, const Measure& to, double r) {
        const auto src = from.atoms();
        const auto dst = to.atoms();
        double worst = 0.0;
        for (std::uint32_t subset = 1; subset < (1u << src.size()); ++subset) {
            double inside = 0.0;
            for (std::size_t i = 0; i < src.size(); ++i)
                if (subset & (1u << i)) inside += src[i].mass;
            double covered = 0.0;
            for (const Atom& y : dst) {
                for (std::size_t i = 0; i < src.size(); ++i) {
                    if ((subset & (1u << i)) && std::abs(src[i].position - y.position) < r) {
                        covered += y.mass;
                        break;
                    }
                }
            }
            worst = std::max(worst, inside - covered);
        }
        return worst;
    };

    std::vector<double> radii{0.0};
    for (const Atom& x : mu.atoms())
        for (const Atom& y : nu.atoms()) radii.push_back(std::abs(x.position - y.position));
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

    double best = total;  // every radius >= total is feasible
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const bool last = k + 1 == radii.size();
        const double upper = last ? std::numeric_limits<double>::infinity() : radii[k + 1];
        const double probe = last ? radii[k] + 1.0 : 0.5 * (radii[k] + radii[k + 1]);
        const double def = std::max(one_sided(mu, nu, probe), one_sided(nu, mu, probe));
        // Feasible radii in (radii[k], upper] are those >= def.
        const double candidate = std::max(radii[k], def);
        if (candidate <= upper) best = std::min(best, candidate);
    }
    return best;
}

}  // namespace grid_entropy
