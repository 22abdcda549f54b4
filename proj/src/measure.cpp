#include "grid_entropy/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "grid_entropy/error.hpp"
#include "grid_entropy/lattice.hpp"
#include "grid_entropy/numeric.hpp"

namespace grid_entropy {

namespace {

std::vector<Atom> sort_and_merge(std::vector<Atom> atoms) {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const Atom& a : atoms) {
        if (a.mass == 0.0) continue;
        if (!out.empty() && out.back().position == a.position)
            out.back().mass += a.mass;
        else
            out.push_back(a);
    }
    return out;
}

double sum_masses(std::span<const Atom> atoms) {
    double s = 0.0;
    for (const Atom& a : atoms) s += a.mass;
    return s;
}

}  // namespace

Measure::Measure(std::vector<Atom> atoms) {
    for (const Atom& a : atoms) {
        if (!(a.position >= 0.0 && a.position <= 1.0))
            throw InputError("measure atom position outside [0,1]: " + std::to_string(a.position));
        if (!(a.mass >= 0.0) || !std::isfinite(a.mass))
            throw InputError("measure atom mass must be finite and non-negative");
    }
    atoms_ = sort_and_merge(std::move(atoms));
    total_mass_ = sum_masses(atoms_);
}

Measure Measure::dirac(double position, double mass) { return Measure({Atom{position, mass}}); }

Measure Measure::from_sorted(std::vector<Atom> atoms) {
    Measure m;
    m.atoms_ = std::move(atoms);
    m.total_mass_ = sum_masses(m.atoms_);
    return m;
}

double Measure::mass_in(double lo, double hi) const {
    auto first = std::lower_bound(atoms_.begin(), atoms_.end(), lo,
                                  [](const Atom& a, double v) { return a.position < v; });
    double s = 0.0;
    for (auto it = first; it != atoms_.end() && it->position <= hi; ++it) s += it->mass;
    return s;
}

Histogram::Histogram(std::vector<double> masses) : bin_masses(std::move(masses)) {
    if (bin_masses.empty()) throw InputError("histogram needs at least one bin");
    for (double m : bin_masses)
        if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("histogram bin masses must be finite and non-negative");
}

double Histogram::total_mass() const {
    double s = 0.0;
    for (double m : bin_masses) s += m;
    return s;
}

Histogram Histogram::uniform(std::size_t m) {
    if (m == 0) throw InputError("histogram needs at least one bin");
    return Histogram(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

Histogram Histogram::uniform_on(double lo, double hi, std::size_t m) {
    if (m == 0 || !(lo >= 0.0 && lo < hi && hi <= 1.0)) throw InputError("uniform_on: need 0 <= lo < hi <= 1, m >= 1");
    const double dm = static_cast<double>(m);
    const auto first = static_cast<std::size_t>(std::llround(lo * dm));
    const auto last = static_cast<std::size_t>(std::llround(hi * dm));
    if (std::abs(first - lo * dm) > 1e-9 || std::abs(last - hi * dm) > 1e-9)
        throw InputError("uniform_on: interval ends must lie on the bin grid");
    std::vector<double> masses(m, 0.0);
    for (std::size_t i = first; i < last; ++i) masses[i] = 1.0 / static_cast<double>(last - first);
    return Histogram(std::move(masses));
}

Histogram Histogram::triangular(std::size_t m) {
    if (m == 0) throw InputError("histogram needs at least one bin");
    std::vector<double> masses(m);
    const double dm = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) masses[i] = (2.0 * static_cast<double>(i) + 1.0) / (dm * dm);
    return Histogram(std::move(masses));
}

Measure Histogram::to_measure() const {
    std::vector<Atom> atoms;
    atoms.reserve(bin_masses.size());
    const double dm = static_cast<double>(bin_masses.size());
    for (std::size_t i = 0; i < bin_masses.size(); ++i)
        if (bin_masses[i] > 0.0) atoms.push_back({(2.0 * static_cast<double>(i) + 1.0) / (2.0 * dm), bin_masses[i]});
    return Measure(std::move(atoms));
}

double LineMeasure::total_mass() const { return sum_masses(atoms); }

double tv_norm(const Measure& mu) { return mu.total_mass(); }

double tv_distance(const Measure& mu, const Measure& nu) {
    // Walk both sorted atom lists; the supremum over sets is attained on
    // {mu > nu} or {nu > mu}.
    double pos = 0.0, neg = 0.0;
    auto a = mu.atoms();
    auto b = nu.atoms();
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double diff;
        if (j == b.size() || (i < a.size() && a[i].position < b[j].position)) {
            diff = a[i++].mass;
        } else if (i == a.size() || b[j].position < a[i].position) {
            diff = -b[j++].mass;
        } else {
            diff = a[i++].mass - b[j++].mass;
        }
        if (diff > 0.0)
            pos += diff;
        else
            neg -= diff;
    }
    return std::max(pos, neg);
}

Measure add(const Measure& mu, const Measure& nu) {
    std::vector<Atom> merged;
    merged.reserve(mu.size() + nu.size());
    auto a = mu.atoms();
    auto b = nu.atoms();
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].position < b[j].position)) {
            merged.push_back(a[i++]);
        } else if (i == a.size() || b[j].position < a[i].position) {
            merged.push_back(b[j++]);
        } else {
            merged.push_back({a[i].position, a[i].mass + b[j].mass});
            ++i;
            ++j;
        }
    }
    return Measure::from_sorted(std::move(merged));
}

Measure scale(const Measure& mu, double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InputError("scale factor must be finite and non-negative");
    if (c == 0.0) return Measure();
    std::vector<Atom> atoms(mu.atoms().begin(), mu.atoms().end());
    for (Atom& a : atoms) a.mass *= c;
    return Measure::from_sorted(std::move(atoms));
}

Measure empirical_measure(std::span<const double> labels) {
    std::vector<double> sorted(labels.begin(), labels.end());
    for (double u : sorted)
        if (!(u >= 0.0 && u <= 1.0)) throw InputError("edge label outside [0,1]: " + std::to_string(u));
    std::sort(sorted.begin(), sorted.end());
    return empirical_measure_sorted(sorted);
}

Measure empirical_measure_sorted(std::span<const double> sorted_labels, double unit_mass) {
    std::vector<Atom> atoms;
    atoms.reserve(sorted_labels.size());
    for (double u : sorted_labels) {
        if (!atoms.empty() && atoms.back().position == u)
            atoms.back().mass += unit_mass;
        else
            atoms.push_back({u, unit_mass});
    }
    // Summing n copies of unit_mass keeps total_mass exact for unit_mass = 1.
    return Measure::from_sorted(std::move(atoms));
}

double kl_divergence(const Histogram& nu) {
    const double total = nu.total_mass();
    if (std::abs(total - 1.0) > 1e-9)
        throw InputError("kl_divergence: histogram must be normalized (total mass " + std::to_string(total) + ")");
    const double m = static_cast<double>(nu.bin_count());
    double kl = 0.0;
    for (double p : nu.bin_masses)
        if (p > 0.0) kl += p * std::log(p * m);
    return std::max(kl, 0.0);
}

double kl_divergence(const Histogram& nu, std::size_t m) {
    if (m != nu.bin_count()) throw InputError("kl_divergence: histogram and reference grids differ");
    return kl_divergence(nu);
}

double kl_divergence(const Measure& nu) { return nu.empty() ? 0.0 : kPosInf; }

Measure discretize_lebesgue(std::size_t m) {
    if (m == 0) throw InputError("discretize_lebesgue: m must be positive");
    std::vector<Atom> atoms(m);
    const double dm = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) atoms[i] = {(2.0 * static_cast<double>(i) + 1.0) / (2.0 * dm), 1.0 / dm};
    return Measure::from_sorted(std::move(atoms));
}

LineMeasure pushforward(const TauFn& tau, const Measure& mu) {
    std::map<double, double> image;
    for (const Atom& a : mu.atoms()) image[tau(a.position)] += a.mass;
    LineMeasure out;
    out.atoms.reserve(image.size());
    for (const auto& [x, w] : image) out.atoms.push_back({x, w});
    return out;
}

nlohmann::json to_json(const Measure& mu) {
    auto arr = nlohmann::json::array();
    for (const Atom& a : mu.atoms()) arr.push_back({a.position, a.mass});
    return arr;
}

Measure measure_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InputError("measure JSON must be an array of [position, mass] pairs");
    std::vector<Atom> atoms;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
            throw InputError("measure JSON entries must be [position, mass]");
        atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    return Measure(std::move(atoms));
}

nlohmann::json to_json(const Histogram& h) {
    return {{"bin_count", h.bin_count()}, {"masses", h.bin_masses}};
}

Histogram histogram_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("masses")) throw InputError("histogram JSON needs a masses array");
    auto masses = j.at("masses").get<std::vector<double>>();
    if (j.contains("bin_count") && j.at("bin_count").get<std::size_t>() != masses.size())
        throw InputError("histogram JSON bin_count does not match masses");
    return Histogram(std::move(masses));
}

}  // namespace grid_entropy
