#include "grid_entropy/numeric.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

#include "grid_entropy/error.hpp"
#include "grid_entropy/parallel.hpp"

namespace grid_entropy {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw InputError("fit_line: need matching non-empty samples");
    LinearFit fit;
    const auto n = static_cast<double>(x.size());
    if (x.size() == 1) {
        fit.intercept = y[0];
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(y[i] - fit.intercept - fit.slope * x[i]));
    return fit;
}

LinearFit fit_inverse_n(std::span<const double> n, std::span<const double> raw) {
    std::vector<double> inv(n.size());
    std::transform(n.begin(), n.end(), inv.begin(), [](double v) { return 1.0 / v; });
    return fit_line(inv, raw);
}

unsigned worker_count() {
    if (const char* env = std::getenv("GRID_ENTROPY_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace grid_entropy
