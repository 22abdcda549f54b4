#include <cstdio>

#include "grid_entropy/verification.hpp"

int main() {
    grid_entropy::VerifyOptions options;
    options.on_result = [](const grid_entropy::CriterionResult& r) {
        std::printf("%s criterion %2d  %-34s measured %-12.6g bound %-12.6g %7.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.measured, r.bound, r.seconds, r.detail.c_str());
        std::fflush(stdout);
    };
    const auto results = grid_entropy::run_verification(options);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}
