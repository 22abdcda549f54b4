#include <doctest.h>

#include <algorithm>
#include <set>

#include "grid_entropy/prokhorov.hpp"
#include "grid_entropy/verification.hpp"

using namespace grid_entropy;

namespace {

// Distance that filters edges strictly at the candidate radii, so the infimum is never attained.
double strict_edge_distance(const Measure& mu, const Measure& nu) {
    std::vector<double> radii{0.0};
    for (const Atom& a : mu.atoms())
        for (const Atom& b : nu.atoms()) radii.push_back(std::abs(a.position - b.position));
    const double total = std::max(mu.total_mass(), nu.total_mass());
    double best = total;
    for (double r : radii) best = std::min(best, std::max(r, total - interval_max_flow(mu, nu, r, true)));
    return best;
}

const CriterionResult& find(const std::vector<CriterionResult>& results, int id) {
    return *std::find_if(results.begin(), results.end(), [&](const CriterionResult& r) { return r.id == id; });
}

}  // namespace

TEST_CASE("corrupted distance fails the oracle criterion") {
    VerifyOptions opt;
    opt.only = {1};
    CHECK(find(run_verification(opt), 1).pass);
    opt.distance = strict_edge_distance;
    const auto results = run_verification(opt);
    REQUIRE(results.size() == 1);
    CHECK_FALSE(results[0].pass);
}

TEST_CASE("tightened tolerances fail the statistical criteria only") {
    VerifyOptions opt;
    opt.tolerance_scale = 0.01;
    opt.only = {1, 3, 4, 5, 7, 8, 10, 12};
    const auto results = run_verification(opt);
    REQUIRE(results.size() == opt.only.size());
    for (int id : {1, 3, 4, 8}) CHECK_MESSAGE(find(results, id).pass, "criterion " << id);
    for (int id : {5, 7, 10, 12}) CHECK_MESSAGE(!find(results, id).pass, "criterion " << id);
}

TEST_CASE("verification table") {
    VerifyOptions opt;
    opt.only = {11};
    const std::string table = verification_table(run_verification(opt));
    CHECK(table.rfind("id,name,measured,bound,pass,seconds\n", 0) == 0);
    CHECK(table.find("\n11,") != std::string::npos);
}
