#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grid_entropy/lattice.hpp"
#include "grid_entropy/measure.hpp"

namespace grid_entropy {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitBudget = 3,
    kExitVerification = 4,
};

/// Fully resolved run configuration. Unset optional fields fall back to the
/// command's defaults.
struct ExperimentConfig {
    std::string command;
    std::size_t dim = 2;
    std::optional<std::string> q;
    std::string t = "1";
    std::string nu = "lebesgue:64";
    std::optional<std::string> mu;
    std::string tau = "zero";
    double beta = 1.0;
    std::string n_ladder;
    std::string eps_ladder = "16,8,4";
    std::string alpha_grid = "0:1:0.05";
    std::string seeds = "1..5";
    std::uint64_t budget = kDefaultPathBudget;
    std::optional<std::string> endpoint;
    std::optional<double> threshold;
    std::string method = "conjugate";
    std::size_t ladder_bins = 4;
    double p = 0.5;
    double s = 0.75;
    std::size_t samples = 10;
    std::uint64_t rng_seed = 1;
    double tolerance_scale = 1.0;
    std::string criteria;  // verify: comma list of criterion ids, empty for all
    std::string csv;
    std::string json;
    std::string svg;
    std::string dp_out;
    std::string dp_in;

    /// key -> value view of every field, in a fixed order, for output headers.
    std::vector<std::pair<std::string, std::string>> resolved() const;
};

struct KeyValue {
    std::string key;
    std::string value;
    std::string origin;  // "file:line" or "flag"
};

/// Parses a flat key=value file: one pair per line, '#' comments, blank lines ignored.
std::vector<KeyValue> read_key_values(const std::string& path);

/// Applies key=value pairs in order; unknown keys and malformed values throw
/// InputError naming the origin and the key.
void apply_key_values(ExperimentConfig& config, const std::vector<KeyValue>& values);

/// "a..b" is a doubling ladder a, 2a, ... <= b; otherwise a comma list.
std::vector<std::int64_t> parse_n_ladder(const std::string& text);
/// "a..b" is the consecutive range; otherwise a comma list.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
/// "lo:hi:step" or a comma list.
std::vector<double> parse_grid(const std::string& text);
std::vector<double> parse_doubles(const std::string& text);
LatticePoint parse_point(const std::string& text);

/// A target given as a histogram keeps its bin masses; anything else is atomic only.
struct TargetSpec {
    std::string id;
    Measure measure;
    std::optional<Histogram> histogram;
};

/// Measure specs: lebesgue:m, uniform:lo,hi,m, triangular:m, hist:m1,m2,...,
/// atoms:x@w,..., file:path.json; an optional "c*" prefix scales the measure.
TargetSpec parse_target(const std::string& text);
/// Tau specs: zero, const:c, indicator:p, identity:m, ladder:v1,...,vk, file:path.json.
TauFn parse_tau(const std::string& text);

/// One row of the per-ladder-point CSV output.
struct CsvRow {
    std::string method;
    std::size_t dim = 2;
    std::uint64_t seed = 0;
    std::string q_or_t;
    std::string nu_id;
    std::int64_t n = 0;
    double parameter = 0.0;  // epsilon, alpha or beta
    double raw = 0.0;
    double extrapolated = 0.0;
    double band = 0.0;
    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

struct CsvDocument {
    std::vector<std::pair<std::string, std::string>> header;  // resolved config as "# key=value" lines
    std::vector<CsvRow> rows;
};

inline constexpr const char* kCsvColumns = "method,D,seed,q_or_t,nu_id,n,epsilon_or_alpha,raw_value,extrapolated,band";

/// Rows are written in canonical (n, parameter, seed) order with round-trip precision.
void write_csv(std::ostream& out, CsvDocument doc);
CsvDocument read_csv(std::istream& in);

/// Line plot of seed-mean raw values against n, one series per parameter value.
std::string render_svg(const std::vector<CsvRow>& rows, const std::string& title);

/// Runs one command; returns an ExitCode.
int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Full command-line entry point (argument parsing, config file, dispatch).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grid_entropy
