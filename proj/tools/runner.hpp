#pragma once

#include <string>
#include <vector>

#include "epspline/sim.hpp"

namespace spatsim {

struct RunConfig {
    std::string grid = "main";  // main | appendix_a | appendix_b | path to file
    std::vector<epspline::EstimatorSpec> methods;
    int n_reps = 100;
    uint64_t master_seed = 42;
    int n = 2500;
    int workers = 1;
    std::string out_dir = ".";
    bool emit_plots = false;
};

// Parses command-line style arguments (without the program name). An optional
// --config file supplies the same keys as plain key=value lines; flags given
// on the command line win. Unknown keys are rejected with the key named.
RunConfig parse_config(const std::vector<std::string>& args);

std::vector<epspline::Scenario> load_scenarios(const RunConfig& config);

// Reads a custom scenario file: one scenario per line, comma-separated
// fields in the order
//   id,n,sigma_x2,phi_u,phi_c,phi_y,nu,beta,gamma,gamma_y,sigma_y2,
//   delta_u,delta_c,exposure_kind
// with absent components spelled NA and exposure_kind one of
// continuous|binary. '#' starts a comment.
std::vector<epspline::Scenario> parse_scenario_file(const std::string& path);

// Executes the configured grid and writes replications.csv, summary.csv and
// (optionally) one SVG figure per sigma_x2 value. Returns the process exit
// code: 0 success, 2 partial estimator failures.
int run(const RunConfig& config);

// Number formatting used by every CSV field: 17 significant digits, so a
// round-trip parse reproduces the double exactly.
std::string csv_num(double v);

}  // namespace spatsim
