#pragma once

#include <string>
#include <utility>
#include <vector>

#include "epspline/sim.hpp"

namespace spatsim {

using ScenarioResults =
    std::vector<std::pair<epspline::Scenario, epspline::ScenarioResult>>;

void write_replications_csv(const std::string& path, const ScenarioResults& results);
void write_summary_csv(const std::string& path, const ScenarioResults& results);

// One self-contained SVG per sigma_x2 value: a (phi_c x phi_u) panel grid of
// per-method mean and interquartile range of beta_hat, dashed line at the
// true beta.
void write_figures(const std::string& out_dir, const ScenarioResults& results);

}  // namespace spatsim
