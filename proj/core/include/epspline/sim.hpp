#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epspline/estimators.hpp"

namespace epspline {

enum class ExposureKind { continuous, binary_latent_probit };

/// One cell of the simulation grid. Absent spatial components are modeled as
/// empty optionals (the grid tables spell them "NA").
struct Scenario {
    std::string id;
    int n = 2500;
    double sigma_x2 = 0.5;
    std::optional<double> phi_u, phi_c, phi_y;
    double nu = 1.5;
    double beta = 3.0;
    double gamma = 1.0;
    double gamma_y = 1.0;
    double sigma_y2 = 9.0;
    double delta_u = 0.5;
    double delta_c = 0.5;
    ExposureKind exposure_kind = ExposureKind::continuous;

    void validate() const;

    // Applies the loading rule (0.5 when both exposure components are present,
    // sqrt(0.5) otherwise) and derives a stable id.
    static Scenario make(const std::string& id_prefix, double sigma_x2,
                         std::optional<double> phi_u, std::optional<double> phi_c,
                         std::optional<double> phi_y, ExposureKind kind,
                         int n = 2500);
};

enum class GridKind { main, appendix_a, appendix_b };

std::vector<Scenario> scenario_grid(GridKind kind);

Dataset generate_dataset(const Scenario& scenario, uint64_t master_seed, int rep);

/// An estimator plus its configuration, as run by the harness.
struct EstimatorSpec {
    Method method = Method::NS;
    int k = 500;  // basis dimension (for F-DF this is DF + 1)
    Family exposure_family = Family::gaussian();
    bool family_explicit = false;  // binary runs default E-PS to logit

    std::string label() const;
    // Parses e.g. "NS", "F-DF:50", "PS:K=500", "E-PS:K=500:logit",
    // "Spatial+:K=500". Throws std::invalid_argument with the offending token.
    static EstimatorSpec parse(const std::string& text);
};

struct RepRecord {
    std::string scenario_id;
    int rep = 0;
    std::string method;
    std::string variant;
    double beta_hat = 0.0;
    double se = 0.0;
    double lambda = 0.0;        // NaN when not applicable
    double edf_smooth = 0.0;    // NaN when not applicable
    double elapsed = 0.0;
    bool failed = false;
    std::string error;
};

struct MetricsRow {
    std::string scenario_id;
    std::string method;
    std::string variant;
    int n_reps = 0;
    double mean_beta = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double se_ratio = 0.0;  // mean estimated SE / sample SD of beta_hat
    double q25 = 0.0;
    double q75 = 0.0;
    double mean_elapsed = 0.0;
    double mc_se_bias = 0.0;  // SD(beta_hat)/sqrt(n_reps)
    int failure_count = 0;
};

MetricsRow compute_metrics(const std::vector<BetaEstimate>& estimates, double true_beta);

struct ScenarioResult {
    std::vector<RepRecord> replications;  // ordered by (rep, method)
    std::vector<MetricsRow> metrics;      // one per method spec
};

// Runs every method on every replication. Results are invariant to the
// worker count; failures are recorded and excluded from the metrics.
ScenarioResult run_scenario(const Scenario& scenario,
                            const std::vector<EstimatorSpec>& methods, int n_reps,
                            uint64_t master_seed, int workers);

// type-7 (linear interpolation) sample quantile of an unsorted copy
double quantile_type7(std::vector<double> values, double p);

}  // namespace epspline
