#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "epspline/field.hpp"
#include "epspline/regression.hpp"
#include "epspline/tprs.hpp"

namespace epspline {

/// Generation record retained for oracle checks (all vectors length n; absent
/// components are empty).
struct GenerationTruth {
    double beta = 0.0;
    Eigen::VectorXd z_c, z_u, z_y;
    Eigen::VectorXd eps_x, eps_y;
    Eigen::VectorXd x0;  // spatial exposure component delta_u z_u + delta_c z_c
};

struct Dataset {
    LocationSet locations;
    Eigen::VectorXd exposure;
    Eigen::VectorXd outcome;
    Eigen::MatrixXd covariates;  // n x p, zero columns when none
    bool binary_exposure = false;
    std::optional<GenerationTruth> truth;

    int n() const { return static_cast<int>(outcome.size()); }
};

enum class Method { NS, FDF, PS, EPS, SpatialPlus };

std::string method_name(Method m);

struct BetaEstimate {
    Method method = Method::NS;
    std::string variant;
    double beta_hat = 0.0;
    double se = 0.0;
    std::optional<double> lambda_used;
    std::optional<double> edf_smooth;
    double elapsed = 0.0;  // seconds
    bool stage1_boundary = false;
};

// Non-spatial OLS of outcome on intercept + exposure (+ covariates).
BetaEstimate estimate_ns(const Dataset& data);

// Unpenalized spline adjustment with a fixed basis dimension (DF = k - 1).
BetaEstimate estimate_fdf(const Dataset& data, const TprsBasis& basis);
BetaEstimate estimate_fdf(const Dataset& data, int k);

// Outcome-driven penalized spline: GCV-selected lambda on the outcome model.
BetaEstimate estimate_ps(const Dataset& data, const TprsBasis& basis);
BetaEstimate estimate_ps(const Dataset& data, int k);

// Exposure-penalized spline: stage 1 selects lambda on the exposure model,
// stage 2 fits the gaussian outcome model with that lambda held fixed.
BetaEstimate estimate_eps(const Dataset& data, const TprsBasis& basis,
                          Family exposure_family);
BetaEstimate estimate_eps(const Dataset& data, int k, Family exposure_family);

// Spatial+: exposure-model residuals replace the exposure in an outcome
// penalized-spline model with its own GCV-selected lambda.
BetaEstimate estimate_spatialplus(const Dataset& data, const TprsBasis& basis,
                                  Family exposure_family = Family::gaussian());
BetaEstimate estimate_spatialplus(const Dataset& data, int k,
                                  Family exposure_family = Family::gaussian());

// Estimated proportion of non-spatial exposure variability: residual deviance
// over null deviance from an exposure-only penalized spline fit.
double estimate_pns(const Dataset& data, const TprsBasis& basis);
double estimate_pns(const Dataset& data, int k);

}  // namespace epspline
