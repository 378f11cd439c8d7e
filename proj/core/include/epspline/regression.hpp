#pragma once

#include <Eigen/Dense>

#include "epspline/tprs.hpp"

namespace epspline {

enum class FamilyKind { gaussian_identity, binomial_logit, binomial_probit };

struct Family {
    FamilyKind kind = FamilyKind::gaussian_identity;

    bool is_binomial() const { return kind != FamilyKind::gaussian_identity; }
    static Family gaussian() { return {FamilyKind::gaussian_identity}; }
    static Family logit() { return {FamilyKind::binomial_logit}; }
    static Family probit() { return {FamilyKind::binomial_probit}; }
};

/// One model: parametric columns plus (optionally) one TPRS smooth.
/// The parametric design must include the intercept column. `basis` is
/// non-owning and must outlive the spec.
struct ModelSpec {
    Eigen::VectorXd response;
    Eigen::MatrixXd parametric_design;
    const TprsBasis* basis = nullptr;
    Family family;
    Eigen::VectorXd weights;  // empty means all ones

    int n() const { return static_cast<int>(response.size()); }
    int n_parametric() const { return static_cast<int>(parametric_design.cols()); }
    int n_smooth() const { return basis ? basis->n_cols() : 0; }
};

struct FitResult {
    Eigen::VectorXd coefficients;  // parametric block first, then smooth
    double lambda = 0.0;
    double edf_total = 0.0;
    double edf_smooth = 0.0;
    double scale = 1.0;            // gaussian: RSS/(n - edf); binomial: 1
    Eigen::MatrixXd covariance;    // (X'WX + lambda S)^{-1} * scale
    double gcv = 0.0;
    double deviance = 0.0;
    bool converged = true;
    bool separation_warning = false;
    bool boundary_lambda = false;
};

FitResult fit_penalized(const ModelSpec& spec, double lambda);

// n * D / (n - edf)^2
double gcv_score(const FitResult& fit, int n);

struct LambdaSelection {
    double lambda = 0.0;
    FitResult fit;
    bool boundary = false;
};

// Minimize GCV over lambda in [1e-8, 1e8]: 41-point log grid, then
// golden-section refinement of each bracketed local minimum (relative
// tolerance 1e-4), ties broken toward the larger lambda. A monotone GCV
// profile returns the boundary lambda with the boundary flag set.
LambdaSelection select_lambda(const ModelSpec& spec);

double coef_se(const FitResult& fit, int index);

}  // namespace epspline
