#include "epspline/estimators.hpp"

#include <chrono>
#include <stdexcept>

namespace epspline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// [1 | exposure | covariates]
Eigen::MatrixXd outcome_parametric(const Dataset& data, const Eigen::VectorXd& exposure) {
    const int n = data.n();
    const int p = static_cast<int>(data.covariates.cols());
    Eigen::MatrixXd design(n, 2 + p);
    design.col(0).setOnes();
    design.col(1) = exposure;
    if (p > 0) design.rightCols(p) = data.covariates;
    return design;
}

// [1 | covariates]
Eigen::MatrixXd exposure_parametric(const Dataset& data) {
    const int n = data.n();
    const int p = static_cast<int>(data.covariates.cols());
    Eigen::MatrixXd design(n, 1 + p);
    design.col(0).setOnes();
    if (p > 0) design.rightCols(p) = data.covariates;
    return design;
}

constexpr int kExposureCoef = 1;

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::NS: return "NS";
        case Method::FDF: return "F-DF";
        case Method::PS: return "PS";
        case Method::EPS: return "E-PS";
        case Method::SpatialPlus: return "Spatial+";
    }
    return "?";
}

BetaEstimate estimate_ns(const Dataset& data) {
    auto t0 = Clock::now();
    ModelSpec spec;
    spec.response = data.outcome;
    spec.parametric_design = outcome_parametric(data, data.exposure);
    spec.family = Family::gaussian();
    FitResult fit = fit_penalized(spec, 0.0);
    BetaEstimate est;
    est.method = Method::NS;
    est.beta_hat = fit.coefficients(kExposureCoef);
    est.se = coef_se(fit, kExposureCoef);
    est.elapsed = seconds_since(t0);
    return est;
}

BetaEstimate estimate_fdf(const Dataset& data, const TprsBasis& basis) {
    auto t0 = Clock::now();
    ModelSpec spec;
    spec.response = data.outcome;
    spec.parametric_design = outcome_parametric(data, data.exposure);
    spec.basis = &basis;
    spec.family = Family::gaussian();
    FitResult fit = fit_penalized(spec, 0.0);
    BetaEstimate est;
    est.method = Method::FDF;
    est.variant = "DF=" + std::to_string(basis.k - 1);
    est.beta_hat = fit.coefficients(kExposureCoef);
    est.se = coef_se(fit, kExposureCoef);
    est.lambda_used = 0.0;
    est.edf_smooth = fit.edf_smooth;
    est.elapsed = seconds_since(t0);
    return est;
}

BetaEstimate estimate_ps(const Dataset& data, const TprsBasis& basis) {
    auto t0 = Clock::now();
    ModelSpec spec;
    spec.response = data.outcome;
    spec.parametric_design = outcome_parametric(data, data.exposure);
    spec.basis = &basis;
    spec.family = Family::gaussian();
    LambdaSelection sel = select_lambda(spec);
    BetaEstimate est;
    est.method = Method::PS;
    est.variant = "K=" + std::to_string(basis.k);
    est.beta_hat = sel.fit.coefficients(kExposureCoef);
    est.se = coef_se(sel.fit, kExposureCoef);
    est.lambda_used = sel.lambda;
    est.edf_smooth = sel.fit.edf_smooth;
    est.elapsed = seconds_since(t0);
    return est;
}

BetaEstimate estimate_eps(const Dataset& data, const TprsBasis& basis,
                          Family exposure_family) {
    if (exposure_family.is_binomial() && !data.binary_exposure)
        throw std::invalid_argument("estimate_eps: binomial family needs a binary exposure");
    auto t0 = Clock::now();
    ModelSpec stage1;
    stage1.response = data.exposure;
    stage1.parametric_design = exposure_parametric(data);
    stage1.basis = &basis;
    stage1.family = exposure_family;
    LambdaSelection sel = select_lambda(stage1);

    ModelSpec stage2;
    stage2.response = data.outcome;
    stage2.parametric_design = outcome_parametric(data, data.exposure);
    stage2.basis = &basis;
    stage2.family = Family::gaussian();
    FitResult fit = fit_penalized(stage2, sel.lambda);

    BetaEstimate est;
    est.method = Method::EPS;
    est.variant = "K=" + std::to_string(basis.k);
    switch (exposure_family.kind) {
        case FamilyKind::gaussian_identity:
            if (data.binary_exposure) est.variant += ":linear";
            break;
        case FamilyKind::binomial_logit: est.variant += ":logit"; break;
        case FamilyKind::binomial_probit: est.variant += ":probit"; break;
    }
    est.beta_hat = fit.coefficients(kExposureCoef);
    est.se = coef_se(fit, kExposureCoef);
    est.lambda_used = sel.lambda;
    est.edf_smooth = fit.edf_smooth;
    est.stage1_boundary = sel.boundary;
    est.elapsed = seconds_since(t0);
    return est;
}

BetaEstimate estimate_spatialplus(const Dataset& data, const TprsBasis& basis,
                                  Family exposure_family) {
    if (exposure_family.is_binomial())
        throw std::invalid_argument(
            "estimate_spatialplus: residualization supports gaussian exposure models only");
    auto t0 = Clock::now();
    ModelSpec stage1;
    stage1.response = data.exposure;
    stage1.parametric_design = exposure_parametric(data);
    stage1.basis = &basis;
    stage1.family = exposure_family;
    LambdaSelection sel1 = select_lambda(stage1);
    Eigen::MatrixXd x1(data.n(), stage1.parametric_design.cols() + basis.n_cols());
    x1 << stage1.parametric_design, basis.design;
    Eigen::VectorXd residuals = data.exposure - x1 * sel1.fit.coefficients;

    ModelSpec stage2;
    stage2.response = data.outcome;
    stage2.parametric_design = outcome_parametric(data, residuals);
    stage2.basis = &basis;
    stage2.family = Family::gaussian();
    LambdaSelection sel2 = select_lambda(stage2);

    BetaEstimate est;
    est.method = Method::SpatialPlus;
    est.variant = "K=" + std::to_string(basis.k);
    est.beta_hat = sel2.fit.coefficients(kExposureCoef);
    est.se = coef_se(sel2.fit, kExposureCoef);
    est.lambda_used = sel2.lambda;
    est.edf_smooth = sel2.fit.edf_smooth;
    est.stage1_boundary = sel1.boundary;
    est.elapsed = seconds_since(t0);
    return est;
}

double estimate_pns(const Dataset& data, const TprsBasis& basis) {
    ModelSpec spec;
    spec.response = data.exposure;
    spec.parametric_design = Eigen::MatrixXd::Ones(data.n(), 1);
    spec.basis = &basis;
    spec.family = data.binary_exposure ? Family::logit() : Family::gaussian();
    LambdaSelection sel = select_lambda(spec);

    double null_deviance;
    if (data.binary_exposure) {
        double mbar = data.exposure.mean();
        mbar = std::min(std::max(mbar, 1e-12), 1.0 - 1e-12);
        null_deviance = 0.0;
        for (int i = 0; i < data.n(); ++i)
            null_deviance += -2.0 * (data.exposure(i) > 0.5 ? std::log(mbar)
                                                            : std::log(1.0 - mbar));
    } else {
        null_deviance = (data.exposure.array() - data.exposure.mean()).square().sum();
    }
    if (null_deviance <= 0.0)
        throw std::runtime_error("estimate_pns: degenerate exposure");
    return sel.fit.deviance / null_deviance;
}

BetaEstimate estimate_fdf(const Dataset& data, int k) {
    return estimate_fdf(data, build_tprs(data.locations, k));
}
BetaEstimate estimate_ps(const Dataset& data, int k) {
    return estimate_ps(data, build_tprs(data.locations, k));
}
BetaEstimate estimate_eps(const Dataset& data, int k, Family exposure_family) {
    return estimate_eps(data, build_tprs(data.locations, k), exposure_family);
}
BetaEstimate estimate_spatialplus(const Dataset& data, int k, Family exposure_family) {
    return estimate_spatialplus(data, build_tprs(data.locations, k), exposure_family);
}
double estimate_pns(const Dataset& data, int k) {
    return estimate_pns(data, build_tprs(data.locations, k));
}

}  // namespace epspline
