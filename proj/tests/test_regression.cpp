#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epspline/regression.hpp"
#include "helpers.hpp"

using namespace epspline;
using test_helpers::random_locations;
using test_helpers::random_normal;

namespace {

ModelSpec gaussian_spec(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                        const TprsBasis* basis = nullptr) {
    ModelSpec spec;
    spec.response = y;
    spec.parametric_design = x;
    spec.basis = basis;
    spec.family = Family::gaussian();
    return spec;
}

Eigen::MatrixXd stacked(const ModelSpec& spec) {
    Eigen::MatrixXd x(spec.n(), spec.n_parametric() + spec.n_smooth());
    x.leftCols(spec.n_parametric()) = spec.parametric_design;
    if (spec.basis) x.rightCols(spec.n_smooth()) = spec.basis->design;
    return x;
}

// grouped binary data: n0/n1 observations per exposure arm, k0/k1 successes
ModelSpec grouped_binomial(int n0, int k0, int n1, int k1, Family family) {
    int n = n0 + n1;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 2);
    x.col(0).setOnes();
    int row = 0;
    for (int i = 0; i < n0; ++i, ++row) {
        x(row, 1) = 0.0;
        y(row) = i < k0 ? 1.0 : 0.0;
    }
    for (int i = 0; i < n1; ++i, ++row) {
        x(row, 1) = 1.0;
        y(row) = i < k1 ? 1.0 : 0.0;
    }
    ModelSpec spec;
    spec.response = y;
    spec.parametric_design = x;
    spec.family = family;
    return spec;
}

struct SmoothProblem {
    LocationSet locs;
    TprsBasis basis;
    ModelSpec spec;
    Eigen::VectorXd y;
};

SmoothProblem make_smooth_problem(int n, int k, double noise_sd, uint64_t seed) {
    SmoothProblem p;
    p.locs = random_locations(n, seed);
    p.basis = build_tprs(p.locs, k);
    Eigen::ArrayXd s1 = p.locs.coords.col(0).array();
    Eigen::ArrayXd s2 = p.locs.coords.col(1).array();
    p.y = ((4.0 * M_PI * s1).sin() + (3.0 * M_PI * s2).cos()).matrix() +
          noise_sd * random_normal(n, seed + 1);
    p.spec = gaussian_spec(p.y, Eigen::MatrixXd::Ones(n, 1), &p.basis);
    return p;
}

}  // namespace

TEST_CASE("gaussian exact fit: y = 3x") {
    const int n = 30;
    Eigen::VectorXd x = random_normal(n, 2);
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = x;
    FitResult fit = fit_penalized(gaussian_spec(3.0 * x, design), 0.0);
    CHECK(fit.coefficients(1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.deviance < 1e-20);
    CHECK(fit.edf_total == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("lambda=0 equals unpenalized least squares on the stacked design") {
    const int n = 60;
    SmoothProblem p = make_smooth_problem(n, 12, 0.4, 11);
    FitResult fit = fit_penalized(p.spec, 0.0);
    Eigen::MatrixXd x = stacked(p.spec);
    Eigen::VectorXd ols = x.colPivHouseholderQr().solve(p.y);
    CHECK((fit.coefficients - ols).norm() < 1e-8 * ols.norm());

    // covariance reduces to the OLS covariance (same scale convention)
    double scale = (p.y - x * ols).squaredNorm() / (n - x.cols());
    Eigen::MatrixXd ols_cov = scale * (x.transpose() * x).inverse();
    CHECK((fit.covariance - ols_cov).cwiseAbs().maxCoeff() <
          1e-6 * ols_cov.cwiseAbs().maxCoeff());
}

TEST_CASE("binomial logit on a grouped table recovers log odds ratio") {
    // arm 0: odds 1/4; arm 1: odds 1  ->  odds ratio 4
    ModelSpec spec = grouped_binomial(100, 20, 100, 50, Family::logit());
    FitResult fit = fit_penalized(spec, 0.0);
    CHECK(fit.converged);
    CHECK(fit.coefficients(1) == doctest::Approx(std::log(4.0)).epsilon(1e-6));
    CHECK(fit.coefficients(0) == doctest::Approx(std::log(0.25)).epsilon(1e-6));
    CHECK(fit.scale == 1.0);
}

TEST_CASE("probit and logit slopes keep the standard link-scale relation") {
    ModelSpec logit_spec = grouped_binomial(120, 30, 120, 78, Family::logit());
    ModelSpec probit_spec = grouped_binomial(120, 30, 120, 78, Family::probit());
    double b_logit = fit_penalized(logit_spec, 0.0).coefficients(1);
    double b_probit = fit_penalized(probit_spec, 0.0).coefficients(1);
    CHECK(b_logit * b_probit > 0.0);
    double ratio = b_logit / b_probit;
    CHECK(ratio > 1.6);
    CHECK(ratio < 1.8);
}

TEST_CASE("binomial IRLS satisfies the penalized score equation at convergence") {
    const int n = 150;
    LocationSet locs = random_locations(n, 17);
    TprsBasis basis = build_tprs(locs, 15);
    Eigen::ArrayXd eta_true = 1.5 * (2.0 * locs.coords.col(0).array() - 1.0);
    Eigen::VectorXd y(n);
    RngStream rng(19);
    for (int i = 0; i < n; ++i)
        y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-eta_true(i))) ? 1.0 : 0.0;

    ModelSpec spec;
    spec.response = y;
    spec.parametric_design = Eigen::MatrixXd::Ones(n, 1);
    spec.basis = &basis;
    spec.family = Family::logit();
    const double lambda = 3.0;
    FitResult fit = fit_penalized(spec, lambda);
    CHECK(fit.converged);

    Eigen::MatrixXd x = stacked(spec);
    Eigen::ArrayXd mu = 1.0 / (1.0 + (-(x * fit.coefficients).array()).exp());
    Eigen::VectorXd s = Eigen::VectorXd::Zero(x.cols());
    s.tail(basis.n_cols()) = basis.penalty_diag;
    Eigen::VectorXd score = x.transpose() * (y.array() - mu).matrix() -
                            lambda * s.cwiseProduct(fit.coefficients);
    CHECK(score.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gcv score: hand value and dense hat-matrix oracle") {
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    FitResult fit = fit_penalized(gaussian_spec(y, Eigen::MatrixXd::Ones(3, 1)), 0.0);
    CHECK(fit.deviance == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.gcv == doctest::Approx(1.5).epsilon(1e-12));

    const int n = 50;
    SmoothProblem p = make_smooth_problem(n, 10, 0.5, 29);
    for (double lambda : {1e-2, 1.0, 100.0}) {
        FitResult f = fit_penalized(p.spec, lambda);
        Eigen::MatrixXd x = stacked(p.spec);
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
        s.bottomRightCorner(p.basis.n_cols(), p.basis.n_cols()) = p.basis.penalty();
        Eigen::MatrixXd hat =
            x * (x.transpose() * x + lambda * s).inverse() * x.transpose();
        double edf = hat.trace();
        double rss = (p.y - hat * p.y).squaredNorm();
        double gcv = n * rss / ((n - edf) * (n - edf));
        CHECK(f.edf_total == doctest::Approx(edf).epsilon(1e-8));
        CHECK(f.deviance == doctest::Approx(rss).epsilon(1e-8));
        CHECK(f.gcv == doctest::Approx(gcv).epsilon(1e-8));
    }
}

TEST_CASE("coefficient standard errors match dense oracles") {
    const int n = 40;
    Eigen::VectorXd x = random_normal(n, 31);
    Eigen::VectorXd y = 2.0 + 0.5 * x.array() + 0.7 * random_normal(n, 32).array();
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = x;
    FitResult ols = fit_penalized(gaussian_spec(y, design), 0.0);
    // textbook simple-regression SE
    double xbar = x.mean();
    double sxx = (x.array() - xbar).square().sum();
    double sigma2 = ols.deviance / (n - 2);
    CHECK(coef_se(ols, 1) == doctest::Approx(std::sqrt(sigma2 / sxx)).epsilon(1e-10));

    SmoothProblem p = make_smooth_problem(50, 10, 0.5, 37);
    double lambda = 2.5;
    FitResult f = fit_penalized(p.spec, lambda);
    Eigen::MatrixXd xs = stacked(p.spec);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(xs.cols(), xs.cols());
    s.bottomRightCorner(p.basis.n_cols(), p.basis.n_cols()) = p.basis.penalty();
    Eigen::MatrixXd cov =
        (xs.transpose() * xs + lambda * s).inverse() * f.scale;
    for (int j = 0; j < xs.cols(); ++j)
        CHECK(coef_se(f, j) == doctest::Approx(std::sqrt(cov(j, j))).epsilon(1e-8));
    CHECK_THROWS_AS(coef_se(f, static_cast<int>(xs.cols())), std::out_of_range);
}

TEST_CASE("RSS is non-decreasing in lambda") {
    SmoothProblem p = make_smooth_problem(80, 15, 0.5, 41);
    double prev = -1.0;
    for (double loglam = -8.0; loglam <= 8.0; loglam += 1.0) {
        double rss = fit_penalized(p.spec, std::pow(10.0, loglam)).deviance;
        CHECK(rss >= prev - 1e-10);
        prev = rss;
    }
}

TEST_CASE("select_lambda: linear truth leaves the penalized directions unused") {
    const int n = 100;
    LocationSet locs = random_locations(n, 43);
    TprsBasis basis = build_tprs(locs, 20);
    Eigen::VectorXd y = (1.0 + 2.0 * locs.coords.col(0).array()).matrix() +
                        0.1 * random_normal(n, 44);
    ModelSpec spec = gaussian_spec(y, Eigen::MatrixXd::Ones(n, 1), &basis);
    LambdaSelection sel = select_lambda(spec);
    CHECK(std::abs(sel.fit.edf_smooth - basis.null_dim) < 0.5);
}

TEST_CASE("select_lambda: noiseless representable truth drives lambda down") {
    const int n = 80;
    LocationSet locs = random_locations(n, 47);
    TprsBasis basis = build_tprs(locs, 12);
    Eigen::VectorXd y = 5.0 * basis.design.col(0) - 2.0 * basis.design.col(3);
    ModelSpec spec = gaussian_spec(y, Eigen::MatrixXd::Ones(n, 1), &basis);
    LambdaSelection sel = select_lambda(spec);
    CHECK(sel.lambda < 1e-6);
    CHECK(sel.fit.deviance < 1e-8);
}

TEST_CASE("select_lambda: pure-noise response reaches the smooth boundary") {
    const int n = 150;
    LocationSet locs = random_locations(n, 53);
    TprsBasis basis = build_tprs(locs, 15);
    Eigen::VectorXd y = random_normal(n, 54);
    ModelSpec spec = gaussian_spec(y, Eigen::MatrixXd::Ones(n, 1), &basis);
    LambdaSelection sel = select_lambda(spec);
    if (sel.boundary) CHECK(sel.lambda >= 1e7);
    // whatever the selection, the smooth carries almost no flexibility
    CHECK(sel.fit.edf_smooth < basis.null_dim + 2.0);
}

TEST_CASE("select_lambda beats a dense lambda grid") {
    SmoothProblem p = make_smooth_problem(100, 20, 0.5, 59);
    LambdaSelection sel = select_lambda(p.spec);
    double best_grid = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 201; ++i) {
        double lambda = std::pow(10.0, -8.0 + 16.0 * i / 200.0);
        best_grid = std::min(best_grid, fit_penalized(p.spec, lambda).gcv);
    }
    CHECK(sel.fit.gcv <= best_grid * (1.0 + 1e-6));
}

TEST_CASE("prior weights act like observation replication") {
    const int n = 25;
    Eigen::VectorXd x = random_normal(n, 61);
    Eigen::VectorXd y = 1.0 + 0.8 * x.array() + 0.3 * random_normal(n, 62).array();
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = x;

    ModelSpec weighted = gaussian_spec(y, design);
    weighted.weights = Eigen::VectorXd::Ones(n);
    weighted.weights(4) = 2.0;

    Eigen::VectorXd y2(n + 1);
    Eigen::MatrixXd d2(n + 1, 2);
    y2.head(n) = y;
    d2.topRows(n) = design;
    y2(n) = y(4);
    d2.row(n) = design.row(4);
    FitResult a = fit_penalized(weighted, 0.0);
    FitResult b = fit_penalized(gaussian_spec(y2, d2), 0.0);
    CHECK((a.coefficients - b.coefficients).norm() < 1e-10);
}

TEST_CASE("input validation errors") {
    Eigen::VectorXd y(4);
    y << 0.0, 1.0, 0.5, 1.0;
    ModelSpec bad;
    bad.response = y;
    bad.parametric_design = Eigen::MatrixXd::Ones(4, 1);
    bad.family = Family::logit();
    CHECK_THROWS_AS(fit_penalized(bad, 0.0), std::invalid_argument);

    ModelSpec mismatched;
    mismatched.response = Eigen::VectorXd::Zero(4);
    mismatched.parametric_design = Eigen::MatrixXd::Ones(5, 1);
    mismatched.family = Family::gaussian();
    CHECK_THROWS_AS(fit_penalized(mismatched, 0.0), std::invalid_argument);

    ModelSpec no_smooth = gaussian_spec(Eigen::VectorXd::Zero(4),
                                        Eigen::MatrixXd::Ones(4, 1));
    CHECK_THROWS_AS(select_lambda(no_smooth), std::invalid_argument);
    CHECK_THROWS(fit_penalized(no_smooth, -1.0));
}
