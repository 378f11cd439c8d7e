#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epspline/regression.hpp"
#include "epspline/tprs.hpp"
#include "helpers.hpp"

using namespace epspline;
using test_helpers::random_locations;
using test_helpers::random_normal;

namespace {

Eigen::MatrixXd intercept(int n) { return Eigen::MatrixXd::Ones(n, 1); }

// unpenalized least-squares fitted values on [other | basis.design]
Eigen::VectorXd ls_fitted(const TprsBasis& basis, const Eigen::MatrixXd& other,
                          const Eigen::VectorXd& y) {
    Eigen::MatrixXd x(y.size(), other.cols() + basis.n_cols());
    x << other, basis.design;
    return x * x.colPivHouseholderQr().solve(y);
}

}  // namespace

TEST_CASE("minimal basis dimensions and invariant structure") {
    LocationSet locs = random_locations(40, 3);
    TprsBasis b = build_tprs(locs, 4);
    CHECK(b.design.cols() == 3);
    CHECK(b.null_dim == 2);
    CHECK(b.k == 4);
    CHECK(b.penalty_diag.size() == 3);
    CHECK(b.penalty_diag(1) == 0.0);
    CHECK(b.penalty_diag(2) == 0.0);
    CHECK(b.penalty_diag(0) > 0.0);

    TprsBasis big = build_tprs(locs, 15);
    CHECK(big.design.cols() == 14);
    // each column is mean-centered (sum-to-zero constraint absorbed)
    CHECK(big.design.colwise().sum().cwiseAbs().maxCoeff() < 1e-8);
    // penalty: nonnegative, zero exactly on the two null-space columns
    CHECK((big.penalty_diag.array() >= 0.0).all());
    CHECK(big.penalty_diag.tail(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((big.penalty_diag.head(12).array() > 0.0).all());
    // full column rank for locations in general position
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(big.design);
    CHECK(qr.rank() == 14);
}

TEST_CASE("linear trends are reproduced exactly at any lambda") {
    LocationSet locs = random_locations(60, 5);
    TprsBasis basis = build_tprs(locs, 12);
    Eigen::VectorXd y =
        2.0 * locs.coords.col(0) - locs.coords.col(1) + Eigen::VectorXd::Constant(60, 5.0);
    for (double lambda : {0.0, 1.0, 1e6}) {
        ModelSpec spec;
        spec.response = y;
        spec.parametric_design = intercept(60);
        spec.basis = &basis;
        spec.family = Family::gaussian();
        FitResult fit = fit_penalized(spec, lambda);
        Eigen::MatrixXd x(60, 1 + basis.n_cols());
        x << spec.parametric_design, basis.design;
        CHECK((y - x * fit.coefficients).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("full-rank basis at lambda=0 interpolates like a direct thin-plate solve") {
    const int n = 8;
    LocationSet locs = random_locations(n, 9);
    Eigen::VectorXd y = random_normal(n, 13);

    // direct full TPS interpolation system: [E T; T' 0][delta; alpha] = [y; 0]
    Eigen::MatrixXd e(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            e(i, j) = tps_eta((locs.coords.row(i) - locs.coords.row(j)).norm());
    Eigen::MatrixXd t(n, 3);
    t.col(0).setOnes();
    t.rightCols(2) = locs.coords;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n + 3, n + 3);
    sys.topLeftCorner(n, n) = e;
    sys.topRightCorner(n, 3) = t;
    sys.bottomLeftCorner(3, n) = t.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 3);
    rhs.head(n) = y;
    Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
    Eigen::VectorXd direct = e * sol.head(n) + t * sol.tail(3);
    CHECK((direct - y).cwiseAbs().maxCoeff() < 1e-8);  // the oracle interpolates

    TprsBasis basis = build_tprs(locs, n);
    Eigen::VectorXd fitted = ls_fitted(basis, intercept(n), y);
    CHECK((fitted - y).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fitted - direct).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("effective df: limits, dense oracle, monotonicity") {
    const int n = 50;
    LocationSet locs = random_locations(n, 21);
    TprsBasis basis = build_tprs(locs, 10);
    Eigen::MatrixXd other(n, 2);
    other.col(0).setOnes();
    other.col(1) = random_normal(n, 22);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);

    CHECK(effective_df(basis, other, 0.0, w) ==
          doctest::Approx(2.0 + 9.0).epsilon(1e-8));
    CHECK(effective_df(basis, other, 1e12, w) ==
          doctest::Approx(2.0 + basis.null_dim).epsilon(1e-6));

    // dense brute-force trace of X(X'WX + lambda S)^-1 X' W
    Eigen::VectorXd wts = random_normal(n, 23).array().abs() + 0.5;
    for (double lambda : {1e-3, 0.7, 50.0}) {
        Eigen::MatrixXd x(n, 2 + basis.n_cols());
        x << other, basis.design;
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
        s.bottomRightCorner(basis.n_cols(), basis.n_cols()) = basis.penalty();
        Eigen::MatrixXd a = x.transpose() * wts.asDiagonal() * x + lambda * s;
        Eigen::MatrixXd hat = x * a.inverse() * x.transpose() * wts.asDiagonal();
        CHECK(effective_df(basis, other, lambda, wts) ==
              doctest::Approx(hat.trace()).epsilon(1e-8));
    }

    double prev = effective_df(basis, other, 0.0, w);
    for (double loglam = -8.0; loglam <= 8.0; loglam += 0.5) {
        double cur = effective_df(basis, other, std::pow(10.0, loglam), w);
        CHECK(cur <= prev + 1e-10);
        prev = cur;
    }
}

TEST_CASE("nested bases: larger k never fits worse at lambda=0") {
    const int n = 120;
    LocationSet locs = random_locations(n, 31);
    Eigen::VectorXd y = (4.0 * M_PI * locs.coords.col(0).array()).sin().matrix() +
                        random_normal(n, 32) * 0.3;
    double prev_rss = std::numeric_limits<double>::infinity();
    for (int k : {6, 10, 20, 40}) {
        TprsBasis basis = build_tprs(locs, k);
        double rss = (y - ls_fitted(basis, intercept(n), y)).squaredNorm();
        CHECK(rss <= prev_rss + 1e-8);
        prev_rss = rss;
    }
}

TEST_CASE("construction is deterministic and consistent across spectrum sizes") {
    LocationSet locs = random_locations(80, 41);
    TprsBasis a = build_tprs(locs, 12);
    TprsBasis b = build_tprs(locs, 12);
    CHECK(a.design == b.design);  // bitwise
    CHECK(a.penalty_diag == b.penalty_diag);

    // slicing a larger spectrum reproduces the small basis
    TprsSpectrum spectrum(locs, 30);
    TprsBasis sliced = spectrum.basis_for(12);
    CHECK(sliced.k == 12);
    CHECK((sliced.penalty_diag - a.penalty_diag).cwiseAbs().maxCoeff() <
          1e-8 * a.penalty_diag.maxCoeff());
    CHECK((sliced.design - a.design).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("duplicate locations are mapped to a shared kernel row") {
    LocationSet locs = random_locations(30, 51);
    locs.coords.row(7) = locs.coords.row(3);
    locs.coords.row(19) = locs.coords.row(3);
    TprsBasis basis = build_tprs(locs, 10);
    CHECK(basis.design.row(7) == basis.design.row(3));
    CHECK(basis.design.row(19) == basis.design.row(3));
    // 28 distinct points: k up to 28 works, 29 does not
    CHECK_NOTHROW(build_tprs(locs, 28));
    CHECK_THROWS_AS(build_tprs(locs, 29), std::invalid_argument);
}

TEST_CASE("dimension preconditions") {
    LocationSet locs = random_locations(20, 61);
    CHECK_THROWS_AS(build_tprs(locs, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_tprs(locs, 21), std::invalid_argument);
    TprsSpectrum spectrum(locs, 12);
    CHECK_THROWS_AS(spectrum.basis_for(13), std::invalid_argument);
}
