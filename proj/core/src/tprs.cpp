#include "epspline/tprs.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace epspline {

double tps_eta(double r) {
    if (r <= 0.0) return 0.0;
    return r * r * std::log(r) / (8.0 * M_PI);
}

namespace {

struct EigPair {
    double value;
    int index;  // column in the candidate eigenvector block
};

// Selected eigenpairs of a symmetric matrix by index range [il, iu] (1-based,
// ascending eigenvalue order). Destroys its copy of `a`.
void syevr_range(Eigen::MatrixXd a, int il, int iu, Eigen::VectorXd& values,
                 Eigen::MatrixXd& vectors) {
    const int m = static_cast<int>(a.rows());
    const int want = iu - il + 1;
    values.resize(want);
    vectors.resize(m, want);
    int found = 0;
    std::vector<int> isuppz(2 * std::max(1, want));
    int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', m, a.data(), m,
                              0.0, 0.0, il, iu, 0.0, &found, values.data(),
                              vectors.data(), m, isuppz.data());
    if (info != 0 || found != want)
        throw std::runtime_error("tprs: dsyevr failed");
}

}  // namespace

TprsSpectrum::TprsSpectrum(const LocationSet& locs, int k_max)
    : k_max_(k_max), n_(locs.n()), coords_(locs.coords) {
    locs.validate();
    if (k_max < 4) throw std::invalid_argument("tprs: k must be >= 4");
    if (k_max > n_) throw std::invalid_argument("tprs: k must be <= n");

    // radial kernel is built on distinct locations only
    std::map<std::pair<double, double>, int> seen;
    row_to_unique_.resize(n_);
    std::vector<int> unique_rows;
    for (int i = 0; i < n_; ++i) {
        auto key = std::make_pair(coords_(i, 0), coords_(i, 1));
        auto [it, inserted] = seen.emplace(key, static_cast<int>(unique_rows.size()));
        if (inserted) unique_rows.push_back(i);
        row_to_unique_[i] = it->second;
    }
    const int m = static_cast<int>(unique_rows.size());
    if (m < k_max)
        throw std::invalid_argument("tprs: fewer distinct locations than basis dimension");

    Eigen::MatrixXd e(m, m);
    for (int j = 0; j < m; ++j) {
        e(j, j) = 0.0;
        for (int i = j + 1; i < m; ++i) {
            double r = (coords_.row(unique_rows[i]) - coords_.row(unique_rows[j])).norm();
            double v = tps_eta(r);
            e(i, j) = v;
            e(j, i) = v;
        }
    }

    const int q = k_max - 3;
    Eigen::VectorXd cand_vals;
    Eigen::MatrixXd cand_vecs;
    if (2 * q >= m) {
        syevr_range(std::move(e), 1, m, cand_vals, cand_vecs);
    } else {
        Eigen::VectorXd lo_vals, hi_vals;
        Eigen::MatrixXd lo_vecs, hi_vecs;
        syevr_range(e, 1, q, lo_vals, lo_vecs);
        syevr_range(std::move(e), m - q + 1, m, hi_vals, hi_vecs);
        cand_vals.resize(2 * q);
        cand_vecs.resize(m, 2 * q);
        cand_vals << lo_vals, hi_vals;
        cand_vecs << lo_vecs, hi_vecs;
    }

    std::vector<EigPair> pairs(cand_vals.size());
    for (int i = 0; i < cand_vals.size(); ++i) pairs[i] = {cand_vals(i), i};
    std::sort(pairs.begin(), pairs.end(), [](const EigPair& a, const EigPair& b) {
        double aa = std::abs(a.value), ab = std::abs(b.value);
        if (aa != ab) return aa > ab;
        return a.value > b.value;
    });

    eigvals_.resize(q);
    eigvecs_.resize(m, q);
    for (int j = 0; j < q; ++j) {
        eigvals_(j) = pairs[j].value;
        Eigen::VectorXd v = cand_vecs.col(pairs[j].index);
        // sign convention: largest-magnitude entry positive
        int arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        eigvecs_.col(j) = v;
    }
}

TprsBasis TprsSpectrum::basis_for(int k) const {
    if (k < 4) throw std::invalid_argument("tprs: k must be >= 4");
    if (k > k_max_) throw std::invalid_argument("tprs: k exceeds spectrum k_max");
    const int q = k - 3;
    TprsBasis basis;
    basis.k = k;
    basis.null_dim = 2;
    basis.design.resize(n_, q + 2);
    for (int i = 0; i < n_; ++i)
        basis.design.row(i).head(q) = eigvecs_.row(row_to_unique_[i]).head(q);
    basis.design.col(q) = coords_.col(0);
    basis.design.col(q + 1) = coords_.col(1);
    // sum-to-zero constraint absorbed by centering; intercept is parametric
    basis.design.rowwise() -= basis.design.colwise().mean();

    basis.penalty_diag = Eigen::VectorXd::Zero(q + 2);
    for (int j = 0; j < q; ++j) {
        double a = std::abs(eigvals_(j));
        if (a <= 0.0) throw std::runtime_error("tprs: zero retained eigenvalue");
        basis.penalty_diag(j) = 1.0 / a;
    }
    return basis;
}

TprsBasis build_tprs(const LocationSet& locs, int k) {
    return TprsSpectrum(locs, k).basis_for(k);
}

double effective_df(const TprsBasis& basis, const Eigen::MatrixXd& other_design,
                    double lambda, const Eigen::VectorXd& weights) {
    if (lambda < 0.0) throw std::invalid_argument("effective_df: lambda must be >= 0");
    const int n = static_cast<int>(basis.design.rows());
    const int p = static_cast<int>(other_design.cols());
    const int q = basis.n_cols();
    Eigen::MatrixXd x(n, p + q);
    x << other_design, basis.design;
    Eigen::MatrixXd xtwx = x.transpose() * weights.asDiagonal() * x;
    Eigen::MatrixXd a = xtwx;
    a.bottomRightCorner(q, q) += lambda * basis.penalty_diag.asDiagonal().toDenseMatrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
        throw std::runtime_error("effective_df: singular penalized design");
    return ldlt.solve(xtwx).trace();
}

}  // namespace epspline
