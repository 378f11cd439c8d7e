#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epspline/field.hpp"

namespace epspline {

/// Low-rank thin-plate regression spline basis over 2-D locations.
///
/// The design holds K-1 mean-centered columns: k-3 penalized directions
/// (leading eigenvectors of the radial kernel, by absolute eigenvalue)
/// followed by the two linear null-space columns s1, s2. The constant is
/// removed by the centering; the model intercept lives in the parametric
/// block. The penalty is diagonal: 1/|eigenvalue| on penalized directions,
/// zero on the null space.
struct TprsBasis {
    Eigen::MatrixXd design;        // n x (k-1)
    Eigen::VectorXd penalty_diag;  // length k-1; trailing null_dim entries are 0
    int null_dim = 2;
    int k = 0;

    int n_cols() const { return static_cast<int>(design.cols()); }
    Eigen::MatrixXd penalty() const {
        return Eigen::MatrixXd(penalty_diag.asDiagonal());
    }
};

// Eigendecomposition of the thin-plate radial kernel for one location set,
// reusable across several basis dimensions (slicing the leading directions
// yields exactly the basis build_tprs would produce for the smaller k).
class TprsSpectrum {
public:
    TprsSpectrum(const LocationSet& locs, int k_max);

    TprsBasis basis_for(int k) const;
    int k_max() const { return k_max_; }

private:
    int k_max_;
    int n_;
    std::vector<int> row_to_unique_;
    Eigen::MatrixX2d coords_;           // full n x 2
    Eigen::MatrixXd eigvecs_;           // m x (k_max - 3), |eigenvalue| descending
    Eigen::VectorXd eigvals_;
};

TprsBasis build_tprs(const LocationSet& locs, int k);

// Thin-plate radial kernel eta(r) = r^2 log(r) / (8 pi), eta(0) = 0.
double tps_eta(double r);

// Trace of the hat matrix of the penalized weighted least-squares fit on
// [other_design | basis.design] with penalty lambda * S on the smooth block.
double effective_df(const TprsBasis& basis, const Eigen::MatrixXd& other_design,
                    double lambda, const Eigen::VectorXd& weights);

}  // namespace epspline
