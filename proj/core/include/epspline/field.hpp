#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epspline/rng.hpp"

namespace epspline {

/// Point locations on the unit square.
struct LocationSet {
    Eigen::MatrixX2d coords;  // n x 2, each coordinate in [0, 1]

    int n() const { return static_cast<int>(coords.rows()); }
    void validate() const;  // throws std::invalid_argument on violation
};

LocationSet uniform_locations(int n, RngStream& rng);

/// Matern correlation model (unit marginal variance).
struct MaternSpec {
    double nu = 1.5;   // smoothness, > 0
    double phi = 0.1;  // spatial decay / range, > 0

    void validate() const;
};

struct FieldRealization {
    Eigen::VectorXd values;
    bool standardized = false;
};

// rho(d) = (2^{1-nu}/Gamma(nu)) (sqrt(2 nu) d/phi)^nu K_nu(sqrt(2 nu) d/phi).
// Fast path for nu = 3/2 (the only smoothness exercised by the simulator);
// dispatches to the half-integer expansion otherwise.
double matern_correlation(double d, const MaternSpec& spec);

// General closed form for half-integer nu = p + 1/2; kept as an independent
// route for cross-checking the nu = 3/2 fast path.
double matern_correlation_half_integer(double d, const MaternSpec& spec);

// Symmetric correlation matrix over all location pairs (unit diagonal).
Eigen::MatrixXd build_covariance(const LocationSet& locs, const MaternSpec& spec);

// One mean-zero GP draw: L * w with L a (jittered) Cholesky factor.
FieldRealization sample_gp(const LocationSet& locs, const MaternSpec& spec,
                           RngStream& rng);

// Subtract the sample mean, divide by the sample SD. Throws on SD = 0.
FieldRealization z_score(const FieldRealization& field);

// Distance at which the correlation drops to 0.05, by bracketed bisection.
double effective_range(const MaternSpec& spec);

// Shared jitter policy: in-place Cholesky of a symmetric PSD matrix, adding
// 1e-10 to the diagonal and escalating x10 up to 1e-4 before failing.
// Returns the lower factor.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd a);

}  // namespace epspline
