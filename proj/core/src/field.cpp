#include "epspline/field.hpp"

#include <cmath>
#include <stdexcept>

namespace epspline {

void LocationSet::validate() const {
    if (coords.rows() < 2) throw std::invalid_argument("LocationSet: n must be >= 2");
    if ((coords.array() < 0.0).any() || (coords.array() > 1.0).any())
        throw std::invalid_argument("LocationSet: coordinates must lie in [0,1]");
}

LocationSet uniform_locations(int n, RngStream& rng) {
    LocationSet locs;
    locs.coords.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        locs.coords(i, 0) = rng.uniform();
        locs.coords(i, 1) = rng.uniform();
    }
    return locs;
}

void MaternSpec::validate() const {
    if (!(nu > 0.0) || !(phi > 0.0))
        throw std::invalid_argument("MaternSpec: nu and phi must be positive");
}

double matern_correlation_half_integer(double d, const MaternSpec& spec) {
    spec.validate();
    if (d < 0.0) throw std::domain_error("matern_correlation: d must be >= 0");
    if (d == 0.0) return 1.0;
    double p_real = spec.nu - 0.5;
    int p = static_cast<int>(std::lround(p_real));
    if (std::abs(p_real - p) > 1e-12 || p < 0)
        throw std::domain_error("matern_correlation_half_integer: nu must be p + 1/2");
    // rho(d) = exp(-t) (p!/(2p)!) sum_{i=0}^{p} (p+i)!/(i!(p-i)!) (2t)^{p-i},
    // t = sqrt(2 nu) d / phi
    double t = std::sqrt(2.0 * spec.nu) * d / spec.phi;
    double sum = 0.0;
    for (int i = 0; i <= p; ++i) {
        double term = std::exp(std::lgamma(p + i + 1.0) - std::lgamma(i + 1.0) -
                               std::lgamma(p - i + 1.0));
        sum += term * std::pow(2.0 * t, static_cast<double>(p - i));
    }
    double scale = std::exp(std::lgamma(p + 1.0) - std::lgamma(2.0 * p + 1.0));
    return std::exp(-t) * scale * sum;
}

double matern_correlation(double d, const MaternSpec& spec) {
    spec.validate();
    if (d < 0.0) throw std::domain_error("matern_correlation: d must be >= 0");
    if (d == 0.0) return 1.0;
    if (spec.nu == 1.5) {
        double t = std::sqrt(3.0) * d / spec.phi;
        return (1.0 + t) * std::exp(-t);
    }
    return matern_correlation_half_integer(d, spec);
}

Eigen::MatrixXd build_covariance(const LocationSet& locs, const MaternSpec& spec) {
    locs.validate();
    spec.validate();
    const int n = locs.n();
    Eigen::MatrixXd v(n, n);
    for (int j = 0; j < n; ++j) {
        v(j, j) = 1.0;
        for (int i = j + 1; i < n; ++i) {
            double d = (locs.coords.row(i) - locs.coords.row(j)).norm();
            double r = matern_correlation(d, spec);
            v(i, j) = r;
            v(j, i) = r;
        }
    }
    return v;
}

Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd a) {
    const auto n = a.rows();
    double jitter = 0.0;
    for (double next = 1e-10; next <= 1e-4 * 1.0001; next *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(a + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter = next;
    }
    throw std::runtime_error("cholesky_with_jitter: factorization failed at max jitter 1e-4");
}

FieldRealization sample_gp(const LocationSet& locs, const MaternSpec& spec,
                           RngStream& rng) {
    const int n = locs.n();
    FieldRealization f;
    if (n == 1) {
        f.values.resize(1);
        f.values(0) = rng.normal();
        return f;
    }
    Eigen::MatrixXd l = cholesky_with_jitter(build_covariance(locs, spec));
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.normal();
    f.values = l.triangularView<Eigen::Lower>() * w;
    return f;
}

FieldRealization z_score(const FieldRealization& field) {
    const auto n = field.values.size();
    if (n < 2) throw std::invalid_argument("z_score: need n >= 2");
    double mean = field.values.mean();
    double sd = std::sqrt((field.values.array() - mean).square().sum() / (n - 1));
    if (sd == 0.0) throw std::runtime_error("z_score: degenerate (constant) field");
    FieldRealization out;
    out.values = (field.values.array() - mean) / sd;
    out.standardized = true;
    return out;
}

double effective_range(const MaternSpec& spec) {
    spec.validate();
    const double target = 0.05;
    double lo = 0.0;
    double hi = spec.phi;
    while (matern_correlation(hi, spec) > target) hi *= 2.0;
    while (hi - lo > 1e-12 * hi + 1e-14) {
        double mid = 0.5 * (lo + hi);
        if (matern_correlation(mid, spec) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace epspline
