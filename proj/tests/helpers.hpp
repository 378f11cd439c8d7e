#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "epspline/field.hpp"
#include "epspline/rng.hpp"

namespace test_helpers {

inline epspline::LocationSet random_locations(int n, uint64_t seed = 7) {
    epspline::RngStream rng(seed);
    return epspline::uniform_locations(n, rng);
}

inline Eigen::VectorXd random_normal(int n, uint64_t seed) {
    epspline::RngStream rng(seed);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::ArrayXd x = a.array() - a.mean();
    Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

}  // namespace test_helpers
