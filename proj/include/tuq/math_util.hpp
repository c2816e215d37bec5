/// @file  math_util.hpp
/// @brief Small numeric helpers shared across modules.

#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace tuq {

/// Standard normal cdf.
inline double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// Logistic function 1 / (1 + exp(-x)), evaluated stably.
inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Euclidean distance matrix of the rows of X.
inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd D = sq.replicate(1, n) + sq.transpose().replicate(n, 1)
                        - 2.0 * X * X.transpose();
    D = D.cwiseMax(0.0).cwiseSqrt();
    D.diagonal().setZero();
    return D;
}

/// Subtracts the centroid from every row.
inline Eigen::MatrixXd center_rows(const Eigen::MatrixXd& X) {
    return X.rowwise() - X.colwise().mean();
}

} // namespace tuq
