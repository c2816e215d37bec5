/// @file  datasets.hpp
/// @brief Synthetic data generators (Gaussian mixtures, PCA projections)
///        and feature-CSV ingestion.

#pragma once

#include "tuq/errors.hpp"
#include "tuq/rng.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace tuq {

/// n points in R^d with optional integer class labels.
struct PointSet {
    Eigen::MatrixXd points;  ///< n x d
    std::vector<int> labels; ///< empty or length n

    int n() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    bool has_labels() const { return !labels.empty(); }
};

struct MixtureSpec {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;
    Eigen::VectorXd weights;

    std::size_t components() const { return means.size(); }

    /// Checks SPD covariances, matching shapes and a normalized simplex
    /// weight vector; throws InvalidArgumentError otherwise.
    void validate() const;
};

/// The two-dimensional mixture of three Gaussians used throughout the
/// calibration experiments: means [2,2], [-2,-1], [4,-2], covariances
/// [2,0;0,1], I, [1,0.7;0.7,2], equal weights.
MixtureSpec paper_gaussian_mixture();

/// Draws n points; labels record the generating component.
PointSet sample_mixture(const MixtureSpec& spec, int n, Rng& rng);

/// Centers the columns of `features` and projects onto the top d_true
/// principal components. Component signs are fixed by making each
/// component's largest-magnitude entry positive. Throws RankError when
/// the sample covariance has rank < d_true.
PointSet pca_project(const Eigen::MatrixXd& features, int d_true);

struct FeatureData {
    Eigen::MatrixXd features;
    std::vector<int> labels; ///< empty unless a label column was extracted
};

/// Reads a comma-separated float matrix. Lines starting with '#' are
/// skipped. When label_column is given, that column is removed from the
/// features and returned as integer labels.
FeatureData read_features(const std::string& path,
                          std::optional<int> label_column = std::nullopt);

void write_features(const FeatureData& data, const std::string& path,
                    std::optional<int> label_column = std::nullopt);

} // namespace tuq
