/// @file  eval.hpp
/// @brief Evaluation metrics and downstream learners: Procrustes embedding
///        error, abstaining prediction error, leave-one-out kNN,
///        normalized spectral clustering, and the Adjusted Rand Index.

#pragma once

#include "tuq/embedding.hpp"
#include "tuq/rng.hpp"
#include "tuq/triplets.hpp"
#include "tuq/uncertainty.hpp"

#include <Eigen/Dense>
#include <vector>

namespace tuq {

using Labeling = std::vector<int>;

/// min over orthogonal U of ||X U - X_star||_F^2, both inputs centered
/// first. No scale correction is applied (the literal evaluation metric);
/// scale-adjusting alignment lives in procrustes_align.
double procrustes_distance(const Embedding& X, const Embedding& X_star);

/// Scale-invariant variant: min over s > 0 and orthogonal U of
/// ||s X U - X_star||_F^2. Embedding losses fix shape but not scale, so
/// the calibration experiments report this form.
double procrustes_distance_scaled(const Embedding& X, const Embedding& X_star);

struct PredictionOutcome {
    double error = 0.0;           ///< wrong / (wrong + right); 0 when nothing predicted
    double abstention_rate = 0.0; ///< abstained / total
    std::size_t predicted = 0;
    std::size_t wrong = 0;
};

/// Outcome of a prediction per true comparison: CloserJ is correct,
/// CloserL is wrong, Abstain abstains.
PredictionOutcome triplet_prediction_error(const std::vector<Prediction>& predictions);

/// Convenience: predicts every comparison of `truth` at threshold t.
PredictionOutcome evaluate_predictions(const DistanceStats& stats, const TripletSet& truth,
                                       double t);

/// Leave-one-out kNN misclassification fraction. Majority vote over the k
/// nearest other points; label ties resolve to the smallest id.
double knn_error(const Embedding& X, const Labeling& labels, int k);

/// Symmetrized graph_k-nearest-neighbor graph with Gaussian edge weights
/// (bandwidth = median retained edge distance), symmetric normalized
/// Laplacian, row-normalized spectral embedding, seeded k-means with 20
/// restarts. Throws DisconnectedGraphError when the graph has more
/// components than clusters.
Labeling spectral_clustering(const Embedding& X, int n_clusters, int graph_k, Rng& rng);

/// Pair-counting ARI. The undefined-denominator case (one cluster in both
/// labelings) returns 1 by convention.
double adjusted_rand_index(const Labeling& a, const Labeling& b);

} // namespace tuq
