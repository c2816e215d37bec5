/// @file  uncertainty.hpp
/// @brief Distance statistics of an ensemble, the triplet uncertainty
///        pi_ijl = Phi((rho_il - rho_ij) / (sigma_il + sigma_ij)), and the
///        applications built on it: abstaining prediction, folded average
///        uncertainty, dimension scanning, and uncertain-batch selection.

#pragma once

#include "tuq/embedding.hpp"
#include "tuq/ensemble.hpp"
#include "tuq/errors.hpp"
#include "tuq/triplets.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tuq {

/// Entry-wise mean and sample standard deviation (divisor b - 1) of the
/// members' Euclidean distance matrices.
struct DistanceStats {
    Eigen::MatrixXd rho_bar;
    Eigen::MatrixXd sigma_bar;

    int n() const { return static_cast<int>(rho_bar.rows()); }
};

/// Per-point mean and d x d sample covariance across members.
struct PointStats {
    Eigen::MatrixXd means;                  ///< n x d
    std::vector<Eigen::MatrixXd> covariances; ///< n matrices, d x d
};

enum class Verdict { CloserJ, CloserL, Abstain };

struct Prediction {
    Verdict verdict = Verdict::Abstain;
    double pi = 0.5;
};

/// An unordered comparison {i, (j, l)}: the question "is i closer to j or
/// to l", stored with j < l.
struct Comparison {
    int i = 0;
    int j = 0;
    int l = 0;

    bool operator==(const Comparison&) const = default;
};

DistanceStats distance_stats(const EmbeddingEnsemble& E);

/// Eq.-4 uncertainty. When sigma_il + sigma_ij < 1e-12 the limit is used:
/// 1 if rho_il > rho_ij, 0 if smaller, 0.5 if equal.
double triplet_uncertainty(const DistanceStats& stats, int i, int j, int l);

/// Throws NotAlignedError for an unaligned bootstrap ensemble.
PointStats point_stats(const EmbeddingEnsemble& E);

/// Predicts the comparison orientation unless pi lands in [1 - t, t].
Prediction predict_with_abstention(const DistanceStats& stats, int i, int j, int l, double t);

/// Mean of min(pi, 1 - pi) over all n(n-1)(n-2)/2 comparisons; 0 = fully
/// certain, 0.5 = fully uncertain.
double folded_average_uncertainty(const DistanceStats& stats);

/// Mean of pi over the true orientations; near 1 = certain and correct.
double true_triplet_average_uncertainty(const DistanceStats& stats, const TripletSet& truth);

/// Ensemble construction recipe shared by the scanning and experiment code.
struct EnsembleMethod {
    enum class Kind { Bootstrap, Bayesian };
    Kind kind = Kind::Bootstrap;
    LossSpec loss = LossSpec::ste();
    int replicas = 20;      ///< bootstrap b
    double subsample = 0.4; ///< bootstrap r
    PriorSpec prior{15.0};
    int samples = 500;      ///< Bayesian chain length
    int thinning = 1;

    static EnsembleMethod bootstrap(const LossSpec& spec, int b = 20, double r = 0.4);
    static EnsembleMethod bayesian(const LossSpec& spec, const PriorSpec& prior = PriorSpec{15.0},
                                   int samples = 500, int thinning = 1);
    std::string name() const { return kind == Kind::Bootstrap ? "bootstrap" : "bayesian"; }
};

EmbeddingEnsemble build_ensemble(const EnsembleMethod& method, const TripletSet& S, int d,
                                 const OptimizerConfig& cfg, Rng& rng);

struct DimensionScanRow {
    int dim = 0;
    double folded_uncertainty = 0.0;
};

struct DimensionScanResult {
    std::vector<DimensionScanRow> rows;
    int best_dim = 0; ///< argmin of folded uncertainty, ties to the smaller dim
};

/// Builds the configured ensemble per candidate dimension and reports the
/// folded average uncertainty of each.
DimensionScanResult dimension_scan(const TripletSet& S, const std::vector<int>& dims,
                                   const EnsembleMethod& method, const OptimizerConfig& cfg,
                                   Rng& rng);

/// The k distinct comparisons with smallest (pi - 0.5)^2; complementary
/// orientations rank once. Ties break lexicographically on (i, j, l).
std::vector<Comparison> select_uncertain_batch(const DistanceStats& stats, std::size_t k);

/// Uncertainty report JSON: flattened row-major rho_bar / sigma_bar, point
/// means and covariances, the folded average, and an optional scan table.
void write_uncertainty_report(const std::string& path, const DistanceStats& stats,
                              const PointStats& points, double folded_average,
                              const DimensionScanResult* scan = nullptr);

} // namespace tuq
