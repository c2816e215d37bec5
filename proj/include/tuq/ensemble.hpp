/// @file  ensemble.hpp
/// @brief Ensembles of comparable embeddings: triplet-subsampling bootstrap
///        with Procrustes alignment, and elliptical slice sampling from the
///        Gaussian-prior posterior over embeddings.

#pragma once

#include "tuq/embedding.hpp"
#include "tuq/errors.hpp"
#include "tuq/rng.hpp"
#include "tuq/triplets.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tuq {

enum class EnsembleSource { Bootstrap, Bayesian };

struct EmbeddingEnsemble {
    std::vector<Embedding> members; ///< b embeddings, shared (n, d)
    EnsembleSource source = EnsembleSource::Bootstrap;
    bool aligned = false;
    double subsample_fraction = 0.0;   ///< bootstrap r
    double prior_scale = 0.0;          ///< Bayesian prior variance per coordinate
    std::vector<double> align_scales;  ///< Procrustes scale per member (bootstrap)
    std::vector<std::uint64_t> seeds;  ///< per-member training/sampling seeds
    int reference = -1;                ///< bootstrap reference member index

    int size() const { return static_cast<int>(members.size()); }
    int n() const { return members.empty() ? 0 : static_cast<int>(members.front().rows()); }
    int dim() const { return members.empty() ? 0 : static_cast<int>(members.front().cols()); }

    /// Throws ShapeError unless all members share (n, d) and b >= 2.
    void validate() const;
};

/// Zero-mean Gaussian prior over the nd-vectorized embedding with
/// covariance scale * I (identical iid blocks per point).
struct PriorSpec {
    double scale = 15.0;

    PriorSpec() = default;
    explicit PriorSpec(double s) : scale(s) {
        if (!(scale > 0.0)) throw InvalidArgumentError("PriorSpec: scale must be > 0");
    }
};

struct ProcrustesAlignment {
    Embedding aligned;
    double scale = 1.0;
    Eigen::MatrixXd rotation; ///< orthogonal d x d (may include a reflection)
};

/// Centers both embeddings, finds the orthogonal map and positive scale
/// minimizing ||s * X * U - X_ref||_F^2, and re-centers the result onto
/// X_ref's centroid. Throws DegenerateError on a zero-norm input.
ProcrustesAlignment procrustes_align_full(const Embedding& X, const Embedding& X_ref);
Embedding procrustes_align(const Embedding& X, const Embedding& X_ref);

/// Trains b embeddings on independent without-replacement subsamples of
/// floor(r * |S|) triplets, then Procrustes-aligns every member to a
/// randomly selected reference member.
EmbeddingEnsemble bootstrap_ensemble(const TripletSet& S, int d, const LossSpec& spec,
                                     int b, double r, const OptimizerConfig& cfg, Rng& rng);

using LogLikelihood = std::function<double(const Eigen::VectorXd&)>;

struct EssStepResult {
    Eigen::VectorXd state;
    double log_lik = 0.0;
    double threshold = 0.0; ///< slice level the accepted state exceeds
    int proposals = 0;
};

/// One elliptical-slice-sampling transition for the prior N(0, scale * I):
/// draws nu from the prior, a slice threshold log y = log_lik(x) + log u,
/// and an angle theta ~ U(0, 2pi) with bracket [theta - 2pi, theta];
/// proposes x' = x cos(theta) + nu sin(theta), shrinking the bracket side
/// containing theta toward 0 until log_lik(x') > log y.
/// Throws NonTerminationError after 1000 shrink iterations.
EssStepResult ess_step(const Eigen::VectorXd& x, double log_lik_x,
                       const LogLikelihood& log_lik, const PriorSpec& prior, Rng& rng);

/// Samples n_samples embeddings from the posterior prior x likelihood via
/// ESS. The chain starts at (and emits) the maximum-likelihood embedding;
/// no burn-in is discarded. States are mean-centered after every step.
/// Members are comparable through the shared model, so no Procrustes
/// alignment is applied unless align_members is set.
EmbeddingEnsemble bayesian_ensemble(const TripletSet& S, int d, const LossSpec& spec,
                                    const PriorSpec& prior, int n_samples, int thinning,
                                    const OptimizerConfig& cfg, Rng& rng,
                                    bool align_members = false);

/// Ensemble archive: a directory holding member_<k>.csv plus ensemble.json
/// (source, b, r or prior scale, seeds, alignment scale factors).
void save_ensemble(const EmbeddingEnsemble& E, const std::string& dir);
EmbeddingEnsemble load_ensemble(const std::string& dir);

} // namespace tuq
