/// @file  embedding.hpp
/// @brief Triplet likelihoods and losses (STE, t-STE, Crowd Kernel,
///        GNMDS hinge) with analytic gradients, and a multi-restart
///        gradient-descent embedder.

#pragma once

#include "tuq/errors.hpp"
#include "tuq/rng.hpp"
#include "tuq/triplets.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace tuq {

using Embedding = Eigen::MatrixXd; ///< n x d coordinates

enum class LossKind { Ste, Tste, CrowdKernel, GnmdsHinge };

struct LossSpec {
    LossKind kind = LossKind::Ste;
    double alpha = 0.0;    ///< t-STE degrees of freedom; 0 = automatic (d - 1, at least 1)
    double mu = 0.05;      ///< Crowd Kernel regularizer
    double lambda = 0.01;  ///< GNMDS Frobenius regularization weight

    static LossSpec ste() { return {LossKind::Ste}; }
    static LossSpec tste(double alpha = 0.0) { return {LossKind::Tste, alpha}; }
    static LossSpec crowd_kernel(double mu = 0.05) { return {LossKind::CrowdKernel, 0.0, mu}; }
    static LossSpec gnmds_hinge(double lambda = 0.01) {
        return {LossKind::GnmdsHinge, 0.0, 0.05, lambda};
    }

    /// GNMDS has a loss but no probabilistic triplet model.
    bool probabilistic() const { return kind != LossKind::GnmdsHinge; }

    double resolved_alpha(int d) const {
        if (alpha > 0.0) return alpha;
        return std::max(1.0, static_cast<double>(d - 1));
    }

    std::string name() const;
    void validate() const;
};

LossSpec loss_spec_from_name(const std::string& name);

struct OptimizerConfig {
    int max_iters = 2000;
    double step_size = 1.0;     ///< initial line-search step
    double backtrack = 0.5;     ///< step shrink factor on Armijo failure
    double tolerance = 1e-7;    ///< relative loss-change stopping tolerance
    int restarts = 3;
    double init_scale = 0.1;    ///< std of the Gaussian initialization

    void validate() const;
};

/// Probability that the answer (i, j, l) is generated by embedding X under
/// the chosen likelihood model. Throws UnsupportedError for GnmdsHinge.
double triplet_probability(const LossSpec& spec, const Embedding& X, const Triplet& t);

/// Loss without the gradient; cheaper inside line searches and samplers.
double loss_value(const LossSpec& spec, const Embedding& X, const TripletSet& S);

struct LossGradient {
    double loss = 0.0;
    Eigen::MatrixXd grad; ///< n x d
};

/// Negative log-likelihood (probabilistic specs) or hinge-plus-Frobenius
/// loss (GnmdsHinge), with its exact analytic gradient.
LossGradient loss_and_gradient(const LossSpec& spec, const Embedding& X, const TripletSet& S);

struct EmbedResult {
    Embedding coords;
    double loss = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false; ///< final gradient norm <= 1e-3 * max(1, loss)
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(coords.rows()); }
    int dim() const { return static_cast<int>(coords.cols()); }
};

/// Minimizes the loss over cfg.restarts gradient descents with backtracking
/// line search, each started from an N(0, init_scale^2) draw; returns the
/// lowest-loss run. Deterministic given the rng state.
EmbedResult embed(const TripletSet& S, int d, const LossSpec& spec,
                  const OptimizerConfig& cfg, Rng& rng);

/// Single descent from a caller-supplied start; used for warm starts.
EmbedResult embed_from(const Embedding& X0, const TripletSet& S, const LossSpec& spec,
                       const OptimizerConfig& cfg);

/// Embedding file: CSV with one row per point (17 significant digits) plus
/// a JSON sidecar (same stem, .json) recording loss kind, final loss,
/// iterations, seed and the converged flag.
void write_embedding(const std::string& csv_path, const EmbedResult& result,
                     const LossSpec& spec);
EmbedResult read_embedding(const std::string& csv_path);

} // namespace tuq
