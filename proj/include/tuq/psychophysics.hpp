/// @file  psychophysics.hpp
/// @brief Simulated perception study: observers drawn from a Gaussian
///        process pinned to 0 at stimulus 0 and 1 at stimulus 1, their
///        noiseless triplet answers, and the 1-D bootstrap embedding with
///        per-stimulus uncertainty.

#pragma once

#include "tuq/embedding.hpp"
#include "tuq/errors.hpp"
#include "tuq/rng.hpp"
#include "tuq/triplets.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tuq {

/// GP over perception functions: logistic mean
/// m(x) = 1 / (1 + exp(-25 (x - 0.5))), squared-exponential kernel
/// k(x, x') = exp(-(x - x')^2 / (2 l^2)), conditioned on the exact values
/// 0 at input 0 and 1 at input 1.
struct GpSpec {
    double lengthscale = 1.0;

    explicit GpSpec(double l = 1.0) : lengthscale(l) {
        if (!(lengthscale > 0.0)) throw InvalidArgumentError("GpSpec: lengthscale must be > 0");
    }

    double mean(double x) const;
    double kernel(double a, double b) const;
};

/// A perception function tabulated on the stimulus grid; the endpoint
/// values equal the conditioning targets 0 and 1 exactly.
using PerceptionFunction = Eigen::VectorXd;

/// n_stimuli equally spaced values covering [0, 1] inclusively.
Eigen::VectorXd stimulus_grid(int n_stimuli);

/// Independent draws from the conditioned GP at the grid. The interior
/// block is sampled through a jittered Cholesky factor (jitter starts at
/// 1e-10, escalating tenfold to at most 1e-6 before CholeskyError); grid
/// points coinciding with conditioning inputs are deterministic.
std::vector<PerceptionFunction> sample_perception_functions(const GpSpec& spec,
                                                            const Eigen::VectorXd& grid,
                                                            int n_observers, Rng& rng);

/// `count` comparisons of stimulus indices, drawn uniformly with
/// replacement, each answered noiselessly by the perceived distances
/// |f_i - f_j| vs |f_i - f_l|. Exact ties are re-drawn.
TripletSet observer_triplets(const PerceptionFunction& f, std::size_t count, Rng& rng);

struct PsychoConfig {
    int n_stimuli = 20;
    int n_observers = 50;
    int triplets_per_observer = 100;
    int replicas = 50;      ///< bootstrap b
    double subsample = 0.1; ///< bootstrap r
    LossSpec loss = LossSpec::ste();
    OptimizerConfig opt;
};

struct PsychoResult {
    Eigen::VectorXd stimuli;
    Eigen::VectorXd mean;   ///< per-stimulus mean embedded position
    Eigen::VectorXd stddev; ///< per-stimulus standard deviation across members
    double lengthscale = 0.0;
    std::uint64_t seed = 0;
};

/// Pools all observers' triplets, embeds them in 1-D with a bootstrap
/// ensemble, rescales every member affinely so that stimulus 0 maps to 0
/// and stimulus 1 maps to 1 (fixing scale, shift and reflection), and
/// reports per-stimulus means and standard deviations.
PsychoResult run_psycho_experiment(const GpSpec& spec, const PsychoConfig& cfg, Rng& rng);

} // namespace tuq
