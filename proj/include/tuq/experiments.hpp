/// @file  experiments.hpp
/// @brief Experiment pipelines: calibration sweeps over noise and triplet
///        count, the prediction trade-off grid, the dimension experiment,
///        the psychophysics study driver, and the active-vs-random query
///        loop. Every runner is a pure function of (config, master seed).

#pragma once

#include "tuq/datasets.hpp"
#include "tuq/embedding.hpp"
#include "tuq/eval.hpp"
#include "tuq/psychophysics.hpp"
#include "tuq/rng.hpp"
#include "tuq/uncertainty.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tuq {

enum class SweepKind { Noise, TripletFraction };

struct ExperimentConfig {
    int n = 50;
    int dim = 2;
    LossSpec loss = LossSpec::ste();
    EnsembleMethod method = EnsembleMethod::bootstrap(LossSpec::ste());
    double sigma = 0.0;
    int repetitions = 5;
    std::uint64_t seed = 1;
    OptimizerConfig opt;        ///< top-level maximum-likelihood embeds
    OptimizerConfig member_opt; ///< bootstrap replica embeds (single restart)

    // calibration sweeps
    std::vector<double> noise_grid{0.0, 0.15, 0.3, 0.6, 1.2};
    std::vector<double> fraction_grid{0.005, 0.02, 0.05, 0.15};
    double noise_sweep_fraction = 0.01; ///< triplet fraction held fixed in the noise sweep

    // prediction grid
    std::vector<double> thresholds{0.55, 0.65, 0.75, 0.85, 0.95};
    std::vector<double> count_fractions{0.01, 0.05, 0.15};

    // dimension experiment
    std::vector<int> dims{1, 2, 3, 4, 5, 6};
    int d_true = 3;
    double dim_fraction = 0.2;
    double dim_sigma = 0.1;
    std::string features_csv;           ///< optional external features
    std::optional<int> label_column;

    ExperimentConfig() { member_opt.restarts = 1; }

    void validate() const;
};

struct CalibrationRow {
    double sweep_value = 0.0;
    std::vector<double> procrustes;  ///< one entry per repetition
    std::vector<double> uncertainty; ///< folded true-triplet average per repetition

    double mean_procrustes() const;
    double std_procrustes() const;
    double mean_uncertainty() const;
    double std_uncertainty() const;
};

struct CalibrationResult {
    SweepKind kind = SweepKind::Noise;
    std::vector<CalibrationRow> rows;
    Eigen::MatrixXd points; ///< the fixed ground-truth point set
};

/// Per grid value and repetition: draws triplets on the fixed point set,
/// embeds, builds the configured ensemble, and records the scale-invariant
/// Procrustes distance to ground truth and the folded true-triplet
/// uncertainty. Noise sweep: fraction fixed, sigma varies. Fraction
/// sweep: sigma = 0.
CalibrationResult run_calibration_sweep(const ExperimentConfig& cfg, SweepKind kind);

struct PredictionCell {
    double count_fraction = 0.0;
    double threshold = 0.0;
    int rep = 0;
    double error = 0.0;
    double abstention = 0.0;
};

struct PredictionGridResult {
    std::vector<double> thresholds;
    std::vector<double> count_fractions;
    std::vector<PredictionCell> cells; ///< full factorial, rep-major order
};

/// Full factorial abstaining prediction against all true triplets.
PredictionGridResult run_prediction_grid(const ExperimentConfig& cfg);

struct DimensionRow {
    int dim = 0;
    double ste_loss = 0.0;           ///< training loss of the embedding at this dim
    double folded_uncertainty = 0.0; ///< ensemble folded average
};

struct DimensionResult {
    std::vector<DimensionRow> rows;
    int best_dim = 0;
    // full uncertainty report at the selected dimension
    DistanceStats best_stats;
    PointStats best_points;
    double best_folded = 0.0;
};

/// Projects the source data to d_true, draws the noisy training set, and
/// scans the candidate dimensions. The per-dimension training loss is the
/// best of fresh restarts and a warm start padded from the previous
/// dimension, so it is non-increasing by construction.
DimensionResult run_dimension_experiment(const ExperimentConfig& cfg);

enum class SelectionPolicy { Uncertainty, Random };

struct ActiveLoopConfig {
    int seed_triplets = 2000;
    int batch = 1000;
    int budget = 10000;
    double sigma = 0.1;
    int n = 200;
    int dim = 5;
    LossSpec loss = LossSpec::ste();
    EnsembleMethod method = EnsembleMethod::bootstrap(LossSpec::ste());
    OptimizerConfig opt;
    OptimizerConfig member_opt;
    std::uint64_t seed = 1;
    int knn_k = 5;
    int graph_k = 10;
    int n_clusters = 6;
    double separation = 8.0; ///< cluster separation of the synthetic stand-in

    ActiveLoopConfig() { member_opt.restarts = 1; }

    void validate() const;
    int rounds() const { return (budget - seed_triplets) / batch; }
};

struct ActiveStepRecord {
    int round = 0;
    std::size_t total_triplets = 0;
    double triplet_error = 0.0; ///< fraction of true triplets violated by the embedding
    double knn_error = 0.0;
    double ari = 0.0;
};

struct ActiveLoopResult {
    std::vector<ActiveStepRecord> uncertainty;
    std::vector<ActiveStepRecord> random;
};

/// Labeled mixture of well-separated unit Gaussians, the synthetic
/// stand-in for the active-learning feature data.
PointSet sample_clustered_gaussians(int n, int n_clusters, int dim, double separation, Rng& rng);

/// Runs both policies from a shared seed set; per-round oracle, embedding
/// and clustering streams are paired between the policies.
ActiveLoopResult run_active_loop(const ActiveLoopConfig& cfg, const PointSet& data);

/// Output writers: plot-ready CSV tables plus a metadata JSON per
/// experiment directory, byte-deterministic for a fixed config.
void write_calibration_outputs(const std::string& dir, const CalibrationResult& result,
                               const ExperimentConfig& cfg);
void write_prediction_outputs(const std::string& dir, const PredictionGridResult& result,
                              const ExperimentConfig& cfg);
void write_dimension_outputs(const std::string& dir, const DimensionResult& result,
                             const ExperimentConfig& cfg);
void write_active_outputs(const std::string& dir, const std::vector<ActiveLoopResult>& results,
                          const ActiveLoopConfig& cfg);
void write_psycho_outputs(const std::string& dir, const std::vector<PsychoResult>& results,
                          const PsychoConfig& cfg);

} // namespace tuq
