#include "tuq/experiments.hpp"

#include "tuq/ensemble.hpp"
#include "tuq/io.hpp"
#include "tuq/math_util.hpp"
#include "tuq/triplets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace tuq {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double fold(double average) { return std::min(average, 1.0 - average); }

/// Bootstrap replicas embed once each; the Bayesian chain keeps the full
/// restart budget for its maximum-likelihood start.
const OptimizerConfig& ensemble_opt(const EnsembleMethod& method, const OptimizerConfig& opt,
                                    const OptimizerConfig& member_opt) {
    return method.kind == EnsembleMethod::Kind::Bootstrap ? member_opt : opt;
}

} // namespace

double CalibrationRow::mean_procrustes() const { return mean_of(procrustes); }
double CalibrationRow::std_procrustes() const { return std_of(procrustes); }
double CalibrationRow::mean_uncertainty() const { return mean_of(uncertainty); }
double CalibrationRow::std_uncertainty() const { return std_of(uncertainty); }

void ExperimentConfig::validate() const {
    if (n < 3) throw ConfigError("ExperimentConfig: n must be >= 3");
    if (dim < 1) throw ConfigError("ExperimentConfig: dim must be >= 1");
    if (repetitions < 1) throw ConfigError("ExperimentConfig: repetitions must be >= 1");
    if (noise_grid.empty() || fraction_grid.empty() || thresholds.empty() ||
        count_fractions.empty() || dims.empty())
        throw ConfigError("ExperimentConfig: sweep grids must be non-empty");
    if (!(noise_sweep_fraction > 0.0 && noise_sweep_fraction <= 1.0))
        throw ConfigError("ExperimentConfig: noise_sweep_fraction must be in (0, 1]");
    opt.validate();
    member_opt.validate();
    loss.validate();
}

CalibrationResult run_calibration_sweep(const ExperimentConfig& cfg, SweepKind kind) {
    cfg.validate();
    Rng master(cfg.seed);
    Rng point_rng = master.spawn();
    const PointSet ground_truth = sample_mixture(paper_gaussian_mixture(), cfg.n, point_rng);
    const TripletSet truth = all_true_triplets(ground_truth.points);
    const auto total = static_cast<double>(truth.size());

    const std::vector<double>& grid =
        kind == SweepKind::Noise ? cfg.noise_grid : cfg.fraction_grid;

    CalibrationResult result;
    result.kind = kind;
    result.points = ground_truth.points;
    result.rows.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) result.rows[g].sweep_value = grid[g];

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            Rng cell = master.spawn();
            const double sigma = kind == SweepKind::Noise ? grid[g] : 0.0;
            const double fraction =
                kind == SweepKind::Noise ? cfg.noise_sweep_fraction : grid[g];
            const auto count = static_cast<std::size_t>(std::floor(fraction * total));

            const TripletSet S =
                sample_noisy_triplets(ground_truth.points, count, NoiseModel(sigma), cell);
            const EmbedResult ml = embed(S, cfg.dim, cfg.loss, cfg.opt, cell);
            result.rows[g].procrustes.push_back(
                procrustes_distance_scaled(ml.coords, ground_truth.points));

            const EmbeddingEnsemble E = build_ensemble(
                cfg.method, S, cfg.dim, ensemble_opt(cfg.method, cfg.opt, cfg.member_opt), cell);
            const DistanceStats stats = distance_stats(E);
            result.rows[g].uncertainty.push_back(
                fold(true_triplet_average_uncertainty(stats, truth)));
        }
    }
    return result;
}

PredictionGridResult run_prediction_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    for (double t : cfg.thresholds)
        if (!(t > 0.5 && t <= 1.0))
            throw ConfigError("run_prediction_grid: thresholds must lie in (0.5, 1]");

    Rng master(cfg.seed);
    Rng point_rng = master.spawn();
    const PointSet ground_truth = sample_mixture(paper_gaussian_mixture(), cfg.n, point_rng);
    const TripletSet truth = all_true_triplets(ground_truth.points);
    const auto total = static_cast<double>(truth.size());

    PredictionGridResult result;
    result.thresholds = cfg.thresholds;
    result.count_fractions = cfg.count_fractions;

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        for (double fraction : cfg.count_fractions) {
            Rng cell = master.spawn();
            const auto count = static_cast<std::size_t>(std::floor(fraction * total));
            const TripletSet S =
                sample_noisy_triplets(ground_truth.points, count, NoiseModel(cfg.sigma), cell);
            const EmbeddingEnsemble E = build_ensemble(
                cfg.method, S, cfg.dim, ensemble_opt(cfg.method, cfg.opt, cfg.member_opt), cell);
            const DistanceStats stats = distance_stats(E);
            for (double t : cfg.thresholds) {
                const PredictionOutcome outcome = evaluate_predictions(stats, truth, t);
                result.cells.push_back(
                    {fraction, t, rep, outcome.error, outcome.abstention_rate});
            }
        }
    }
    return result;
}

namespace {

/// Pads an embedding with one zero column; distances are unchanged, so a
/// descent from the padded start can only improve on the lower dimension.
Embedding pad_column(const Embedding& X) {
    Embedding out = Embedding::Zero(X.rows(), X.cols() + 1);
    out.leftCols(X.cols()) = X;
    return out;
}

} // namespace

DimensionResult run_dimension_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Rng master(cfg.seed);

    // source data of intrinsic dimension d_true
    Eigen::MatrixXd raw;
    std::vector<int> labels;
    if (!cfg.features_csv.empty()) {
        FeatureData data = read_features(cfg.features_csv, cfg.label_column);
        raw = std::move(data.features);
        labels = std::move(data.labels);
    } else {
        Rng raw_rng = master.spawn();
        const int raw_rows = std::max(200, 4 * cfg.n);
        const int raw_cols = std::max(8, cfg.d_true + 3);
        raw.resize(raw_rows, raw_cols);
        for (int r = 0; r < raw_rows; ++r)
            for (int c = 0; c < raw_cols; ++c)
                raw(r, c) = (1.0 + 0.5 * c) * raw_rng.normal();
    }
    const PointSet projected = pca_project(raw, cfg.d_true);

    Rng pick_rng = master.spawn();
    if (projected.n() < cfg.n)
        throw ConfigError("run_dimension_experiment: fewer source rows than n");
    Eigen::MatrixXd X_star(cfg.n, cfg.d_true);
    {
        // sample n rows without replacement
        std::vector<int> idx(projected.n());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
        for (int k = 0; k < cfg.n; ++k) {
            const std::size_t pick = k + pick_rng.integer(idx.size() - k);
            std::swap(idx[k], idx[pick]);
            X_star.row(k) = projected.points.row(idx[k]);
        }
    }

    Rng triplet_rng = master.spawn();
    const TripletSet S = sample_noisy_triplets_fraction(X_star, cfg.dim_fraction,
                                                        NoiseModel(cfg.dim_sigma), triplet_rng);

    DimensionResult result;
    result.rows.reserve(cfg.dims.size());
    Embedding previous;
    for (int d : cfg.dims) {
        Rng embed_rng = master.spawn();
        EmbedResult best = embed(S, d, cfg.loss, cfg.opt, embed_rng);
        if (previous.size() > 0 && previous.cols() + 1 == d) {
            EmbedResult warm = embed_from(pad_column(previous), S, cfg.loss, cfg.opt);
            if (warm.loss < best.loss) best = std::move(warm);
        }
        previous = best.coords;

        Rng ens_rng = master.spawn();
        const EmbeddingEnsemble E = build_ensemble(
            cfg.method, S, d, ensemble_opt(cfg.method, cfg.opt, cfg.member_opt), ens_rng);
        const double folded = folded_average_uncertainty(distance_stats(E));
        result.rows.push_back({d, best.loss, folded});
    }

    result.best_dim = result.rows.front().dim;
    double best_u = result.rows.front().folded_uncertainty;
    for (const DimensionRow& row : result.rows) {
        if (row.folded_uncertainty < best_u) {
            best_u = row.folded_uncertainty;
            result.best_dim = row.dim;
        }
    }

    // the report consumed downstream: stats at the selected dimension
    Rng report_rng = master.spawn();
    const EmbeddingEnsemble best = build_ensemble(
        cfg.method, S, result.best_dim, ensemble_opt(cfg.method, cfg.opt, cfg.member_opt),
        report_rng);
    result.best_stats = distance_stats(best);
    result.best_points = point_stats(best);
    result.best_folded = folded_average_uncertainty(result.best_stats);
    return result;
}

void ActiveLoopConfig::validate() const {
    if (seed_triplets < 1 || batch < 1 || budget < seed_triplets)
        throw ConfigError("ActiveLoopConfig: need 1 <= seed_triplets <= budget and batch >= 1");
    if (n < 3 || dim < 1) throw ConfigError("ActiveLoopConfig: invalid n or dim");
    if (n_clusters < 2 || knn_k < 1 || graph_k < 1)
        throw ConfigError("ActiveLoopConfig: invalid evaluation parameters");
    opt.validate();
    member_opt.validate();
    loss.validate();
}

PointSet sample_clustered_gaussians(int n, int n_clusters, int dim, double separation,
                                    Rng& rng) {
    if (n_clusters < 1 || dim < 1 || n < 1)
        throw InvalidArgumentError("sample_clustered_gaussians: invalid shape");
    MixtureSpec spec;
    for (int c = 0; c < n_clusters; ++c) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
        if (c < dim) {
            mean(c) = separation;
        } else {
            // extra clusters sit on scaled all-ones diagonals
            const double s = separation * (1.0 + static_cast<double>(c - dim));
            mean.setConstant(s / std::sqrt(static_cast<double>(dim)));
        }
        spec.means.push_back(mean);
        spec.covariances.push_back(Eigen::MatrixXd::Identity(dim, dim));
    }
    spec.weights = Eigen::VectorXd::Constant(n_clusters, 1.0 / n_clusters);
    return sample_mixture(spec, n, rng);
}

ActiveLoopResult run_active_loop(const ActiveLoopConfig& cfg, const PointSet& data) {
    cfg.validate();
    if (!data.has_labels())
        throw InvalidArgumentError("run_active_loop: dataset must carry labels");
    if (data.n() != cfg.n)
        throw InvalidArgumentError("run_active_loop: dataset size does not match cfg.n");

    const Eigen::MatrixXd D_true = pairwise_distances(data.points);
    const TripletSet truth = all_true_triplets(data.points);
    const NoiseModel noise(cfg.sigma);
    const int rounds = cfg.rounds();

    Rng master(cfg.seed);
    Rng seed_rng = master.spawn();
    const TripletSet S0 = sample_noisy_triplets(data.points, cfg.seed_triplets, noise, seed_rng);

    // per-round streams, paired across the two policies
    std::vector<std::uint64_t> oracle_seeds, embed_seeds, cluster_seeds, ensemble_seeds;
    for (int r = 0; r < rounds; ++r) {
        oracle_seeds.push_back(master.bits());
        embed_seeds.push_back(master.bits());
        cluster_seeds.push_back(master.bits());
        ensemble_seeds.push_back(master.bits());
    }
    const std::uint64_t random_policy_seed = master.bits();

    const auto evaluate = [&](const Embedding& X, int round, std::size_t total,
                              std::uint64_t cluster_seed) {
        ActiveStepRecord rec;
        rec.round = round;
        rec.total_triplets = total;
        rec.triplet_error = 1.0 - agreement_fraction(truth, pairwise_distances(X));
        rec.knn_error = knn_error(X, data.labels, cfg.knn_k);
        Rng cluster_rng(cluster_seed);
        const Labeling clusters =
            spectral_clustering(X, cfg.n_clusters, cfg.graph_k, cluster_rng);
        rec.ari = adjusted_rand_index(clusters, data.labels);
        return rec;
    };

    const auto answer_batch = [&](const std::vector<Comparison>& batch, TripletSet& S,
                                  Rng& oracle) {
        for (const Comparison& c : batch) {
            const Orientation o =
                answer_comparison(D_true(c.i, c.j), D_true(c.i, c.l), noise, oracle);
            S.answers.push_back(o == Orientation::JCloser ? Triplet{c.i, c.j, c.l}
                                                          : Triplet{c.i, c.l, c.j});
        }
    };

    ActiveLoopResult result;

    // uncertainty policy
    {
        TripletSet S = S0;
        for (int r = 0; r < rounds; ++r) {
            Rng ens_rng(ensemble_seeds[r]);
            const EmbeddingEnsemble E = build_ensemble(
                cfg.method, S, cfg.dim, ensemble_opt(cfg.method, cfg.opt, cfg.member_opt),
                ens_rng);
            const DistanceStats stats = distance_stats(E);
            const std::vector<Comparison> batch =
                select_uncertain_batch(stats, static_cast<std::size_t>(cfg.batch));

            Rng oracle(oracle_seeds[r]);
            answer_batch(batch, S, oracle);

            Rng embed_rng(embed_seeds[r]);
            const EmbedResult ml = embed(S, cfg.dim, cfg.loss, cfg.opt, embed_rng);
            result.uncertainty.push_back(
                evaluate(ml.coords, r + 1, S.size(), cluster_seeds[r]));
        }
    }

    // random policy
    {
        TripletSet S = S0;
        Rng select_rng(random_policy_seed);
        for (int r = 0; r < rounds; ++r) {
            std::vector<Comparison> batch;
            batch.reserve(cfg.batch);
            for (int k = 0; k < cfg.batch; ++k) {
                const int i = static_cast<int>(select_rng.integer(cfg.n));
                int j = static_cast<int>(select_rng.integer(cfg.n - 1));
                if (j >= i) ++j;
                int l = static_cast<int>(select_rng.integer(cfg.n - 2));
                if (l >= std::min(i, j)) ++l;
                if (l >= std::max(i, j)) ++l;
                batch.push_back({i, std::min(j, l), std::max(j, l)});
            }

            Rng oracle(oracle_seeds[r]);
            answer_batch(batch, S, oracle);

            Rng embed_rng(embed_seeds[r]);
            const EmbedResult ml = embed(S, cfg.dim, cfg.loss, cfg.opt, embed_rng);
            result.random.push_back(evaluate(ml.coords, r + 1, S.size(), cluster_seeds[r]));
        }
    }
    return result;
}

namespace {

nlohmann::ordered_json optimizer_json(const OptimizerConfig& opt) {
    return {{"max_iters", opt.max_iters},     {"step_size", opt.step_size},
            {"backtrack", opt.backtrack},     {"tolerance", opt.tolerance},
            {"restarts", opt.restarts},       {"init_scale", opt.init_scale}};
}

nlohmann::ordered_json method_json(const EnsembleMethod& method) {
    nlohmann::ordered_json j;
    j["kind"] = method.name();
    j["loss"] = method.loss.name();
    if (method.kind == EnsembleMethod::Kind::Bootstrap) {
        j["b"] = method.replicas;
        j["r"] = method.subsample;
    } else {
        j["prior_scale"] = method.prior.scale;
        j["samples"] = method.samples;
        j["thinning"] = method.thinning;
    }
    return j;
}

void write_metadata(const std::string& dir, const std::string& experiment,
                    nlohmann::ordered_json body) {
    body["experiment"] = experiment;
    std::ofstream out(std::filesystem::path(dir) / "metadata.json");
    if (!out) throw Error("write_metadata: cannot open " + dir + "/metadata.json");
    out << body.dump(2) << "\n";
}

nlohmann::ordered_json common_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["n"] = cfg.n;
    j["dim"] = cfg.dim;
    j["loss"] = cfg.loss.name();
    j["method"] = method_json(cfg.method);
    j["sigma"] = cfg.sigma;
    j["repetitions"] = cfg.repetitions;
    j["seed"] = cfg.seed;
    j["optimizer"] = optimizer_json(cfg.opt);
    j["member_optimizer"] = optimizer_json(cfg.member_opt);
    return j;
}

} // namespace

void write_calibration_outputs(const std::string& dir, const CalibrationResult& result,
                               const ExperimentConfig& cfg) {
    ensure_directory(dir);
    const bool noise = result.kind == SweepKind::Noise;
    const std::string stem = noise ? "calibration_noise" : "calibration_triplets";
    const std::string sweep_col = noise ? "sigma" : "triplet_fraction";

    std::vector<std::vector<std::string>> rows;
    for (const CalibrationRow& row : result.rows)
        rows.push_back({format_double(row.sweep_value), format_double(row.mean_procrustes()),
                        format_double(row.std_procrustes()),
                        format_double(row.mean_uncertainty()),
                        format_double(row.std_uncertainty())});
    write_csv((std::filesystem::path(dir) / (stem + ".csv")).string(),
              {sweep_col, "mean_procrustes", "std_procrustes", "mean_uncertainty",
               "std_uncertainty"},
              rows);

    std::vector<std::vector<std::string>> reps;
    for (const CalibrationRow& row : result.rows)
        for (std::size_t rep = 0; rep < row.procrustes.size(); ++rep)
            reps.push_back({format_double(row.sweep_value), std::to_string(rep),
                            format_double(row.procrustes[rep]),
                            format_double(row.uncertainty[rep])});
    write_csv((std::filesystem::path(dir) / (stem + "_reps.csv")).string(),
              {sweep_col, "rep", "procrustes", "uncertainty"}, reps);

    nlohmann::ordered_json meta = common_json(cfg);
    meta["sweep"] = sweep_col;
    meta["grid"] = noise ? cfg.noise_grid : cfg.fraction_grid;
    if (noise) meta["triplet_fraction"] = cfg.noise_sweep_fraction;
    write_metadata(dir, stem, std::move(meta));
}

void write_prediction_outputs(const std::string& dir, const PredictionGridResult& result,
                              const ExperimentConfig& cfg) {
    ensure_directory(dir);
    std::vector<std::vector<std::string>> rows;
    for (const PredictionCell& cell : result.cells)
        rows.push_back({format_double(cell.count_fraction), format_double(cell.threshold),
                        std::to_string(cell.rep), format_double(cell.error),
                        format_double(cell.abstention)});
    write_csv((std::filesystem::path(dir) / "prediction_grid.csv").string(),
              {"triplet_fraction", "threshold", "rep", "error", "abstention"}, rows);

    nlohmann::ordered_json meta = common_json(cfg);
    meta["thresholds"] = cfg.thresholds;
    meta["count_fractions"] = cfg.count_fractions;
    write_metadata(dir, "prediction_grid", std::move(meta));
}

void write_dimension_outputs(const std::string& dir, const DimensionResult& result,
                             const ExperimentConfig& cfg) {
    ensure_directory(dir);
    std::vector<std::vector<std::string>> rows;
    for (const DimensionRow& row : result.rows)
        rows.push_back({std::to_string(row.dim), format_double(row.ste_loss),
                        format_double(row.folded_uncertainty)});
    write_csv((std::filesystem::path(dir) / "dimension_scan.csv").string(),
              {"dim", "training_loss", "folded_uncertainty"}, rows);

    DimensionScanResult table;
    table.best_dim = result.best_dim;
    for (const DimensionRow& row : result.rows)
        table.rows.push_back({row.dim, row.folded_uncertainty});
    write_uncertainty_report((std::filesystem::path(dir) / "uncertainty_report.json").string(),
                             result.best_stats, result.best_points, result.best_folded, &table);

    nlohmann::ordered_json meta = common_json(cfg);
    meta["dims"] = cfg.dims;
    meta["d_true"] = cfg.d_true;
    meta["dim_fraction"] = cfg.dim_fraction;
    meta["dim_sigma"] = cfg.dim_sigma;
    meta["best_dim"] = result.best_dim;
    if (!cfg.features_csv.empty()) meta["features_csv"] = cfg.features_csv;
    write_metadata(dir, "dimension_scan", std::move(meta));
}

void write_active_outputs(const std::string& dir, const std::vector<ActiveLoopResult>& results,
                          const ActiveLoopConfig& cfg) {
    ensure_directory(dir);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t rep = 0; rep < results.size(); ++rep) {
        const auto emit = [&](const char* policy, const std::vector<ActiveStepRecord>& steps) {
            for (const ActiveStepRecord& rec : steps)
                rows.push_back({std::to_string(rep), policy, std::to_string(rec.round),
                                std::to_string(rec.total_triplets),
                                format_double(rec.triplet_error), format_double(rec.knn_error),
                                format_double(rec.ari)});
        };
        emit("uncertainty", results[rep].uncertainty);
        emit("random", results[rep].random);
    }
    write_csv((std::filesystem::path(dir) / "active_loop.csv").string(),
              {"rep", "policy", "round", "total_triplets", "triplet_error", "knn_error", "ari"},
              rows);

    nlohmann::ordered_json meta;
    meta["seed_triplets"] = cfg.seed_triplets;
    meta["batch"] = cfg.batch;
    meta["budget"] = cfg.budget;
    meta["rounds"] = cfg.rounds();
    meta["sigma"] = cfg.sigma;
    meta["n"] = cfg.n;
    meta["dim"] = cfg.dim;
    meta["loss"] = cfg.loss.name();
    meta["method"] = method_json(cfg.method);
    meta["seed"] = cfg.seed;
    meta["knn_k"] = cfg.knn_k;
    meta["graph_k"] = cfg.graph_k;
    meta["n_clusters"] = cfg.n_clusters;
    meta["separation"] = cfg.separation;
    meta["optimizer"] = optimizer_json(cfg.opt);
    meta["member_optimizer"] = optimizer_json(cfg.member_opt);
    write_metadata(dir, "active_loop", std::move(meta));
}

void write_psycho_outputs(const std::string& dir, const std::vector<PsychoResult>& results,
                          const PsychoConfig& cfg) {
    ensure_directory(dir);
    std::vector<std::vector<std::string>> rows;
    for (const PsychoResult& result : results)
        for (Eigen::Index s = 0; s < result.stimuli.size(); ++s)
            rows.push_back({format_double(result.stimuli(s)), format_double(result.mean(s)),
                            format_double(result.stddev(s)),
                            format_double(result.lengthscale), std::to_string(result.seed)});
    write_csv((std::filesystem::path(dir) / "psychophysics.csv").string(),
              {"stimulus", "mean", "std", "lengthscale", "seed"}, rows);

    nlohmann::ordered_json meta;
    meta["n_stimuli"] = cfg.n_stimuli;
    meta["n_observers"] = cfg.n_observers;
    meta["triplets_per_observer"] = cfg.triplets_per_observer;
    meta["b"] = cfg.replicas;
    meta["r"] = cfg.subsample;
    meta["loss"] = cfg.loss.name();
    meta["optimizer"] = optimizer_json(cfg.opt);
    std::vector<double> lengthscales;
    for (const PsychoResult& result : results) lengthscales.push_back(result.lengthscale);
    meta["lengthscales"] = lengthscales;
    write_metadata(dir, "psychophysics", std::move(meta));
}

} // namespace tuq
