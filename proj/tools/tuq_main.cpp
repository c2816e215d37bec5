// tuq — batch CLI over the experiment pipelines. Each subcommand writes
// plot-ready CSV tables plus metadata JSON into --out.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "tuq/experiments.hpp"
#include "tuq/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

/// Expands `--config FILE` into flag tokens. The file is line-oriented
/// `key = value...` text mirroring the subcommand's flags; '#' starts a
/// comment. Keys that also appear as explicit flags are dropped, so flags
/// override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 >= args.size())
                throw tuq::ConfigError("--config requires a file path");
            config_path = args[++k];
        } else {
            rest.push_back(args[k]);
        }
    }
    if (config_path.empty()) return rest;

    std::ifstream in(config_path);
    if (!in) throw tuq::ConfigError("cannot open config file " + config_path);

    std::vector<std::string> expanded;
    if (!rest.empty()) expanded.push_back(rest.front()); // subcommand name
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw tuq::ConfigError(config_path + ":" + std::to_string(lineno) +
                                   ": expected \"key = value\"");
        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key.empty())
            throw tuq::ConfigError(config_path + ":" + std::to_string(lineno) + ": empty key");
        const std::string flag = "--" + key;
        if (std::find(rest.begin(), rest.end(), flag) != rest.end()) continue;

        expanded.push_back(flag);
        std::stringstream values(line.substr(eq + 1));
        std::string token;
        bool any = false;
        while (values >> token) {
            expanded.push_back(token);
            any = true;
        }
        if (!any)
            throw tuq::ConfigError(config_path + ":" + std::to_string(lineno) +
                                   ": no value for key \"" + key + "\"");
    }
    expanded.insert(expanded.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
    return expanded;
}

struct SharedFlags {
    std::string method = "bootstrap";
    std::string loss = "ste";
    int b = 20;
    double r = 0.4;
    int samples = 500;
    int thinning = 1;
    double prior_scale = 15.0;
    double sigma = 0.0;
    int dim = 2;
    std::uint64_t seed = 1;
    std::string out = "tuq_out";
    int reps = 5;
    int n = 50;
};

std::string config_placeholder; // consumed by expand_config before parsing

void add_shared_flags(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", config_placeholder,
                    "Read key = value defaults from a file; flags override");
    cmd->add_option("--method", flags.method, "Ensemble method: bootstrap|bayes")
        ->check(CLI::IsMember({"bootstrap", "bayes"}));
    cmd->add_option("--loss", flags.loss, "Triplet loss: ste|tste|ck|gnmds")
        ->check(CLI::IsMember({"ste", "tste", "ck", "gnmds"}));
    cmd->add_option("--b", flags.b, "Bootstrap replicas");
    cmd->add_option("--r", flags.r, "Bootstrap subsample fraction");
    cmd->add_option("--samples", flags.samples, "Bayesian posterior samples");
    cmd->add_option("--thinning", flags.thinning, "Bayesian chain thinning");
    cmd->add_option("--prior-scale", flags.prior_scale, "Bayesian prior variance per coordinate");
    cmd->add_option("--sigma", flags.sigma, "Log-normal triplet noise level");
    cmd->add_option("--dim", flags.dim, "Embedding dimension");
    cmd->add_option("--seed", flags.seed, "Master seed");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--reps", flags.reps, "Independent repetitions");
    cmd->add_option("--n", flags.n, "Point count");
}

tuq::EnsembleMethod make_method(const SharedFlags& flags) {
    const tuq::LossSpec loss = tuq::loss_spec_from_name(flags.loss);
    if (flags.method == "bayes")
        return tuq::EnsembleMethod::bayesian(loss, tuq::PriorSpec(flags.prior_scale),
                                             flags.samples, flags.thinning);
    return tuq::EnsembleMethod::bootstrap(loss, flags.b, flags.r);
}

tuq::ExperimentConfig make_config(const SharedFlags& flags) {
    tuq::ExperimentConfig cfg;
    cfg.n = flags.n;
    cfg.dim = flags.dim;
    cfg.loss = tuq::loss_spec_from_name(flags.loss);
    cfg.method = make_method(flags);
    cfg.sigma = flags.sigma;
    cfg.repetitions = flags.reps;
    cfg.seed = flags.seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ordinal embeddings with calibrated triplet and point uncertainty"};
    app.require_subcommand(1);

    SharedFlags flags;

    // calibrate-noise
    auto* calibrate_noise =
        app.add_subcommand("calibrate-noise", "Sweep the noise level at a fixed triplet fraction");
    std::vector<double> noise_grid{0.0, 0.15, 0.3, 0.6, 1.2};
    double noise_fraction = 0.01;
    add_shared_flags(calibrate_noise, flags);
    calibrate_noise->add_option("--noise-grid", noise_grid, "Sigma grid values");
    calibrate_noise->add_option("--fraction", noise_fraction, "Triplet fraction held fixed");

    // calibrate-triplets
    auto* calibrate_triplets =
        app.add_subcommand("calibrate-triplets", "Sweep the triplet fraction without noise");
    std::vector<double> fraction_grid{0.005, 0.02, 0.05, 0.15};
    add_shared_flags(calibrate_triplets, flags);
    calibrate_triplets->add_option("--fraction-grid", fraction_grid, "Triplet fraction grid");

    // predict-grid
    auto* predict_grid =
        app.add_subcommand("predict-grid", "Abstaining prediction over thresholds and counts");
    std::vector<double> thresholds{0.55, 0.65, 0.75, 0.85, 0.95};
    std::vector<double> count_fractions{0.01, 0.05, 0.15};
    add_shared_flags(predict_grid, flags);
    predict_grid->add_option("--thresholds", thresholds, "Abstention thresholds in (0.5, 1]");
    predict_grid->add_option("--counts", count_fractions, "Triplet fraction grid");

    // dimscan
    auto* dimscan = app.add_subcommand("dimscan", "Estimate the embedding dimension");
    std::vector<int> dims{1, 2, 3, 4, 5, 6};
    int d_true = 3;
    double dim_fraction = 0.2;
    std::string features_csv;
    int label_column = -1;
    add_shared_flags(dimscan, flags);
    dimscan->add_option("--dims", dims, "Candidate dimensions");
    dimscan->add_option("--d-true", d_true, "Intrinsic dimension of the source data");
    dimscan->add_option("--fraction", dim_fraction, "Fraction of all triplets to evaluate");
    dimscan->add_option("--features", features_csv, "Feature CSV (synthetic data when omitted)");
    dimscan->add_option("--label-column", label_column, "Label column inside --features");

    // psycho
    auto* psycho = app.add_subcommand("psycho", "Simulated perception study");
    std::vector<double> lengthscales{2.0, 0.88, 0.54};
    int stimuli = 20;
    int observers = 50;
    int triplets_per_observer = 100;
    int psycho_b = 50;
    double psycho_r = 0.1;
    add_shared_flags(psycho, flags);
    psycho->add_option("--lengthscales", lengthscales, "GP lengthscales, one run each");
    psycho->add_option("--stimuli", stimuli, "Stimulus grid size");
    psycho->add_option("--observers", observers, "Observer count");
    psycho->add_option("--triplets-per-observer", triplets_per_observer,
                       "Triplet answers per observer");
    psycho->add_option("--psycho-b", psycho_b, "Bootstrap replicas for the perception study");
    psycho->add_option("--psycho-r", psycho_r, "Bootstrap subsample fraction");

    // active
    auto* active = app.add_subcommand("active", "Active vs random triplet querying");
    int seed_triplets = 2000;
    int batch = 1000;
    int budget = 10000;
    int n_clusters = 6;
    std::string active_features;
    int active_label_column = -1;
    add_shared_flags(active, flags);
    active->add_option("--seed-triplets", seed_triplets, "Random seed set size");
    active->add_option("--batch", batch, "Comparisons queried per round");
    active->add_option("--budget", budget, "Total triplet budget");
    active->add_option("--clusters", n_clusters, "Cluster count of the synthetic data");
    active->add_option("--features", active_features, "Feature CSV with ground-truth distances");
    active->add_option("--label-column", active_label_column, "Label column inside --features");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(args);
        std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const tuq::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    }

    try {
        if (*calibrate_noise) {
            tuq::ExperimentConfig cfg = make_config(flags);
            cfg.noise_grid = noise_grid;
            cfg.noise_sweep_fraction = noise_fraction;
            const tuq::CalibrationResult result =
                tuq::run_calibration_sweep(cfg, tuq::SweepKind::Noise);
            tuq::write_calibration_outputs(flags.out, result, cfg);
        } else if (*calibrate_triplets) {
            tuq::ExperimentConfig cfg = make_config(flags);
            cfg.fraction_grid = fraction_grid;
            const tuq::CalibrationResult result =
                tuq::run_calibration_sweep(cfg, tuq::SweepKind::TripletFraction);
            tuq::write_calibration_outputs(flags.out, result, cfg);
        } else if (*predict_grid) {
            tuq::ExperimentConfig cfg = make_config(flags);
            cfg.thresholds = thresholds;
            cfg.count_fractions = count_fractions;
            const tuq::PredictionGridResult result = tuq::run_prediction_grid(cfg);
            tuq::write_prediction_outputs(flags.out, result, cfg);
        } else if (*dimscan) {
            tuq::ExperimentConfig cfg = make_config(flags);
            cfg.dims = dims;
            cfg.d_true = d_true;
            cfg.dim_fraction = dim_fraction;
            cfg.dim_sigma = flags.sigma > 0.0 ? flags.sigma : 0.1;
            cfg.features_csv = features_csv;
            if (label_column >= 0) cfg.label_column = label_column;
            const tuq::DimensionResult result = tuq::run_dimension_experiment(cfg);
            tuq::write_dimension_outputs(flags.out, result, cfg);
        } else if (*psycho) {
            tuq::PsychoConfig cfg;
            cfg.n_stimuli = stimuli;
            cfg.n_observers = observers;
            cfg.triplets_per_observer = triplets_per_observer;
            cfg.replicas = psycho_b;
            cfg.subsample = psycho_r;
            cfg.loss = tuq::loss_spec_from_name(flags.loss);
            std::vector<tuq::PsychoResult> results;
            tuq::Rng rng(flags.seed);
            for (double lengthscale : lengthscales)
                results.push_back(tuq::run_psycho_experiment(tuq::GpSpec(lengthscale), cfg, rng));
            tuq::write_psycho_outputs(flags.out, results, cfg);
        } else if (*active) {
            tuq::ActiveLoopConfig cfg;
            cfg.n = active->count("--n") ? flags.n : 200;
            cfg.dim = active->count("--dim") ? flags.dim : 5;
            cfg.sigma = active->count("--sigma") ? flags.sigma : 0.1;
            cfg.seed_triplets = seed_triplets;
            cfg.batch = batch;
            cfg.budget = budget;
            cfg.loss = tuq::loss_spec_from_name(flags.loss);
            cfg.method = make_method(flags);
            cfg.n_clusters = n_clusters;
            cfg.seed = flags.seed;

            std::vector<tuq::ActiveLoopResult> results;
            for (int rep = 0; rep < flags.reps; ++rep) {
                tuq::ActiveLoopConfig rep_cfg = cfg;
                rep_cfg.seed = cfg.seed + static_cast<std::uint64_t>(rep);
                tuq::PointSet data;
                if (!active_features.empty()) {
                    if (active_label_column < 0)
                        throw tuq::ConfigError("active: --features requires --label-column");
                    const tuq::FeatureData raw =
                        tuq::read_features(active_features, active_label_column);
                    if (raw.features.rows() < rep_cfg.n)
                        throw tuq::ConfigError("active: fewer feature rows than --n");
                    tuq::Rng pick(rep_cfg.seed);
                    data.points.resize(rep_cfg.n, raw.features.cols());
                    data.labels.resize(rep_cfg.n);
                    std::vector<int> idx(raw.features.rows());
                    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
                    for (int k = 0; k < rep_cfg.n; ++k) {
                        const std::size_t choice = k + pick.integer(idx.size() - k);
                        std::swap(idx[k], idx[choice]);
                        data.points.row(k) = raw.features.row(idx[k]);
                        data.labels[k] = raw.labels[idx[k]];
                    }
                } else {
                    tuq::Rng data_rng(rep_cfg.seed);
                    data = tuq::sample_clustered_gaussians(rep_cfg.n, rep_cfg.n_clusters,
                                                           rep_cfg.dim, rep_cfg.separation,
                                                           data_rng);
                }
                results.push_back(tuq::run_active_loop(rep_cfg, data));
            }
            tuq::write_active_outputs(flags.out, results, cfg);
        }
    } catch (const tuq::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const tuq::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const tuq::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
