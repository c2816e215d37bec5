#include "tuq/experiments.hpp"

#include "test_helpers.hpp"
#include "tuq/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace tuq;
using tuq::testing::temp_dir;

TEST_SUITE_BEGIN("experiments");

namespace {

ExperimentConfig desk_config() {
    ExperimentConfig cfg;
    cfg.n = 12;
    cfg.dim = 2;
    cfg.repetitions = 2;
    cfg.seed = 31;
    cfg.method = EnsembleMethod::bootstrap(LossSpec::ste(), 4, 0.5);
    cfg.opt.max_iters = 400;
    cfg.opt.restarts = 2;
    return cfg;
}

} // namespace

TEST_CASE("calibration sweeps emit one row per grid value and rep") {
    ExperimentConfig cfg = desk_config();
    cfg.noise_grid = {0.0, 0.4, 1.2};
    cfg.noise_sweep_fraction = 0.08;
    const CalibrationResult result = run_calibration_sweep(cfg, SweepKind::Noise);
    REQUIRE(result.rows.size() == 3);
    for (const CalibrationRow& row : result.rows) {
        CHECK(row.procrustes.size() == 2);
        CHECK(row.uncertainty.size() == 2);
    }
    CHECK(result.points.rows() == 12);
}

TEST_CASE("uncertainty grows from the quiet to the noisy end of the sweep") {
    ExperimentConfig cfg = desk_config();
    cfg.noise_grid = {0.0, 1.2};
    cfg.noise_sweep_fraction = 0.08;
    cfg.repetitions = 3;
    const CalibrationResult result = run_calibration_sweep(cfg, SweepKind::Noise);
    CHECK(result.rows.front().mean_uncertainty() <= result.rows.back().mean_uncertainty());
}

TEST_CASE("more triplets shrink both error and uncertainty") {
    ExperimentConfig cfg = desk_config();
    cfg.fraction_grid = {0.02, 0.5};
    cfg.repetitions = 2;
    const CalibrationResult result = run_calibration_sweep(cfg, SweepKind::TripletFraction);
    for (int rep = 0; rep < 2; ++rep) {
        CHECK(result.rows.back().procrustes[rep] < result.rows.front().procrustes[rep]);
        CHECK(result.rows.back().uncertainty[rep] < result.rows.front().uncertainty[rep]);
    }
}

TEST_CASE("experiments are bit-deterministic in the master seed") {
    ExperimentConfig cfg = desk_config();
    cfg.noise_grid = {0.0, 0.6};
    const CalibrationResult a = run_calibration_sweep(cfg, SweepKind::Noise);
    const CalibrationResult b = run_calibration_sweep(cfg, SweepKind::Noise);
    CHECK(a.points == b.points);
    for (std::size_t g = 0; g < a.rows.size(); ++g) {
        CHECK(a.rows[g].procrustes == b.rows[g].procrustes);
        CHECK(a.rows[g].uncertainty == b.rows[g].uncertainty);
    }
}

TEST_CASE("prediction grids are full factorial with exact abstention monotonicity") {
    ExperimentConfig cfg = desk_config();
    cfg.thresholds = {0.55, 0.75, 0.95};
    cfg.count_fractions = {0.05, 0.3};
    const PredictionGridResult result = run_prediction_grid(cfg);
    CHECK(result.cells.size() == 3 * 2 * 2);

    // fixed stats: raising t only removes the least-confident predictions
    for (int rep = 0; rep < 2; ++rep) {
        for (double fraction : cfg.count_fractions) {
            double last = -1.0;
            for (double t : cfg.thresholds) {
                for (const PredictionCell& cell : result.cells) {
                    if (cell.rep == rep && cell.count_fraction == fraction &&
                        cell.threshold == t) {
                        CHECK(cell.abstention >= last);
                        last = cell.abstention;
                    }
                }
            }
        }
    }
}

TEST_CASE("dimension experiments report a non-increasing training loss") {
    ExperimentConfig cfg = desk_config();
    cfg.dims = {1, 2, 3};
    cfg.d_true = 2;
    cfg.dim_fraction = 0.3;
    cfg.dim_sigma = 0.1;
    const DimensionResult result = run_dimension_experiment(cfg);
    REQUIRE(result.rows.size() == 3);
    for (std::size_t k = 1; k < result.rows.size(); ++k)
        CHECK(result.rows[k].ste_loss <= result.rows[k - 1].ste_loss + 1e-9);
    const std::set<int> dims{result.rows[0].dim, result.rows[1].dim, result.rows[2].dim};
    CHECK(dims == std::set<int>{1, 2, 3});
}

TEST_CASE("clustered gaussians are well separated and labeled") {
    Rng rng(8);
    const PointSet data = sample_clustered_gaussians(60, 3, 2, 10.0, rng);
    REQUIRE(data.n() == 60);
    REQUIRE(data.has_labels());
    // cluster means sit far apart relative to unit covariance
    for (int a = 0; a < 60; ++a)
        for (int b = 0; b < 60; ++b)
            if (data.labels[a] == data.labels[b])
                CHECK((data.points.row(a) - data.points.row(b)).norm() < 10.0);
}

TEST_CASE("the active loop runs its full schedule for both policies") {
    ActiveLoopConfig cfg;
    cfg.n = 14;
    cfg.dim = 2;
    cfg.seed_triplets = 60;
    cfg.batch = 30;
    cfg.budget = 180;
    cfg.sigma = 0.1;
    cfg.n_clusters = 2;
    cfg.graph_k = 4;
    cfg.knn_k = 3;
    cfg.method = EnsembleMethod::bootstrap(LossSpec::ste(), 3, 0.5);
    cfg.opt.max_iters = 300;
    cfg.opt.restarts = 1;
    cfg.seed = 7;

    Rng data_rng(cfg.seed);
    const PointSet data = sample_clustered_gaussians(cfg.n, cfg.n_clusters, cfg.dim, 9.0, data_rng);
    const ActiveLoopResult result = run_active_loop(cfg, data);

    CHECK(cfg.rounds() == 4);
    REQUIRE(result.uncertainty.size() == 4);
    REQUIRE(result.random.size() == 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(result.uncertainty[r].total_triplets == 60u + 30u * (r + 1));
        CHECK(result.random[r].total_triplets == 60u + 30u * (r + 1));
        CHECK(result.uncertainty[r].triplet_error >= 0.0);
        CHECK(result.uncertainty[r].ari >= -1.0);
    }

    const ActiveLoopResult again = run_active_loop(cfg, data);
    for (int r = 0; r < 4; ++r) {
        CHECK(again.uncertainty[r].triplet_error == result.uncertainty[r].triplet_error);
        CHECK(again.random[r].knn_error == result.random[r].knn_error);
        CHECK(again.random[r].ari == result.random[r].ari);
    }
}

TEST_CASE("output writers are byte-deterministic") {
    ExperimentConfig cfg = desk_config();
    cfg.noise_grid = {0.0, 0.6};
    const CalibrationResult result = run_calibration_sweep(cfg, SweepKind::Noise);

    const std::string dir_a = temp_dir("writer_a");
    const std::string dir_b = temp_dir("writer_b");
    write_calibration_outputs(dir_a, result, cfg);
    write_calibration_outputs(dir_b, result, cfg);
    for (const char* name : {"calibration_noise.csv", "calibration_noise_reps.csv",
                             "metadata.json"}) {
        CHECK(read_file_bytes(dir_a + "/" + name) == read_file_bytes(dir_b + "/" + name));
        CHECK(!read_file_bytes(dir_a + "/" + name).empty());
    }
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_SUITE_END();
