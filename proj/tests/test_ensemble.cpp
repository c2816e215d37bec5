#include "tuq/ensemble.hpp"

#include "test_helpers.hpp"
#include "tuq/math_util.hpp"
#include "tuq/uncertainty.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace tuq;
using tuq::testing::random_points;

TEST_SUITE_BEGIN("ensemble");

namespace {

Eigen::MatrixXd random_rotation(int d, Rng& rng) {
    const Eigen::MatrixXd G = random_points(d, d, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    if (Q.determinant() < 0.0) Q.col(0) = -Q.col(0);
    return Q;
}

OptimizerConfig fast_opt() {
    OptimizerConfig cfg;
    cfg.max_iters = 400;
    cfg.restarts = 2;
    return cfg;
}

} // namespace

TEST_CASE("procrustes_align maps an embedding onto itself") {
    Rng rng(1);
    const Embedding X = random_points(12, 3, rng);
    const Embedding aligned = procrustes_align(X, X);
    CHECK((aligned - X).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("procrustes_align undoes rotation, scale and translation") {
    Rng rng(2);
    const Embedding ref = random_points(15, 3, rng);
    const Eigen::MatrixXd R = random_rotation(3, rng);
    Embedding moved = 3.0 * ref * R;
    moved.rowwise() += Eigen::RowVector3d(5.0, -2.0, 0.5);

    const ProcrustesAlignment a = procrustes_align_full(moved, ref);
    CHECK((a.aligned - ref).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(a.scale == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("procrustes_align recovers reflections") {
    Rng rng(3);
    const Embedding ref = random_points(10, 2, rng);
    Eigen::Matrix2d mirror;
    mirror << -1.0, 0.0, 0.0, 1.0;
    const Embedding reflected = ref * mirror;
    const Embedding aligned = procrustes_align(reflected, ref);
    CHECK((aligned - ref).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("procrustes_align rejects zero-norm input") {
    const Embedding zero = Embedding::Zero(5, 2);
    Rng rng(4);
    const Embedding ref = random_points(5, 2, rng);
    CHECK_THROWS_AS(procrustes_align(zero, ref), DegenerateError);
}

TEST_CASE("alignment preserves distances up to the recorded scale") {
    Rng rng(5);
    const Embedding X = random_points(9, 2, rng);
    const Embedding ref = random_points(9, 2, rng);
    const ProcrustesAlignment a = procrustes_align_full(X, ref);
    const Eigen::MatrixXd before = pairwise_distances(X);
    const Eigen::MatrixXd after = pairwise_distances(a.aligned);
    CHECK((after - a.scale * before).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bootstrap ensembles have b aligned members") {
    Rng rng(6);
    const Eigen::MatrixXd X_star = random_points(12, 2, rng, 2.0);
    const TripletSet S = sample_noisy_triplets(X_star, 600, NoiseModel(0.0), rng);
    const EmbeddingEnsemble E =
        bootstrap_ensemble(S, 2, LossSpec::ste(), 6, 0.4, fast_opt(), rng);

    CHECK(E.size() == 6);
    CHECK(E.aligned);
    CHECK(E.source == EnsembleSource::Bootstrap);
    CHECK(E.subsample_fraction == 0.4);
    REQUIRE(E.reference >= 0);
    CHECK(E.align_scales[E.reference] == 1.0);

    // alignment idempotence
    for (int k = 0; k < E.size(); ++k) {
        const Embedding again = procrustes_align(E.members[k], E.members[E.reference]);
        CHECK((again - E.members[k]).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("bootstrap members differ across replicas") {
    Rng rng(7);
    const Eigen::MatrixXd X_star = random_points(10, 2, rng, 2.0);
    const TripletSet S = sample_noisy_triplets(X_star, 400, NoiseModel(0.2), rng);
    const EmbeddingEnsemble E =
        bootstrap_ensemble(S, 2, LossSpec::ste(), 4, 0.4, fast_opt(), rng);
    CHECK((E.members[0] - E.members[1]).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("bootstrap ensembles are reproducible from the master seed") {
    Rng seed_a(8), seed_b(8);
    const Eigen::MatrixXd Xa = random_points(10, 2, seed_a, 2.0);
    const Eigen::MatrixXd Xb = random_points(10, 2, seed_b, 2.0);
    const TripletSet Sa = sample_noisy_triplets(Xa, 300, NoiseModel(0.1), seed_a);
    const TripletSet Sb = sample_noisy_triplets(Xb, 300, NoiseModel(0.1), seed_b);
    const EmbeddingEnsemble Ea =
        bootstrap_ensemble(Sa, 2, LossSpec::ste(), 4, 0.5, fast_opt(), seed_a);
    const EmbeddingEnsemble Eb =
        bootstrap_ensemble(Sb, 2, LossSpec::ste(), 4, 0.5, fast_opt(), seed_b);
    CHECK(Ea.reference == Eb.reference);
    for (int k = 0; k < Ea.size(); ++k) CHECK(Ea.members[k] == Eb.members[k]);
}

TEST_CASE("bootstrap rejects invalid replica and subsample settings") {
    Rng rng(9);
    const Eigen::MatrixXd X_star = random_points(8, 2, rng);
    const TripletSet S = sample_noisy_triplets(X_star, 100, NoiseModel(0.0), rng);
    CHECK_THROWS_AS(bootstrap_ensemble(S, 2, LossSpec::ste(), 1, 0.4, fast_opt(), rng),
                    InvalidArgumentError);
    CHECK_THROWS_AS(bootstrap_ensemble(S, 2, LossSpec::ste(), 4, 1.0, fast_opt(), rng),
                    InvalidArgumentError);
    CHECK_THROWS_AS(bootstrap_ensemble(S, 2, LossSpec::ste(), 4, 0.001, fast_opt(), rng),
                    InvalidArgumentError);
}

TEST_CASE("ess_step accepts only states above its slice threshold") {
    Rng rng(10);
    const PriorSpec prior(2.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    const LogLikelihood flat = [](const Eigen::VectorXd&) { return 0.0; };
    double ll = 0.0;
    for (int s = 0; s < 200; ++s) {
        const EssStepResult step = ess_step(x, ll, flat, prior, rng);
        CHECK(step.log_lik > step.threshold);
        x = step.state;
        ll = step.log_lik;
    }
}

TEST_CASE("ess sampling under a flat likelihood reproduces the prior") {
    Rng rng(11);
    const double scale = 2.5;
    const PriorSpec prior(scale);
    const int dim = 3;
    const int steps = 20000;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    const LogLikelihood flat = [](const Eigen::VectorXd&) { return 0.0; };
    double ll = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(dim);
    for (int s = 0; s < steps; ++s) {
        const EssStepResult step = ess_step(x, ll, flat, prior, rng);
        x = step.state;
        ll = step.log_lik;
        sum += x;
        sumsq += x.cwiseProduct(x);
    }
    for (int c = 0; c < dim; ++c) {
        const double mean = sum(c) / steps;
        const double var = sumsq(c) / steps - mean * mean;
        CHECK(std::abs(var - scale) / scale < 0.05);
        CHECK(std::abs(mean) < 0.1);
    }
}

TEST_CASE("ess matches the conjugate Gaussian posterior") {
    Rng rng(12);
    const double prior_scale = 15.0;
    const double lik_var = 4.0;
    Eigen::VectorXd target(4);
    target << 2.0, -3.0, 4.0, -2.5;

    const PriorSpec prior(prior_scale);
    const LogLikelihood gauss = [&](const Eigen::VectorXd& v) {
        return -0.5 * (v - target).squaredNorm() / lik_var;
    };

    const double post_mean_factor = prior_scale / (prior_scale + lik_var);
    const double post_var = prior_scale * lik_var / (prior_scale + lik_var);

    const int steps = 20000;
    Eigen::VectorXd x = target; // start near the mode
    double ll = gauss(x);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(4);
    for (int s = 0; s < steps; ++s) {
        const EssStepResult step = ess_step(x, ll, gauss, prior, rng);
        x = step.state;
        ll = step.log_lik;
        sum += x;
        sumsq += x.cwiseProduct(x);
    }
    for (int c = 0; c < 4; ++c) {
        const double mean = sum(c) / steps;
        const double var = sumsq(c) / steps - mean * mean;
        CHECK(std::abs(mean - post_mean_factor * target(c)) /
                  std::abs(post_mean_factor * target(c)) <
              0.05);
        CHECK(std::abs(var - post_var) / post_var < 0.05);
    }
}

TEST_CASE("ess_step aborts when no proposal can be accepted") {
    Rng rng(13);
    const PriorSpec prior(1.0);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    const LogLikelihood hopeless = [](const Eigen::VectorXd&) { return -1e300; };
    CHECK_THROWS_AS(ess_step(x, 0.0, hopeless, prior, rng), NonTerminationError);
}

TEST_CASE("bayesian ensembles start at the maximum-likelihood embedding") {
    Rng data_rng(14);
    const Eigen::MatrixXd X_star = random_points(8, 2, data_rng, 2.0);
    const TripletSet S = sample_noisy_triplets(X_star, 300, NoiseModel(0.0), data_rng);

    const OptimizerConfig cfg = fast_opt();
    Rng chain_rng(77), ml_rng(77);
    const EmbeddingEnsemble E = bayesian_ensemble(S, 2, LossSpec::ste(), PriorSpec(15.0), 10, 1,
                                                  cfg, chain_rng);
    const EmbedResult ml = embed(S, 2, LossSpec::ste(), cfg, ml_rng);

    CHECK(E.size() == 10);
    CHECK(E.source == EnsembleSource::Bayesian);
    CHECK_FALSE(E.aligned);
    CHECK((E.members[0] - center_rows(ml.coords)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("more triplets concentrate the Bayesian posterior") {
    Rng rng(15);
    const Eigen::MatrixXd X_star = random_points(10, 2, rng, 2.0);
    const TripletSet big = sample_noisy_triplets(X_star, 2000, NoiseModel(0.0), rng);
    TripletSet small;
    small.n = big.n;
    small.answers.assign(big.answers.begin(), big.answers.begin() + 200);

    const OptimizerConfig cfg = fast_opt();
    Rng chain_a(16), chain_b(16);
    const EmbeddingEnsemble E_big =
        bayesian_ensemble(big, 2, LossSpec::ste(), PriorSpec(15.0), 120, 1, cfg, chain_a);
    const EmbeddingEnsemble E_small =
        bayesian_ensemble(small, 2, LossSpec::ste(), PriorSpec(15.0), 120, 1, cfg, chain_b);

    const double spread_big = distance_stats(E_big).sigma_bar.mean();
    const double spread_small = distance_stats(E_small).sigma_bar.mean();
    CHECK(spread_big < spread_small);
}

TEST_CASE("bayesian ensembles reject the hinge loss") {
    Rng rng(17);
    const Eigen::MatrixXd X_star = random_points(6, 2, rng);
    const TripletSet S = sample_noisy_triplets(X_star, 60, NoiseModel(0.0), rng);
    CHECK_THROWS_AS(bayesian_ensemble(S, 2, LossSpec::gnmds_hinge(), PriorSpec(15.0), 5, 1,
                                      fast_opt(), rng),
                    UnsupportedError);
}

TEST_CASE("ensemble archives round-trip") {
    Rng rng(18);
    const Eigen::MatrixXd X_star = random_points(7, 2, rng, 2.0);
    const TripletSet S = sample_noisy_triplets(X_star, 200, NoiseModel(0.0), rng);
    const EmbeddingEnsemble E =
        bootstrap_ensemble(S, 2, LossSpec::ste(), 3, 0.5, fast_opt(), rng);

    const std::string dir = tuq::testing::temp_dir("ensemble");
    save_ensemble(E, dir);
    const EmbeddingEnsemble back = load_ensemble(dir);
    CHECK(back.size() == E.size());
    CHECK(back.aligned == E.aligned);
    CHECK(back.reference == E.reference);
    CHECK(back.subsample_fraction == E.subsample_fraction);
    CHECK(back.seeds == E.seeds);
    for (int k = 0; k < E.size(); ++k)
        CHECK((back.members[k] - E.members[k]).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
