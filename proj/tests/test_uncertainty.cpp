#include "tuq/uncertainty.hpp"

#include "test_helpers.hpp"
#include "tuq/math_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace tuq;
using tuq::testing::random_points;
using tuq::testing::random_stats;

TEST_SUITE_BEGIN("uncertainty");

namespace {

EmbeddingEnsemble ensemble_of(std::vector<Embedding> members,
                              EnsembleSource source = EnsembleSource::Bayesian,
                              bool aligned = false) {
    EmbeddingEnsemble E;
    E.members = std::move(members);
    E.source = source;
    E.aligned = aligned;
    return E;
}

/// Simpson-rule integral of the standard normal density on [0, z].
double normal_cdf_by_quadrature(double z) {
    const int steps = 2000;
    const double h = z / steps;
    double acc = 0.0;
    const auto pdf = [](double t) {
        return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    };
    for (int k = 0; k < steps; ++k) {
        const double a = k * h;
        acc += (pdf(a) + 4.0 * pdf(a + 0.5 * h) + pdf(a + h)) * h / 6.0;
    }
    return 0.5 + acc;
}

} // namespace

TEST_CASE("distance stats of identical members have zero deviation") {
    Rng rng(1);
    const Embedding X = random_points(6, 2, rng);
    const EmbeddingEnsemble E = ensemble_of({X, X, X});
    const DistanceStats stats = distance_stats(E);
    CHECK(stats.sigma_bar.cwiseAbs().maxCoeff() < 1e-13);
    CHECK((stats.rho_bar - pairwise_distances(X)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("two-member distance stats follow two-sample arithmetic") {
    Embedding a(2, 1), b(2, 1);
    a << 0.0, 1.0;
    b << 0.0, 3.0;
    const DistanceStats stats = distance_stats(ensemble_of({a, b}));
    CHECK(stats.rho_bar(0, 1) == doctest::Approx(2.0));
    CHECK(stats.sigma_bar(0, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("distance stats match a brute-force recomputation") {
    Rng rng(2);
    std::vector<Embedding> members;
    for (int k = 0; k < 5; ++k) members.push_back(random_points(7, 3, rng));
    const DistanceStats stats = distance_stats(ensemble_of(members));

    const int n = 7;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            double mean = 0.0;
            for (const Embedding& m : members)
                mean += tuq::testing::naive_distances(m)(a, b);
            mean /= members.size();
            double var = 0.0;
            for (const Embedding& m : members) {
                const double dev = tuq::testing::naive_distances(m)(a, b) - mean;
                var += dev * dev;
            }
            var /= members.size() - 1.0;
            CHECK(std::abs(stats.rho_bar(a, b) - mean) < 1e-12);
            CHECK(std::abs(stats.sigma_bar(a, b) - std::sqrt(var)) < 1e-12);
        }
    }
}

TEST_CASE("triplet uncertainty evaluates the normal cdf of the distance gap") {
    DistanceStats stats;
    stats.rho_bar = Eigen::MatrixXd::Zero(3, 3);
    stats.sigma_bar = Eigen::MatrixXd::Zero(3, 3);
    stats.rho_bar(0, 1) = stats.rho_bar(1, 0) = 1.0;
    stats.rho_bar(0, 2) = stats.rho_bar(2, 0) = 2.0;
    stats.rho_bar(1, 2) = stats.rho_bar(2, 1) = 1.5;
    stats.sigma_bar.setConstant(0.5);
    stats.sigma_bar.diagonal().setZero();

    const double pi = triplet_uncertainty(stats, 0, 1, 2);
    CHECK(pi == doctest::Approx(0.841345).epsilon(1e-5));
    CHECK(pi == doctest::Approx(normal_cdf_by_quadrature(1.0)).epsilon(1e-7));

    stats.rho_bar(0, 2) = stats.rho_bar(2, 0) = 1.0;
    CHECK(triplet_uncertainty(stats, 0, 1, 2) == doctest::Approx(0.5));
}

TEST_CASE("complementary uncertainties sum to one") {
    Rng rng(3);
    for (int inst = 0; inst < 50; ++inst) {
        const DistanceStats stats = random_stats(6, rng);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int l = 0; l < 6; ++l) {
                    if (i == j || i == l || j == l) continue;
                    const double sum = triplet_uncertainty(stats, i, j, l) +
                                       triplet_uncertainty(stats, i, l, j);
                    CHECK(std::abs(sum - 1.0) < 1e-12);
                }
    }
}

TEST_CASE("degenerate deviations resolve by the sign of the distance gap") {
    DistanceStats stats;
    stats.rho_bar = Eigen::MatrixXd::Zero(3, 3);
    stats.sigma_bar = Eigen::MatrixXd::Zero(3, 3);
    stats.rho_bar(0, 1) = stats.rho_bar(1, 0) = 1.0;
    stats.rho_bar(0, 2) = stats.rho_bar(2, 0) = 2.0;
    stats.rho_bar(1, 2) = stats.rho_bar(2, 1) = 2.0;

    CHECK(triplet_uncertainty(stats, 0, 1, 2) == 1.0);
    CHECK(triplet_uncertainty(stats, 0, 2, 1) == 0.0);
    CHECK(triplet_uncertainty(stats, 1, 0, 2) == 1.0);
    CHECK(triplet_uncertainty(stats, 2, 0, 1) == 0.5); // equal means
}

TEST_CASE("point stats of identical members vanish") {
    Rng rng(4);
    const Embedding X = random_points(5, 2, rng);
    const PointStats stats = point_stats(ensemble_of({X, X, X, X}));
    CHECK((stats.means - X).cwiseAbs().maxCoeff() < 1e-14);
    for (const Eigen::MatrixXd& C : stats.covariances)
        CHECK(C.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("one-dimensional point stats follow two-sample arithmetic") {
    Embedding a(1, 1), b(1, 1);
    a << 0.0;
    b << 2.0;
    const PointStats stats = point_stats(ensemble_of({a, b}));
    CHECK(stats.means(0, 0) == doctest::Approx(1.0));
    CHECK(stats.covariances[0](0, 0) == doctest::Approx(2.0));
}

TEST_CASE("point covariances are symmetric positive semidefinite") {
    Rng rng(5);
    std::vector<Embedding> members;
    for (int k = 0; k < 6; ++k) members.push_back(random_points(5, 3, rng));
    const PointStats stats = point_stats(ensemble_of(members));
    for (const Eigen::MatrixXd& C : stats.covariances) {
        CHECK(C.isApprox(C.transpose(), 1e-12));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("point stats demand aligned bootstrap ensembles") {
    Rng rng(6);
    const EmbeddingEnsemble E = ensemble_of(
        {random_points(4, 2, rng), random_points(4, 2, rng)}, EnsembleSource::Bootstrap, false);
    CHECK_THROWS_AS(point_stats(E), NotAlignedError);
}

TEST_CASE("abstention verdicts partition the pi range") {
    DistanceStats stats;
    stats.rho_bar = Eigen::MatrixXd::Zero(3, 3);
    stats.sigma_bar = Eigen::MatrixXd::Zero(3, 3);
    const auto set_gap = [&](double gap) {
        stats.rho_bar(0, 1) = stats.rho_bar(1, 0) = 1.0;
        stats.rho_bar(0, 2) = stats.rho_bar(2, 0) = 1.0 + gap;
        stats.rho_bar(1, 2) = stats.rho_bar(2, 1) = 1.5;
        stats.sigma_bar.setConstant(0.5);
        stats.sigma_bar.diagonal().setZero();
    };

    set_gap(1.2815515655446004); // pi ~ 0.9
    Prediction p = predict_with_abstention(stats, 0, 1, 2, 0.8);
    CHECK(p.verdict == Verdict::CloserJ);
    CHECK(p.pi == doctest::Approx(0.9).epsilon(1e-6));

    set_gap(0.0); // pi = 0.5
    CHECK(predict_with_abstention(stats, 0, 1, 2, 0.8).verdict == Verdict::Abstain);
    CHECK(predict_with_abstention(stats, 0, 1, 2, 0.51).verdict == Verdict::Abstain);

    set_gap(-1.2815515655446004); // pi ~ 0.1
    CHECK(predict_with_abstention(stats, 0, 1, 2, 0.8).verdict == Verdict::CloserL);

    CHECK_THROWS_AS(predict_with_abstention(stats, 0, 1, 2, 0.5), ThresholdError);
    CHECK_THROWS_AS(predict_with_abstention(stats, 0, 1, 2, 0.2), ThresholdError);
    CHECK_THROWS_AS(predict_with_abstention(stats, 0, 1, 2, 1.5), ThresholdError);
}

TEST_CASE("prediction consistency: pi > t iff the complement is below 1 - t") {
    Rng rng(7);
    const DistanceStats stats = random_stats(5, rng);
    for (double t : {0.55, 0.7, 0.9}) {
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                for (int l = j + 1; l < 5; ++l) {
                    if (i == j || i == l) continue;
                    const Verdict a = predict_with_abstention(stats, i, j, l, t).verdict;
                    const Verdict b = predict_with_abstention(stats, i, l, j, t).verdict;
                    if (a == Verdict::CloserJ) CHECK(b == Verdict::CloserL);
                    if (a == Verdict::CloserL) CHECK(b == Verdict::CloserJ);
                    if (a == Verdict::Abstain) CHECK(b == Verdict::Abstain);
                }
    }
}

TEST_CASE("folded average uncertainty hits its extremes") {
    Rng rng(8);
    // fully certain: degenerate deviations with distinct mean distances
    const Embedding X = random_points(5, 2, rng);
    const DistanceStats certain = distance_stats(ensemble_of({X, X}));
    CHECK(folded_average_uncertainty(certain) == 0.0);

    // fully uncertain: all mean distances equal
    DistanceStats uncertain;
    uncertain.rho_bar = Eigen::MatrixXd::Ones(4, 4);
    uncertain.rho_bar.diagonal().setZero();
    uncertain.sigma_bar = Eigen::MatrixXd::Constant(4, 4, 0.3);
    uncertain.sigma_bar.diagonal().setZero();
    CHECK(folded_average_uncertainty(uncertain) == 0.5);
}

TEST_CASE("folded average equals direct enumeration on n = 4") {
    Rng rng(9);
    const DistanceStats stats = random_stats(4, rng);
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int l = j + 1; l < 4; ++l) {
                if (i == j || i == l) continue;
                const double pi = triplet_uncertainty(stats, i, j, l);
                sum += std::min(pi, 1.0 - pi);
                ++count;
            }
    CHECK(count == 12);
    CHECK(folded_average_uncertainty(stats) == doctest::Approx(sum / 12.0).epsilon(1e-14));
}

TEST_CASE("true-triplet average is one on ground-truth copies and flips on reversal") {
    Rng rng(10);
    const Embedding X = random_points(6, 2, rng);
    const TripletSet truth = all_true_triplets(X);
    const DistanceStats stats = distance_stats(ensemble_of({X, X, X}));
    CHECK(true_triplet_average_uncertainty(stats, truth) == 1.0);

    TripletSet reversed;
    reversed.n = truth.n;
    for (const Triplet& t : truth.answers) reversed.answers.push_back(t.reversed());
    CHECK(true_triplet_average_uncertainty(stats, reversed) == 0.0);

    const DistanceStats noisy = random_stats(6, rng);
    const double fwd = true_triplet_average_uncertainty(noisy, truth);
    const double bwd = true_triplet_average_uncertainty(noisy, reversed);
    CHECK(fwd + bwd == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dimension scan reports one row per dimension and a sane argmin") {
    Rng rng(11);
    const Eigen::MatrixXd X_star = random_points(10, 2, rng, 2.0);
    const TripletSet S = all_true_triplets(X_star);

    OptimizerConfig cfg;
    cfg.max_iters = 300;
    cfg.restarts = 2;
    const EnsembleMethod method = EnsembleMethod::bootstrap(LossSpec::ste(), 4, 0.5);

    const DimensionScanResult single = dimension_scan(S, {3}, method, cfg, rng);
    CHECK(single.rows.size() == 1);
    CHECK(single.best_dim == 3);

    const DimensionScanResult scan = dimension_scan(S, {1, 2, 3}, method, cfg, rng);
    CHECK(scan.rows.size() == 3);
    const auto at = [&](int d) {
        for (const DimensionScanRow& row : scan.rows)
            if (row.dim == d) return row.folded_uncertainty;
        FAIL("missing dim");
        return 0.0;
    };
    // underfitting at d=1 contradicts the noise-free 2-D training data
    CHECK(at(2) < at(1));
}

TEST_CASE("uncertain batch selection matches the exhaustive ranking") {
    Rng rng(12);
    const DistanceStats stats = random_stats(6, rng);

    struct Entry {
        double score;
        Comparison c;
    };
    std::vector<Entry> all;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            for (int l = j + 1; l < 6; ++l) {
                if (i == j || i == l) continue;
                const double pi = triplet_uncertainty(stats, i, j, l);
                all.push_back({(pi - 0.5) * (pi - 0.5), {i, j, l}});
            }
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.c.i != b.c.i) return a.c.i < b.c.i;
        if (a.c.j != b.c.j) return a.c.j < b.c.j;
        return a.c.l < b.c.l;
    });

    for (std::size_t k : {std::size_t{1}, std::size_t{5}, all.size()}) {
        const std::vector<Comparison> batch = select_uncertain_batch(stats, k);
        REQUIRE(batch.size() == k);
        for (std::size_t p = 0; p < k; ++p) CHECK(batch[p] == all[p].c);
    }

    // full selection covers every comparison exactly once
    const std::vector<Comparison> everything = select_uncertain_batch(stats, all.size());
    std::set<std::tuple<int, int, int>> seen;
    for (const Comparison& c : everything) {
        CHECK(c.j < c.l);
        seen.insert({c.i, c.j, c.l});
    }
    CHECK(seen.size() == all.size());

    CHECK_THROWS_AS(select_uncertain_batch(stats, all.size() + 1), BatchTooLargeError);
}

TEST_CASE("the most uncertain comparison wins at k = 1") {
    DistanceStats stats;
    stats.rho_bar = Eigen::MatrixXd::Zero(4, 4);
    stats.sigma_bar = Eigen::MatrixXd::Constant(4, 4, 0.4);
    stats.sigma_bar.diagonal().setZero();
    // distances chosen so anchor 3 sees a dead heat between points 0 and 1
    stats.rho_bar << 0.0, 1.0, 2.5, 1.7,
                     1.0, 0.0, 4.0, 1.7,
                     2.5, 4.0, 0.0, 6.0,
                     1.7, 1.7, 6.0, 0.0;
    const std::vector<Comparison> batch = select_uncertain_batch(stats, 1);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0] == Comparison{3, 0, 1});
}

TEST_CASE("uncertainty reports serialize every block") {
    Rng rng(13);
    std::vector<Embedding> members;
    for (int k = 0; k < 4; ++k) members.push_back(random_points(5, 2, rng));
    EmbeddingEnsemble E = ensemble_of(std::move(members));
    const DistanceStats stats = distance_stats(E);
    const PointStats points = point_stats(E);
    const double folded = folded_average_uncertainty(stats);

    const std::string dir = tuq::testing::temp_dir("report");
    const std::string path = dir + "/report.json";
    write_uncertainty_report(path, stats, points, folded);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.find("\"rho_bar\"") != std::string::npos);
    CHECK(body.find("\"sigma_bar\"") != std::string::npos);
    CHECK(body.find("\"point_means\"") != std::string::npos);
    CHECK(body.find("\"point_covariances\"") != std::string::npos);
    CHECK(body.find("\"folded_average_uncertainty\"") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
