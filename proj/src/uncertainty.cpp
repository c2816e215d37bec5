#include "tuq/uncertainty.hpp"

#include "tuq/io.hpp"
#include "tuq/math_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tuq {

DistanceStats distance_stats(const EmbeddingEnsemble& E) {
    E.validate();
    const int b = E.size();
    const int n = E.n();

    std::vector<Eigen::MatrixXd> dists;
    dists.reserve(b);
    for (const Embedding& m : E.members) dists.push_back(pairwise_distances(m));

    DistanceStats stats;
    stats.rho_bar = Eigen::MatrixXd::Zero(n, n);
    for (const Eigen::MatrixXd& D : dists) stats.rho_bar += D;
    stats.rho_bar /= static_cast<double>(b);

    // two-pass sample variance (divisor b - 1); one-pass cancellation would
    // swamp the 1e-12 degeneracy threshold for near-identical members
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, n);
    for (const Eigen::MatrixXd& D : dists) {
        const Eigen::MatrixXd dev = D - stats.rho_bar;
        var += dev.cwiseProduct(dev);
    }
    var /= static_cast<double>(b - 1);
    stats.sigma_bar = var.cwiseSqrt();
    stats.sigma_bar.diagonal().setZero();
    return stats;
}

namespace {

void check_comparison(const DistanceStats& stats, int i, int j, int l) {
    const int n = stats.n();
    if (i == j || i == l || j == l || i < 0 || j < 0 || l < 0 || i >= n || j >= n || l >= n)
        throw IndexError("triplet_uncertainty: invalid comparison (" + std::to_string(i) + "," +
                         std::to_string(j) + "," + std::to_string(l) + ")");
}

double pi_value(const DistanceStats& stats, int i, int j, int l) {
    const double rho_ij = stats.rho_bar(i, j);
    const double rho_il = stats.rho_bar(i, l);
    const double denom = stats.sigma_bar(i, l) + stats.sigma_bar(i, j);
    if (denom < 1e-12) {
        if (rho_il > rho_ij) return 1.0;
        if (rho_il < rho_ij) return 0.0;
        return 0.5;
    }
    return std_normal_cdf((rho_il - rho_ij) / denom);
}

} // namespace

double triplet_uncertainty(const DistanceStats& stats, int i, int j, int l) {
    check_comparison(stats, i, j, l);
    return pi_value(stats, i, j, l);
}

PointStats point_stats(const EmbeddingEnsemble& E) {
    E.validate();
    if (E.source == EnsembleSource::Bootstrap && !E.aligned)
        throw NotAlignedError("point_stats: bootstrap ensemble must be aligned");
    const int b = E.size();
    const int n = E.n();
    const int d = E.dim();

    PointStats stats;
    stats.means = Eigen::MatrixXd::Zero(n, d);
    for (const Embedding& m : E.members) stats.means += m;
    stats.means /= static_cast<double>(b);

    stats.covariances.assign(n, Eigen::MatrixXd::Zero(d, d));
    for (const Embedding& m : E.members) {
        for (int p = 0; p < n; ++p) {
            const Eigen::VectorXd dev = (m.row(p) - stats.means.row(p)).transpose();
            stats.covariances[p] += dev * dev.transpose();
        }
    }
    for (int p = 0; p < n; ++p) stats.covariances[p] /= static_cast<double>(b - 1);
    return stats;
}

Prediction predict_with_abstention(const DistanceStats& stats, int i, int j, int l, double t) {
    if (!(t > 0.5 && t <= 1.0))
        throw ThresholdError("predict_with_abstention: threshold must be in (0.5, 1]");
    Prediction p;
    p.pi = triplet_uncertainty(stats, i, j, l);
    if (p.pi > t)
        p.verdict = Verdict::CloserJ;
    else if (p.pi < 1.0 - t)
        p.verdict = Verdict::CloserL;
    else
        p.verdict = Verdict::Abstain;
    return p;
}

double folded_average_uncertainty(const DistanceStats& stats) {
    const int n = stats.n();
    if (n < 3) throw InvalidArgumentError("folded_average_uncertainty: need n >= 3");
    double sum = 0.0;
    std::uint64_t count = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            for (int l = j + 1; l < n; ++l) {
                if (l == i) continue;
                const double pi = pi_value(stats, i, j, l);
                sum += std::min(pi, 1.0 - pi);
                ++count;
            }
        }
    }
    return sum / static_cast<double>(count);
}

double true_triplet_average_uncertainty(const DistanceStats& stats, const TripletSet& truth) {
    if (truth.empty())
        throw InvalidArgumentError("true_triplet_average_uncertainty: empty truth set");
    if (truth.n > stats.n())
        throw ShapeError("true_triplet_average_uncertainty: stats cover fewer points than truth");
    double sum = 0.0;
    for (const Triplet& t : truth.answers) sum += pi_value(stats, t.i, t.j, t.l);
    return sum / static_cast<double>(truth.size());
}

EnsembleMethod EnsembleMethod::bootstrap(const LossSpec& spec, int b, double r) {
    EnsembleMethod m;
    m.kind = Kind::Bootstrap;
    m.loss = spec;
    m.replicas = b;
    m.subsample = r;
    return m;
}

EnsembleMethod EnsembleMethod::bayesian(const LossSpec& spec, const PriorSpec& prior,
                                        int samples, int thinning) {
    EnsembleMethod m;
    m.kind = Kind::Bayesian;
    m.loss = spec;
    m.prior = prior;
    m.samples = samples;
    m.thinning = thinning;
    return m;
}

EmbeddingEnsemble build_ensemble(const EnsembleMethod& method, const TripletSet& S, int d,
                                 const OptimizerConfig& cfg, Rng& rng) {
    if (method.kind == EnsembleMethod::Kind::Bootstrap)
        return bootstrap_ensemble(S, d, method.loss, method.replicas, method.subsample, cfg, rng);
    return bayesian_ensemble(S, d, method.loss, method.prior, method.samples, method.thinning,
                             cfg, rng);
}

DimensionScanResult dimension_scan(const TripletSet& S, const std::vector<int>& dims,
                                   const EnsembleMethod& method, const OptimizerConfig& cfg,
                                   Rng& rng) {
    if (dims.empty()) throw InvalidArgumentError("dimension_scan: dims must be non-empty");
    for (int d : dims)
        if (d < 1) throw InvalidArgumentError("dimension_scan: dimensions must be >= 1");

    DimensionScanResult result;
    result.rows.reserve(dims.size());
    for (int d : dims) {
        Rng stream = rng.spawn();
        const EmbeddingEnsemble E = build_ensemble(method, S, d, cfg, stream);
        result.rows.push_back({d, folded_average_uncertainty(distance_stats(E))});
    }
    result.best_dim = result.rows.front().dim;
    double best = result.rows.front().folded_uncertainty;
    for (const DimensionScanRow& row : result.rows) {
        if (row.folded_uncertainty < best ||
            (row.folded_uncertainty == best && row.dim < result.best_dim)) {
            best = row.folded_uncertainty;
            result.best_dim = row.dim;
        }
    }
    return result;
}

std::vector<Comparison> select_uncertain_batch(const DistanceStats& stats, std::size_t k) {
    const int n = stats.n();
    if (k < 1) throw InvalidArgumentError("select_uncertain_batch: k must be >= 1");
    if (k > comparison_count(n))
        throw BatchTooLargeError("select_uncertain_batch: k exceeds the " +
                                 std::to_string(comparison_count(n)) +
                                 " distinct comparisons");

    struct Scored {
        double score;
        Comparison c;
    };
    const auto better = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.c.i != b.c.i) return a.c.i < b.c.i;
        if (a.c.j != b.c.j) return a.c.j < b.c.j;
        return a.c.l < b.c.l;
    };

    // bounded worst-first heap keeps memory at O(k) over the O(n^3) stream
    std::vector<Scored> heap;
    heap.reserve(k + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            for (int l = j + 1; l < n; ++l) {
                if (l == i) continue;
                const double pi = pi_value(stats, i, j, l);
                const Scored s{(pi - 0.5) * (pi - 0.5), {i, j, l}};
                if (heap.size() < k) {
                    heap.push_back(s);
                    std::push_heap(heap.begin(), heap.end(), better);
                } else if (better(s, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), better);
                    heap.back() = s;
                    std::push_heap(heap.begin(), heap.end(), better);
                }
            }
        }
    }
    std::sort_heap(heap.begin(), heap.end(), better);
    std::vector<Comparison> out;
    out.reserve(k);
    for (const Scored& s : heap) out.push_back(s.c);
    return out;
}

void write_uncertainty_report(const std::string& path, const DistanceStats& stats,
                              const PointStats& points, double folded_average,
                              const DimensionScanResult* scan) {
    const int n = stats.n();
    nlohmann::ordered_json report;
    report["n"] = n;

    const auto flatten = [](const Eigen::MatrixXd& M) {
        std::vector<double> v;
        v.reserve(M.size());
        for (Eigen::Index r = 0; r < M.rows(); ++r)
            for (Eigen::Index c = 0; c < M.cols(); ++c) v.push_back(M(r, c));
        return v;
    };
    report["rho_bar"] = flatten(stats.rho_bar);
    report["sigma_bar"] = flatten(stats.sigma_bar);
    report["point_means"] = flatten(points.means);
    nlohmann::ordered_json covs = nlohmann::ordered_json::array();
    for (const Eigen::MatrixXd& C : points.covariances) covs.push_back(flatten(C));
    report["point_covariances"] = covs;
    report["folded_average_uncertainty"] = folded_average;
    if (scan) {
        nlohmann::ordered_json table = nlohmann::ordered_json::array();
        for (const DimensionScanRow& row : scan->rows)
            table.push_back({{"dim", row.dim},
                             {"folded_average_uncertainty", row.folded_uncertainty}});
        report["dimension_scan"] = table;
        report["best_dim"] = scan->best_dim;
    }
    std::ofstream out(path);
    if (!out) throw Error("write_uncertainty_report: cannot open " + path);
    out << report.dump(2) << "\n";
}

} // namespace tuq
