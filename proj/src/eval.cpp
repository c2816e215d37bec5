#include "tuq/eval.hpp"

#include "tuq/math_util.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace tuq {

double procrustes_distance(const Embedding& X, const Embedding& X_star) {
    if (X.rows() != X_star.rows() || X.cols() != X_star.cols())
        throw ShapeError("procrustes_distance: shape mismatch");
    const Eigen::MatrixXd Xc = center_rows(X);
    const Eigen::MatrixXd Sc = center_rows(X_star);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xc.transpose() * Sc);
    const double cross = svd.singularValues().sum();
    return std::max(0.0, Xc.squaredNorm() + Sc.squaredNorm() - 2.0 * cross);
}

double procrustes_distance_scaled(const Embedding& X, const Embedding& X_star) {
    if (X.rows() != X_star.rows() || X.cols() != X_star.cols())
        throw ShapeError("procrustes_distance_scaled: shape mismatch");
    const Eigen::MatrixXd Xc = center_rows(X);
    const Eigen::MatrixXd Sc = center_rows(X_star);
    const double x_norm2 = Xc.squaredNorm();
    if (x_norm2 <= 0.0) return Sc.squaredNorm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xc.transpose() * Sc);
    const double cross = svd.singularValues().sum();
    // optimum at s = cross / ||Xc||^2
    return std::max(0.0, Sc.squaredNorm() - cross * cross / x_norm2);
}

PredictionOutcome triplet_prediction_error(const std::vector<Prediction>& predictions) {
    PredictionOutcome out;
    std::size_t right = 0;
    for (const Prediction& p : predictions) {
        switch (p.verdict) {
            case Verdict::CloserJ: ++right; break;
            case Verdict::CloserL: ++out.wrong; break;
            case Verdict::Abstain: break;
        }
    }
    out.predicted = right + out.wrong;
    if (out.predicted > 0)
        out.error = static_cast<double>(out.wrong) / static_cast<double>(out.predicted);
    if (!predictions.empty())
        out.abstention_rate =
            static_cast<double>(predictions.size() - out.predicted) /
            static_cast<double>(predictions.size());
    return out;
}

PredictionOutcome evaluate_predictions(const DistanceStats& stats, const TripletSet& truth,
                                       double t) {
    std::vector<Prediction> preds;
    preds.reserve(truth.size());
    for (const Triplet& tr : truth.answers)
        preds.push_back(predict_with_abstention(stats, tr.i, tr.j, tr.l, t));
    return triplet_prediction_error(preds);
}

double knn_error(const Embedding& X, const Labeling& labels, int k) {
    const int n = static_cast<int>(X.rows());
    if (labels.size() != static_cast<std::size_t>(n))
        throw ShapeError("knn_error: label count mismatch");
    if (k < 1 || k >= n) throw InvalidArgumentError("knn_error: need 1 <= k < n");

    const Eigen::MatrixXd D = pairwise_distances(X);
    int wrong = 0;
    std::vector<int> order(n);
    for (int p = 0; p < n; ++p) {
        order.clear();
        for (int q = 0; q < n; ++q)
            if (q != p) order.push_back(q);
        std::sort(order.begin(), order.end(), [&](int a, int c) {
            if (D(p, a) != D(p, c)) return D(p, a) < D(p, c);
            return a < c;
        });

        std::map<int, int> votes;
        for (int m = 0; m < k; ++m) ++votes[labels[order[m]]];
        int best_label = votes.begin()->first;
        int best_count = votes.begin()->second;
        for (const auto& [label, count] : votes) {
            if (count > best_count) { // ties keep the smallest label id
                best_label = label;
                best_count = count;
            }
        }
        if (best_label != labels[p]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

namespace {

struct KMeansResult {
    Labeling labels;
    double inertia = 0.0;
};

KMeansResult kmeans_once(const Eigen::MatrixXd& rows, int k, Rng& rng) {
    const int n = static_cast<int>(rows.rows());
    const int d = static_cast<int>(rows.cols());

    // k-means++ seeding
    Eigen::MatrixXd centers(k, d);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    centers.row(0) = rows.row(static_cast<int>(rng.integer(n)));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int p = 0; p < n; ++p) {
            const double d2 = (rows.row(p) - centers.row(c - 1)).squaredNorm();
            dist2[p] = std::min(dist2[p], d2);
            total += dist2[p];
        }
        int chosen = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (int p = 0; p < n; ++p) {
                target -= dist2[p];
                if (target <= 0.0) {
                    chosen = p;
                    break;
                }
                chosen = p;
            }
        } else {
            chosen = static_cast<int>(rng.integer(n));
        }
        centers.row(c) = rows.row(chosen);
    }

    KMeansResult result;
    result.labels.assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int p = 0; p < n; ++p) {
            int best = 0;
            double best_d = (rows.row(p) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (rows.row(p) - centers.row(c)).squaredNorm();
                if (d2 < best_d) {
                    best_d = d2;
                    best = c;
                }
            }
            if (result.labels[p] != best) {
                result.labels[p] = best;
                changed = true;
            }
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        std::vector<int> counts(k, 0);
        for (int p = 0; p < n; ++p) {
            sums.row(result.labels[p]) += rows.row(p);
            ++counts[result.labels[p]];
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
        if (!changed && iter > 0) break;
    }
    result.inertia = 0.0;
    for (int p = 0; p < n; ++p)
        result.inertia += (rows.row(p) - centers.row(result.labels[p])).squaredNorm();
    return result;
}

int component_count(const std::vector<std::vector<int>>& adjacency) {
    const int n = static_cast<int>(adjacency.size());
    std::vector<int> seen(n, 0);
    int components = 0;
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        ++components;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : adjacency[v]) {
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return components;
}

} // namespace

Labeling spectral_clustering(const Embedding& X, int n_clusters, int graph_k, Rng& rng) {
    const int n = static_cast<int>(X.rows());
    if (n_clusters < 2) throw InvalidArgumentError("spectral_clustering: n_clusters must be >= 2");
    if (n_clusters > n) throw InvalidArgumentError("spectral_clustering: more clusters than points");
    if (graph_k < 1 || graph_k >= n)
        throw InvalidArgumentError("spectral_clustering: need 1 <= graph_k < n");

    const Eigen::MatrixXd D = pairwise_distances(X);

    // symmetrized kNN graph
    std::vector<std::vector<int>> adjacency(n);
    std::vector<std::pair<int, int>> edges;
    {
        Eigen::MatrixXi is_edge = Eigen::MatrixXi::Zero(n, n);
        std::vector<int> order;
        for (int p = 0; p < n; ++p) {
            order.clear();
            for (int q = 0; q < n; ++q)
                if (q != p) order.push_back(q);
            std::sort(order.begin(), order.end(), [&](int a, int c) {
                if (D(p, a) != D(p, c)) return D(p, a) < D(p, c);
                return a < c;
            });
            for (int m = 0; m < graph_k; ++m) {
                const int q = order[m];
                is_edge(std::min(p, q), std::max(p, q)) = 1;
            }
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (is_edge(p, q)) {
                    edges.emplace_back(p, q);
                    adjacency[p].push_back(q);
                    adjacency[q].push_back(p);
                }
            }
        }
    }

    if (component_count(adjacency) > n_clusters)
        throw DisconnectedGraphError("spectral_clustering: graph has more components than clusters");

    std::vector<double> edge_dists;
    edge_dists.reserve(edges.size());
    for (const auto& [p, q] : edges) edge_dists.push_back(D(p, q));
    std::nth_element(edge_dists.begin(), edge_dists.begin() + edge_dists.size() / 2,
                     edge_dists.end());
    double bandwidth = edge_dists[edge_dists.size() / 2];
    if (bandwidth <= 0.0) bandwidth = 1.0;

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [p, q] : edges) {
        const double w = std::exp(-D(p, q) * D(p, q) / (2.0 * bandwidth * bandwidth));
        W(p, q) = w;
        W(q, p) = w;
    }

    Eigen::VectorXd deg = W.rowwise().sum();
    Eigen::VectorXd inv_sqrt(n);
    for (int p = 0; p < n; ++p) inv_sqrt(p) = deg(p) > 0.0 ? 1.0 / std::sqrt(deg(p)) : 0.0;
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) -
                        inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
    if (eig.info() != Eigen::Success)
        throw NumericalError("spectral_clustering: eigendecomposition failed");
    Eigen::MatrixXd rows = eig.eigenvectors().leftCols(n_clusters);
    for (int p = 0; p < n; ++p) {
        const double norm = rows.row(p).norm();
        if (norm > 0.0) rows.row(p) /= norm;
    }

    KMeansResult best;
    bool first = true;
    for (int restart = 0; restart < 20; ++restart) {
        Rng stream = rng.spawn();
        KMeansResult cand = kmeans_once(rows, n_clusters, stream);
        if (first || cand.inertia < best.inertia) {
            best = std::move(cand);
            first = false;
        }
    }
    return best.labels;
}

double adjusted_rand_index(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw ShapeError("adjusted_rand_index: length mismatch");
    if (a.empty()) throw InvalidArgumentError("adjusted_rand_index: empty labelings");
    const double n = static_cast<double>(a.size());

    std::map<std::pair<int, int>, double> cont;
    std::map<int, double> row_sums, col_sums;
    for (std::size_t p = 0; p < a.size(); ++p) {
        cont[{a[p], b[p]}] += 1.0;
        row_sums[a[p]] += 1.0;
        col_sums[b[p]] += 1.0;
    }

    const auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : cont) sum_cells += choose2(count);
    for (const auto& [label, count] : row_sums) sum_rows += choose2(count);
    for (const auto& [label, count] : col_sums) sum_cols += choose2(count);

    const double expected = sum_rows * sum_cols / choose2(n);
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;
    return (sum_cells - expected) / (max_index - expected);
}

} // namespace tuq
