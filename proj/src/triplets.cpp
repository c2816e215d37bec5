#include "tuq/triplets.hpp"

#include "tuq/math_util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tuq {

void TripletSet::validate() const {
    if (n < 0) throw InvalidArgumentError("TripletSet: negative point count");
    for (const Triplet& t : answers) {
        if (t.i == t.j || t.i == t.l || t.j == t.l)
            throw InvalidArgumentError("TripletSet: indices not pairwise distinct");
        if (t.i < 0 || t.j < 0 || t.l < 0 || t.i >= n || t.j >= n || t.l >= n)
            throw IndexError("TripletSet: index out of range for n=" + std::to_string(n));
    }
}

TripletSet all_true_triplets(const Eigen::MatrixXd& X_star) {
    const int n = static_cast<int>(X_star.rows());
    if (n < 3) throw InvalidArgumentError("all_true_triplets: need at least 3 points");

    const Eigen::MatrixXd D = pairwise_distances(X_star);
    TripletSet S;
    S.n = n;
    S.answers.reserve(comparison_count(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            for (int l = j + 1; l < n; ++l) {
                if (l == i) continue;
                const double dij = D(i, j);
                const double dil = D(i, l);
                if (dij == dil)
                    throw TieError("all_true_triplets: tie at anchor " + std::to_string(i) +
                                   " between " + std::to_string(j) + " and " + std::to_string(l));
                if (dij < dil)
                    S.answers.push_back({i, j, l});
                else
                    S.answers.push_back({i, l, j});
            }
        }
    }
    return S;
}

Orientation answer_comparison(double delta_ij, double delta_il,
                              const NoiseModel& noise, Rng& rng) {
    if (noise.sigma == 0.0) {
        if (delta_ij == delta_il)
            throw TieError("answer_comparison: equal distances under sigma=0");
        return delta_ij < delta_il ? Orientation::JCloser : Orientation::LCloser;
    }
    if (delta_ij <= 0.0 || delta_il <= 0.0)
        throw DomainError("answer_comparison: non-positive distance under sigma>0");
    const double z_ij = std::log(delta_ij) + noise.sigma * rng.normal();
    const double z_il = std::log(delta_il) + noise.sigma * rng.normal();
    return z_ij < z_il ? Orientation::JCloser : Orientation::LCloser;
}

namespace {

/// Uniform comparison (i, {j, l}): anchor uniform, then an ordered pair of
/// distinct non-anchor indices. Every unordered comparison has the same mass.
Triplet draw_comparison(int n, Rng& rng) {
    const int i = static_cast<int>(rng.integer(n));
    int j = static_cast<int>(rng.integer(n - 1));
    if (j >= i) ++j;
    int l = static_cast<int>(rng.integer(n - 2));
    if (l >= std::min(i, j)) ++l;
    if (l >= std::max(i, j)) ++l;
    return {i, j, l};
}

} // namespace

TripletSet sample_noisy_triplets(const Eigen::MatrixXd& X_star, std::size_t count,
                                 const NoiseModel& noise, Rng& rng) {
    const int n = static_cast<int>(X_star.rows());
    if (n < 3) throw InvalidArgumentError("sample_noisy_triplets: need at least 3 points");
    if (count < 1) throw InvalidArgumentError("sample_noisy_triplets: count must be >= 1");

    const Eigen::MatrixXd D = pairwise_distances(X_star);
    TripletSet S;
    S.n = n;
    S.answers.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Triplet c = draw_comparison(n, rng);
        const Orientation o = answer_comparison(D(c.i, c.j), D(c.i, c.l), noise, rng);
        S.answers.push_back(o == Orientation::JCloser ? c : c.reversed());
    }
    return S;
}

TripletSet sample_noisy_triplets_fraction(const Eigen::MatrixXd& X_star, double fraction,
                                          const NoiseModel& noise, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InvalidArgumentError("sample_noisy_triplets_fraction: fraction must be in (0, 1]");
    const int n = static_cast<int>(X_star.rows());
    const auto count = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(comparison_count(n))));
    return sample_noisy_triplets(X_star, count, noise, rng);
}

double agreement_fraction(const TripletSet& S, const Eigen::MatrixXd& D) {
    if (D.rows() != D.cols() || D.rows() < S.n)
        throw ShapeError("agreement_fraction: distance matrix does not cover the point set");
    if (S.empty()) return 0.0;
    std::size_t satisfied = 0;
    for (const Triplet& t : S.answers)
        if (D(t.i, t.j) < D(t.i, t.l)) ++satisfied;
    return static_cast<double>(satisfied) / static_cast<double>(S.size());
}

TripletSet read_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_triplets: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path + ":1: missing header line");
    int n = 0;
    if (std::sscanf(line.c_str(), "n=%d", &n) != 1 || n < 0)
        throw ParseError(path + ":1: expected header \"n=<int>\", got \"" + line + "\"");

    TripletSet S;
    S.n = n;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Triplet t;
        char trailing = 0;
        const int fields = std::sscanf(line.c_str(), "%d,%d,%d%c", &t.i, &t.j, &t.l, &trailing);
        if (fields != 3)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected \"i,j,l\", got \"" + line + "\"");
        if (t.i == t.j || t.i == t.l || t.j == t.l)
            throw ParseError(path + ":" + std::to_string(lineno) + ": indices not distinct");
        if (t.i < 0 || t.j < 0 || t.l < 0)
            throw ParseError(path + ":" + std::to_string(lineno) + ": negative index");
        if (t.i >= n || t.j >= n || t.l >= n)
            throw IndexError(path + ":" + std::to_string(lineno) +
                             ": index >= declared n=" + std::to_string(n));
        S.answers.push_back(t);
    }
    return S;
}

void write_triplets(const TripletSet& S, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_triplets: cannot open " + path);
    out << "n=" << S.n << "\n";
    for (const Triplet& t : S.answers)
        out << t.i << ',' << t.j << ',' << t.l << "\n";
}

} // namespace tuq
