/// @file  triplets.hpp
/// @brief Triplet answers, the log-normal comparison noise model, and
///        the line-oriented triplet file format.
///
/// A triplet (i, j, l) records the answer "point i is closer to j than
/// to l", i.e. it asserts delta_ij < delta_il.

#pragma once

#include "tuq/errors.hpp"
#include "tuq/rng.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace tuq {

struct Triplet {
    int i = 0; ///< anchor
    int j = 0; ///< closer candidate
    int l = 0; ///< farther candidate

    bool operator==(const Triplet&) const = default;

    /// The complementary answer to the same comparison.
    Triplet reversed() const { return {i, l, j}; }

    /// Indices pairwise distinct and inside [0, n).
    bool valid_for(int n) const {
        return i != j && i != l && j != l &&
               i >= 0 && j >= 0 && l >= 0 && i < n && j < n && l < n;
    }
};

/// An ordered multiset of answers over n points. Duplicate answers are
/// legal: the same comparison may be queried several times.
struct TripletSet {
    int n = 0;
    std::vector<Triplet> answers;

    std::size_t size() const { return answers.size(); }
    bool empty() const { return answers.empty(); }

    bool operator==(const TripletSet&) const = default;

    /// Throws IndexError/InvalidArgumentError when any answer is invalid.
    void validate() const;
};

/// Log-normal noise on observed distances: log z ~ N(log delta, sigma^2).
/// sigma = 0 reproduces the true answers deterministically.
struct NoiseModel {
    double sigma = 0.0;

    NoiseModel() = default;
    explicit NoiseModel(double s) : sigma(s) {
        if (!(sigma >= 0.0)) throw InvalidArgumentError("NoiseModel: sigma must be >= 0");
    }
};

enum class Orientation { JCloser, LCloser };

/// Number of distinct unordered comparisons {i, (j, l)} on n points.
inline std::uint64_t comparison_count(int n) {
    if (n < 3) return 0;
    return static_cast<std::uint64_t>(n) * (n - 1) * (n - 2) / 2;
}

/// Enumerates every comparison once, oriented by the true distances of
/// X_star. Throws TieError when two distances from a common anchor are
/// exactly equal.
TripletSet all_true_triplets(const Eigen::MatrixXd& X_star);

/// Answers a single comparison between two known distances under the
/// noise model. With sigma > 0 the probability of JCloser is
/// Phi((log delta_il - log delta_ij) / (sigma * sqrt(2))).
Orientation answer_comparison(double delta_ij, double delta_il,
                              const NoiseModel& noise, Rng& rng);

/// Draws `count` comparisons uniformly with replacement and answers each
/// through the noise model.
TripletSet sample_noisy_triplets(const Eigen::MatrixXd& X_star, std::size_t count,
                                 const NoiseModel& noise, Rng& rng);

/// Fraction variant: count = floor(fraction * n(n-1)(n-2)/2), fraction in (0, 1].
TripletSet sample_noisy_triplets_fraction(const Eigen::MatrixXd& X_star, double fraction,
                                          const NoiseModel& noise, Rng& rng);

/// Fraction of answers (i,j,l) in S with D_ij < D_il; ties count as violations.
double agreement_fraction(const TripletSet& S, const Eigen::MatrixXd& D);

/// Triplet file format: first line "n=<int>", then one "i,j,l" record per
/// line, 0-based, no trailing whitespace. Write order equals input order.
TripletSet read_triplets(const std::string& path);
void write_triplets(const TripletSet& S, const std::string& path);

} // namespace tuq
