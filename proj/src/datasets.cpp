#include "tuq/datasets.hpp"

#include "tuq/io.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tuq {

void MixtureSpec::validate() const {
    if (means.empty() || means.size() != covariances.size() ||
        static_cast<Eigen::Index>(means.size()) != weights.size())
        throw InvalidArgumentError("MixtureSpec: component lists disagree in length");
    const Eigen::Index d = means.front().size();
    for (std::size_t c = 0; c < means.size(); ++c) {
        if (means[c].size() != d || covariances[c].rows() != d || covariances[c].cols() != d)
            throw InvalidArgumentError("MixtureSpec: component " + std::to_string(c) +
                                       " has inconsistent dimension");
        if (!covariances[c].isApprox(covariances[c].transpose(), 1e-12))
            throw InvalidArgumentError("MixtureSpec: covariance " + std::to_string(c) +
                                       " is not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(covariances[c]);
        if (llt.info() != Eigen::Success)
            throw InvalidArgumentError("MixtureSpec: covariance " + std::to_string(c) +
                                       " is not positive definite");
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
        throw InvalidArgumentError("MixtureSpec: weights must form a simplex vector");
}

MixtureSpec paper_gaussian_mixture() {
    MixtureSpec spec;
    spec.means = {Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(-2.0, -1.0),
                  Eigen::Vector2d(4.0, -2.0)};
    Eigen::Matrix2d s1, s2, s3;
    s1 << 2.0, 0.0, 0.0, 1.0;
    s2 << 1.0, 0.0, 0.0, 1.0;
    s3 << 1.0, 0.7, 0.7, 2.0;
    spec.covariances = {s1, s2, s3};
    spec.weights = Eigen::Vector3d::Constant(1.0 / 3.0);
    return spec;
}

PointSet sample_mixture(const MixtureSpec& spec, int n, Rng& rng) {
    spec.validate();
    if (n < 1) throw InvalidArgumentError("sample_mixture: n must be >= 1");

    const Eigen::Index d = spec.means.front().size();
    std::vector<Eigen::MatrixXd> chol;
    chol.reserve(spec.components());
    for (const Eigen::MatrixXd& cov : spec.covariances)
        chol.push_back(Eigen::LLT<Eigen::MatrixXd>(cov).matrixL());

    PointSet out;
    out.points.resize(n, d);
    out.labels.resize(n);
    for (int k = 0; k < n; ++k) {
        const double u = rng.uniform();
        std::size_t c = 0;
        double acc = spec.weights(0);
        while (u >= acc && c + 1 < spec.components()) acc += spec.weights(++c);

        Eigen::VectorXd z(d);
        for (Eigen::Index t = 0; t < d; ++t) z(t) = rng.normal();
        out.points.row(k) = (spec.means[c] + chol[c] * z).transpose();
        out.labels[k] = static_cast<int>(c);
    }
    return out;
}

PointSet pca_project(const Eigen::MatrixXd& features, int d_true) {
    const Eigen::Index m = features.rows();
    const Eigen::Index D = features.cols();
    if (m < 2) throw InvalidArgumentError("pca_project: need at least 2 rows");
    if (d_true < 1 || d_true > std::min(m, D))
        throw InvalidArgumentError("pca_project: d_true out of range");

    const Eigen::MatrixXd centered = features.rowwise() - features.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw NumericalError("pca_project: eigendecomposition failed");

    const Eigen::VectorXd evals = eig.eigenvalues(); // ascending
    const double lead = evals(D - 1);
    if (!(lead > 0.0)) throw RankError("pca_project: covariance has rank 0");
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < D; ++k)
        if (evals(k) > 1e-12 * lead) ++rank;
    if (rank < d_true)
        throw RankError("pca_project: covariance rank " + std::to_string(rank) +
                        " < d_true " + std::to_string(d_true));

    Eigen::MatrixXd basis(D, d_true);
    for (int k = 0; k < d_true; ++k) {
        Eigen::VectorXd v = eig.eigenvectors().col(D - 1 - k);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        basis.col(k) = v;
    }

    PointSet out;
    out.points = centered * basis;
    return out;
}

FeatureData read_features(const std::string& path, std::optional<int> label_column) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_features: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ":" + std::to_string(col) +
                                 ": not a number: \"" + cell + "\"");
            }
        }
        if (row.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty record");
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(width) + " columns, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("read_features: no records in " + path);

    int label_col = -1;
    if (label_column) {
        label_col = *label_column;
        if (label_col < 0 || static_cast<std::size_t>(label_col) >= width)
            throw InvalidArgumentError("read_features: label column out of range");
    }

    FeatureData out;
    const std::size_t d = label_column ? width - 1 : width;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    if (label_column) out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Eigen::Index c_out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<int>(c) == label_col) {
                out.labels.push_back(static_cast<int>(std::llround(rows[r][c])));
                continue;
            }
            out.features(static_cast<Eigen::Index>(r), c_out++) = rows[r][c];
        }
    }
    return out;
}

void write_features(const FeatureData& data, const std::string& path,
                    std::optional<int> label_column) {
    if (label_column && data.labels.size() != static_cast<std::size_t>(data.features.rows()))
        throw InvalidArgumentError("write_features: label length mismatch");
    std::ofstream out(path);
    if (!out) throw Error("write_features: cannot open " + path);
    const Eigen::Index width = data.features.cols() + (label_column ? 1 : 0);
    for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
        Eigen::Index c_in = 0;
        for (Eigen::Index c = 0; c < width; ++c) {
            if (c > 0) out << ',';
            if (label_column && c == *label_column)
                out << data.labels[static_cast<std::size_t>(r)];
            else
                out << format_double(data.features(r, c_in++));
        }
        out << "\n";
    }
}

} // namespace tuq
