#include "tuq/ensemble.hpp"

#include "tuq/io.hpp"
#include "tuq/math_util.hpp"

#include <json.hpp>

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace tuq {

void EmbeddingEnsemble::validate() const {
    if (members.size() < 2)
        throw InvalidArgumentError("EmbeddingEnsemble: need at least 2 members");
    const Eigen::Index n = members.front().rows();
    const Eigen::Index d = members.front().cols();
    for (const Embedding& m : members)
        if (m.rows() != n || m.cols() != d)
            throw ShapeError("EmbeddingEnsemble: members disagree in shape");
}

ProcrustesAlignment procrustes_align_full(const Embedding& X, const Embedding& X_ref) {
    if (X.rows() != X_ref.rows() || X.cols() != X_ref.cols())
        throw ShapeError("procrustes_align: shape mismatch");

    const Eigen::RowVectorXd ref_centroid = X_ref.colwise().mean();
    const Eigen::MatrixXd Xc = center_rows(X);
    const Eigen::MatrixXd Rc = center_rows(X_ref);

    const double x_norm2 = Xc.squaredNorm();
    if (x_norm2 <= 0.0 || Rc.squaredNorm() <= 0.0)
        throw DegenerateError("procrustes_align: zero Frobenius norm after centering");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xc.transpose() * Rc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesAlignment out;
    out.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.scale = svd.singularValues().sum() / x_norm2;
    out.aligned = out.scale * Xc * out.rotation;
    out.aligned.rowwise() += ref_centroid;
    return out;
}

Embedding procrustes_align(const Embedding& X, const Embedding& X_ref) {
    return procrustes_align_full(X, X_ref).aligned;
}

namespace {

/// Without-replacement subsample of size m via partial Fisher-Yates.
TripletSet subsample_triplets(const TripletSet& S, std::size_t m, Rng& rng) {
    std::vector<std::size_t> idx(S.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    TripletSet out;
    out.n = S.n;
    out.answers.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t pick = k + rng.integer(idx.size() - k);
        std::swap(idx[k], idx[pick]);
        out.answers.push_back(S.answers[idx[k]]);
    }
    return out;
}

} // namespace

EmbeddingEnsemble bootstrap_ensemble(const TripletSet& S, int d, const LossSpec& spec,
                                     int b, double r, const OptimizerConfig& cfg, Rng& rng) {
    if (b < 2) throw InvalidArgumentError("bootstrap_ensemble: b must be >= 2");
    if (!(r > 0.0 && r < 1.0))
        throw InvalidArgumentError("bootstrap_ensemble: r must be in (0, 1)");
    const auto m = static_cast<std::size_t>(std::floor(r * static_cast<double>(S.size())));
    if (m < 1) throw InvalidArgumentError("bootstrap_ensemble: floor(r * |S|) must be >= 1");

    EmbeddingEnsemble E;
    E.source = EnsembleSource::Bootstrap;
    E.subsample_fraction = r;
    E.members.reserve(b);
    E.seeds.reserve(b);
    for (int k = 0; k < b; ++k) {
        const std::uint64_t member_seed = rng.bits();
        E.seeds.push_back(member_seed);
        Rng stream(member_seed);
        const TripletSet sub = subsample_triplets(S, m, stream);
        try {
            E.members.push_back(embed(sub, d, spec, cfg, stream).coords);
        } catch (const Error& e) {
            throw Error("bootstrap_ensemble: replica " + std::to_string(k) +
                        " failed: " + e.what());
        }
    }

    E.reference = static_cast<int>(rng.integer(b));
    E.align_scales.assign(b, 1.0);
    const Embedding ref = E.members[E.reference];
    for (int k = 0; k < b; ++k) {
        if (k == E.reference) continue;
        ProcrustesAlignment a = procrustes_align_full(E.members[k], ref);
        E.members[k] = std::move(a.aligned);
        E.align_scales[k] = a.scale;
    }
    E.aligned = true;
    return E;
}

EssStepResult ess_step(const Eigen::VectorXd& x, double log_lik_x,
                       const LogLikelihood& log_lik, const PriorSpec& prior, Rng& rng) {
    if (!std::isfinite(log_lik_x))
        throw InvalidArgumentError("ess_step: log likelihood at current state not finite");

    const double tau = 2.0 * std::numbers::pi;
    const double sd = std::sqrt(prior.scale);
    Eigen::VectorXd nu(x.size());
    for (Eigen::Index k = 0; k < nu.size(); ++k) nu(k) = sd * rng.normal();

    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    const double threshold = log_lik_x + std::log(u);

    double theta = rng.uniform(0.0, tau);
    double theta_min = theta - tau;
    double theta_max = theta;

    EssStepResult out;
    out.threshold = threshold;
    for (int iter = 0; iter < 1000; ++iter) {
        ++out.proposals;
        Eigen::VectorXd proposal = std::cos(theta) * x + std::sin(theta) * nu;
        const double ll = log_lik(proposal);
        if (ll > threshold) {
            out.state = std::move(proposal);
            out.log_lik = ll;
            return out;
        }
        if (theta < 0.0)
            theta_min = theta;
        else
            theta_max = theta;
        theta = rng.uniform(theta_min, theta_max);
    }
    throw NonTerminationError("ess_step: no acceptable state after 1000 shrink iterations");
}

EmbeddingEnsemble bayesian_ensemble(const TripletSet& S, int d, const LossSpec& spec,
                                    const PriorSpec& prior, int n_samples, int thinning,
                                    const OptimizerConfig& cfg, Rng& rng,
                                    bool align_members) {
    if (n_samples < 2) throw InvalidArgumentError("bayesian_ensemble: n_samples must be >= 2");
    if (thinning < 1) throw InvalidArgumentError("bayesian_ensemble: thinning must be >= 1");
    if (!spec.probabilistic())
        throw UnsupportedError("bayesian_ensemble: the likelihood must be probabilistic "
                               "(GNMDS hinge defines no model)");

    const EmbedResult ml = embed(S, d, spec, cfg, rng);
    const int n = ml.n();

    const auto unvec = [n, d](const Eigen::VectorXd& v) {
        return Eigen::Map<const Embedding>(v.data(), n, d);
    };
    const LogLikelihood log_lik = [&](const Eigen::VectorXd& v) {
        return -loss_value(spec, unvec(v), S);
    };
    const auto center_state = [n, d, &unvec](Eigen::VectorXd& v) {
        Embedding X = unvec(v);
        X = center_rows(X);
        v = Eigen::Map<const Eigen::VectorXd>(X.data(), n * d);
    };

    Eigen::VectorXd state =
        Eigen::Map<const Eigen::VectorXd>(ml.coords.data(), n * d);
    center_state(state);
    double state_ll = log_lik(state);

    EmbeddingEnsemble E;
    E.source = EnsembleSource::Bayesian;
    E.prior_scale = prior.scale;
    E.members.reserve(n_samples);
    E.members.push_back(unvec(state));
    E.seeds.push_back(ml.seed);
    for (int s = 1; s < n_samples; ++s) {
        for (int t = 0; t < thinning; ++t) {
            EssStepResult step = ess_step(state, state_ll, log_lik, prior, rng);
            state = std::move(step.state);
            state_ll = step.log_lik;
            center_state(state);
            // centering keeps the likelihood unchanged (distances only)
        }
        E.members.push_back(unvec(state));
    }

    if (align_members) {
        E.align_scales.assign(n_samples, 1.0);
        E.reference = 0;
        for (int k = 1; k < n_samples; ++k) {
            ProcrustesAlignment a = procrustes_align_full(E.members[k], E.members[0]);
            E.members[k] = std::move(a.aligned);
            E.align_scales[k] = a.scale;
        }
        E.aligned = true;
    }
    return E;
}

void save_ensemble(const EmbeddingEnsemble& E, const std::string& dir) {
    ensure_directory(dir);
    const std::filesystem::path base(dir);
    for (int k = 0; k < E.size(); ++k)
        write_matrix_csv((base / ("member_" + std::to_string(k) + ".csv")).string(),
                         E.members[k]);

    nlohmann::ordered_json meta;
    meta["source"] = E.source == EnsembleSource::Bootstrap ? "bootstrap" : "bayesian";
    meta["b"] = E.size();
    if (E.source == EnsembleSource::Bootstrap)
        meta["subsample_fraction"] = E.subsample_fraction;
    else
        meta["prior_scale"] = E.prior_scale;
    meta["aligned"] = E.aligned;
    meta["reference"] = E.reference;
    meta["seeds"] = E.seeds;
    meta["align_scales"] = E.align_scales;
    std::ofstream out(base / "ensemble.json");
    if (!out) throw Error("save_ensemble: cannot open " + (base / "ensemble.json").string());
    out << meta.dump(2) << "\n";
}

EmbeddingEnsemble load_ensemble(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::ifstream in(base / "ensemble.json");
    if (!in) throw ParseError("load_ensemble: cannot open " + (base / "ensemble.json").string());
    nlohmann::json meta = nlohmann::json::parse(in);

    EmbeddingEnsemble E;
    E.source = meta.at("source") == "bootstrap" ? EnsembleSource::Bootstrap
                                                : EnsembleSource::Bayesian;
    E.aligned = meta.value("aligned", false);
    E.reference = meta.value("reference", -1);
    E.subsample_fraction = meta.value("subsample_fraction", 0.0);
    E.prior_scale = meta.value("prior_scale", 0.0);
    if (meta.contains("seeds")) E.seeds = meta["seeds"].get<std::vector<std::uint64_t>>();
    if (meta.contains("align_scales"))
        E.align_scales = meta["align_scales"].get<std::vector<double>>();

    const int b = meta.at("b").get<int>();
    E.members.reserve(b);
    for (int k = 0; k < b; ++k)
        E.members.push_back(
            read_matrix_csv((base / ("member_" + std::to_string(k) + ".csv")).string()));
    E.validate();
    return E;
}

} // namespace tuq
