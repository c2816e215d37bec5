#include "tuq/embedding.hpp"

#include "tuq/io.hpp"
#include "tuq/math_util.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace tuq {

std::string LossSpec::name() const {
    switch (kind) {
        case LossKind::Ste: return "ste";
        case LossKind::Tste: return "tste";
        case LossKind::CrowdKernel: return "ck";
        case LossKind::GnmdsHinge: return "gnmds";
    }
    return "unknown";
}

void LossSpec::validate() const {
    if (kind == LossKind::Tste && alpha < 0.0)
        throw InvalidArgumentError("LossSpec: alpha must be > 0 (or 0 for automatic)");
    if (mu < 0.0) throw InvalidArgumentError("LossSpec: mu must be >= 0");
    if (lambda < 0.0) throw InvalidArgumentError("LossSpec: lambda must be >= 0");
}

LossSpec loss_spec_from_name(const std::string& name) {
    if (name == "ste") return LossSpec::ste();
    if (name == "tste") return LossSpec::tste();
    if (name == "ck") return LossSpec::crowd_kernel();
    if (name == "gnmds") return LossSpec::gnmds_hinge();
    throw ConfigError("unknown loss \"" + name + "\" (expected ste|tste|ck|gnmds)");
}

void OptimizerConfig::validate() const {
    if (max_iters < 1 || step_size <= 0.0 || backtrack <= 0.0 || backtrack >= 1.0 ||
        tolerance <= 0.0 || tolerance >= 1.0 || restarts < 1 || init_scale <= 0.0)
        throw InvalidArgumentError("OptimizerConfig: all fields must be positive, "
                                   "backtrack and tolerance < 1");
}

namespace {

double sqdist(const Embedding& X, int a, int b) {
    return (X.row(a) - X.row(b)).squaredNorm();
}

void check_triplet(const Embedding& X, const Triplet& t) {
    if (!t.valid_for(static_cast<int>(X.rows())))
        throw IndexError("triplet (" + std::to_string(t.i) + "," + std::to_string(t.j) + "," +
                         std::to_string(t.l) + ") invalid for n=" + std::to_string(X.rows()));
}

} // namespace

double triplet_probability(const LossSpec& spec, const Embedding& X, const Triplet& t) {
    spec.validate();
    check_triplet(X, t);
    const double dij2 = sqdist(X, t.i, t.j);
    const double dil2 = sqdist(X, t.i, t.l);

    double p = 0.0;
    switch (spec.kind) {
        case LossKind::Ste:
            // exp(-dij2) / (exp(-dij2) + exp(-dil2)), in log space
            p = logistic(dil2 - dij2);
            break;
        case LossKind::Tste: {
            const double a = spec.resolved_alpha(X.cols());
            const double log_num = -0.5 * (a + 1.0) * std::log1p(dij2 / a);
            const double log_den = -0.5 * (a + 1.0) * std::log1p(dil2 / a);
            p = logistic(log_num - log_den);
            break;
        }
        case LossKind::CrowdKernel: {
            const double den = dij2 + dil2 + 2.0 * spec.mu;
            if (den <= 0.0)
                throw NumericalError("triplet_probability: coincident points with mu=0");
            p = (dil2 + spec.mu) / den;
            break;
        }
        case LossKind::GnmdsHinge:
            throw UnsupportedError("triplet_probability: GNMDS hinge has no probabilistic model");
    }
    if (!std::isfinite(p))
        throw NumericalError("triplet_probability: non-finite probability");
    return p;
}

namespace {

/// Shared likelihood kernel. Accumulates loss and, when grad != nullptr,
/// the exact gradient. The probabilistic losses are evaluated through
/// softplus/log1p so large distances cannot overflow.
double accumulate(const LossSpec& spec, const Embedding& X, const TripletSet& S,
                  Eigen::MatrixXd* grad) {
    const int d = static_cast<int>(X.cols());
    double loss = 0.0;

    switch (spec.kind) {
        case LossKind::Ste: {
            for (const Triplet& t : S.answers) {
                const double u = sqdist(X, t.i, t.j) - sqdist(X, t.i, t.l);
                loss += softplus(u);
                if (grad) {
                    const double w = logistic(u); // = 1 - p_ijl
                    const auto gij = 2.0 * w * (X.row(t.i) - X.row(t.j));
                    const auto gil = 2.0 * w * (X.row(t.i) - X.row(t.l));
                    grad->row(t.i) += gij - gil;
                    grad->row(t.j) -= gij;
                    grad->row(t.l) += gil;
                }
            }
            break;
        }
        case LossKind::Tste: {
            const double a = spec.resolved_alpha(d);
            const double half = 0.5 * (a + 1.0);
            for (const Triplet& t : S.answers) {
                const double dij2 = sqdist(X, t.i, t.j);
                const double dil2 = sqdist(X, t.i, t.l);
                const double u = half * (std::log1p(dij2 / a) - std::log1p(dil2 / a));
                loss += softplus(u);
                if (grad) {
                    const double w = logistic(u); // = 1 - p_ijl
                    const double cij = w * (a + 1.0) / (a + dij2);
                    const double cil = w * (a + 1.0) / (a + dil2);
                    const auto gij = cij * (X.row(t.i) - X.row(t.j));
                    const auto gil = cil * (X.row(t.i) - X.row(t.l));
                    grad->row(t.i) += gij - gil;
                    grad->row(t.j) -= gij;
                    grad->row(t.l) += gil;
                }
            }
            break;
        }
        case LossKind::CrowdKernel: {
            for (const Triplet& t : S.answers) {
                const double dij2 = sqdist(X, t.i, t.j);
                const double dil2 = sqdist(X, t.i, t.l);
                const double num = dil2 + spec.mu;
                const double den = dij2 + dil2 + 2.0 * spec.mu;
                if (num <= 0.0 || den <= 0.0)
                    throw NumericalError("loss: Crowd Kernel degenerate with mu=0");
                loss += std::log(den) - std::log(num);
                if (grad) {
                    const double dLdij2 = 1.0 / den;
                    const double dLdil2 = 1.0 / den - 1.0 / num;
                    const auto gij = 2.0 * dLdij2 * (X.row(t.i) - X.row(t.j));
                    const auto gil = 2.0 * dLdil2 * (X.row(t.i) - X.row(t.l));
                    grad->row(t.i) += gij + gil;
                    grad->row(t.j) -= gij;
                    grad->row(t.l) -= gil;
                }
            }
            break;
        }
        case LossKind::GnmdsHinge: {
            for (const Triplet& t : S.answers) {
                const double margin = 1.0 + sqdist(X, t.i, t.j) - sqdist(X, t.i, t.l);
                if (margin > 0.0) {
                    loss += margin;
                    if (grad) {
                        const auto gij = 2.0 * (X.row(t.i) - X.row(t.j));
                        const auto gil = 2.0 * (X.row(t.i) - X.row(t.l));
                        grad->row(t.i) += gij - gil;
                        grad->row(t.j) -= gij;
                        grad->row(t.l) += gil;
                    }
                }
            }
            loss += spec.lambda * X.squaredNorm();
            if (grad) *grad += 2.0 * spec.lambda * X;
            break;
        }
    }

    if (!std::isfinite(loss)) throw NumericalError("loss: non-finite value");
    return loss;
}

} // namespace

double loss_value(const LossSpec& spec, const Embedding& X, const TripletSet& S) {
    spec.validate();
    return accumulate(spec, X, S, nullptr);
}

LossGradient loss_and_gradient(const LossSpec& spec, const Embedding& X, const TripletSet& S) {
    spec.validate();
    LossGradient out;
    out.grad = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    out.loss = accumulate(spec, X, S, &out.grad);
    if (!out.grad.allFinite()) throw NumericalError("gradient: non-finite entry");
    return out;
}

EmbedResult embed_from(const Embedding& X0, const TripletSet& S, const LossSpec& spec,
                       const OptimizerConfig& cfg) {
    cfg.validate();
    if (S.empty()) throw EmptyTripletsError("embed: empty triplet set");
    S.validate();
    if (S.n > X0.rows())
        throw ShapeError("embed_from: start embedding smaller than the triplet point count");

    constexpr double armijo = 1e-4;
    Embedding X = X0;
    LossGradient lg = loss_and_gradient(spec, X, S);
    double step = cfg.step_size;
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        const double gnorm2 = lg.grad.squaredNorm();
        if (gnorm2 == 0.0) break;

        // Backtracking line search (Armijo decrease).
        double new_loss = 0.0;
        Embedding X_new;
        bool moved = false;
        while (step > 1e-16) {
            X_new = X - step * lg.grad;
            new_loss = loss_value(spec, X_new, S);
            if (new_loss <= lg.loss - armijo * step * gnorm2) {
                moved = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!moved) break;

        const double drop = lg.loss - new_loss;
        X = std::move(X_new);
        lg = loss_and_gradient(spec, X, S);
        step = std::min(step * 2.0, 1e6);
        if (drop <= cfg.tolerance * std::max(1.0, std::abs(lg.loss))) {
            ++iter;
            break;
        }
    }

    EmbedResult result;
    result.coords = std::move(X);
    result.loss = lg.loss;
    result.grad_norm = lg.grad.norm();
    result.iterations = iter;
    result.converged = result.grad_norm <= 1e-3 * std::max(1.0, result.loss);
    return result;
}

EmbedResult embed(const TripletSet& S, int d, const LossSpec& spec,
                  const OptimizerConfig& cfg, Rng& rng) {
    cfg.validate();
    if (S.empty()) throw EmptyTripletsError("embed: empty triplet set");
    if (d < 1) throw InvalidArgumentError("embed: dimension must be >= 1");
    S.validate();

    EmbedResult best;
    bool first = true;
    for (int r = 0; r < cfg.restarts; ++r) {
        const std::uint64_t restart_seed = rng.bits();
        Rng init(restart_seed);
        Embedding X0(S.n, d);
        for (int a = 0; a < S.n; ++a)
            for (int b = 0; b < d; ++b) X0(a, b) = cfg.init_scale * init.normal();

        EmbedResult candidate = embed_from(X0, S, spec, cfg);
        candidate.seed = restart_seed;
        if (first || candidate.loss < best.loss) {
            best = std::move(candidate);
            first = false;
        }
    }
    return best;
}

namespace {

std::string sidecar_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".json");
    return p.string();
}

} // namespace

void write_embedding(const std::string& csv_path, const EmbedResult& result,
                     const LossSpec& spec) {
    write_matrix_csv(csv_path, result.coords);
    nlohmann::ordered_json meta;
    meta["loss_kind"] = spec.name();
    meta["final_loss"] = result.loss;
    meta["iterations"] = result.iterations;
    meta["seed"] = result.seed;
    meta["converged"] = result.converged;
    std::ofstream out(sidecar_path(csv_path));
    if (!out) throw Error("write_embedding: cannot open " + sidecar_path(csv_path));
    out << meta.dump(2) << "\n";
}

EmbedResult read_embedding(const std::string& csv_path) {
    EmbedResult result;
    result.coords = read_matrix_csv(csv_path);
    std::ifstream in(sidecar_path(csv_path));
    if (in) {
        nlohmann::json meta = nlohmann::json::parse(in);
        result.loss = meta.value("final_loss", 0.0);
        result.iterations = meta.value("iterations", 0);
        result.seed = meta.value("seed", std::uint64_t{0});
        result.converged = meta.value("converged", false);
    }
    return result;
}

} // namespace tuq
