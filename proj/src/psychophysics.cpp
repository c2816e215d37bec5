#include "tuq/psychophysics.hpp"

#include "tuq/ensemble.hpp"
#include "tuq/uncertainty.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace tuq {

double GpSpec::mean(double x) const {
    return 1.0 / (1.0 + std::exp(-25.0 * (x - 0.5)));
}

double GpSpec::kernel(double a, double b) const {
    const double diff = a - b;
    return std::exp(-diff * diff / (2.0 * lengthscale * lengthscale));
}

Eigen::VectorXd stimulus_grid(int n_stimuli) {
    if (n_stimuli < 2) throw InvalidArgumentError("stimulus_grid: need at least 2 stimuli");
    Eigen::VectorXd grid(n_stimuli);
    for (int k = 0; k < n_stimuli; ++k)
        grid(k) = static_cast<double>(k) / static_cast<double>(n_stimuli - 1);
    return grid;
}

std::vector<PerceptionFunction> sample_perception_functions(const GpSpec& spec,
                                                            const Eigen::VectorXd& grid,
                                                            int n_observers, Rng& rng) {
    if (grid.size() < 2) throw InvalidArgumentError("sample_perception_functions: grid too small");
    if (n_observers < 1)
        throw InvalidArgumentError("sample_perception_functions: n_observers must be >= 1");
    const int g = static_cast<int>(grid.size());

    // conditioning inputs and targets
    const Eigen::Vector2d inputs(0.0, 1.0);
    const Eigen::Vector2d targets(0.0, 1.0);

    Eigen::Matrix2d K_cond;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) K_cond(a, b) = spec.kernel(inputs(a), inputs(b));

    Eigen::MatrixXd K_cross(g, 2); // k(grid, inputs)
    for (int p = 0; p < g; ++p)
        for (int a = 0; a < 2; ++a) K_cross(p, a) = spec.kernel(grid(p), inputs(a));

    Eigen::MatrixXd K_grid(g, g);
    for (int p = 0; p < g; ++p)
        for (int q = 0; q < g; ++q) K_grid(p, q) = spec.kernel(grid(p), grid(q));

    const Eigen::LDLT<Eigen::Matrix2d> solver(K_cond);
    Eigen::Vector2d m_inputs;
    for (int a = 0; a < 2; ++a) m_inputs(a) = spec.mean(inputs(a));

    // exact conditional mean and covariance
    Eigen::VectorXd m_post(g);
    for (int p = 0; p < g; ++p) m_post(p) = spec.mean(grid(p));
    m_post += K_cross * solver.solve(targets - m_inputs);
    Eigen::MatrixXd K_post = K_grid - K_cross * solver.solve(K_cross.transpose());

    // grid points that coincide with a conditioning input are deterministic
    std::vector<int> interior;
    interior.reserve(g);
    for (int p = 0; p < g; ++p) {
        if (grid(p) == inputs(0)) {
            m_post(p) = targets(0);
        } else if (grid(p) == inputs(1)) {
            m_post(p) = targets(1);
        } else {
            interior.push_back(p);
        }
    }

    const int gi = static_cast<int>(interior.size());
    Eigen::MatrixXd chol;
    if (gi > 0) {
        Eigen::MatrixXd K_int(gi, gi);
        for (int p = 0; p < gi; ++p)
            for (int q = 0; q < gi; ++q) K_int(p, q) = K_post(interior[p], interior[q]);

        double jitter = 1e-10;
        for (;;) {
            Eigen::LLT<Eigen::MatrixXd> llt(
                K_int + jitter * Eigen::MatrixXd::Identity(gi, gi));
            if (llt.info() == Eigen::Success) {
                chol = llt.matrixL();
                break;
            }
            if (jitter >= 1e-6)
                throw CholeskyError("sample_perception_functions: posterior kernel stayed "
                                    "indefinite at jitter 1e-6");
            jitter *= 10.0;
        }
    }

    std::vector<PerceptionFunction> functions;
    functions.reserve(n_observers);
    for (int o = 0; o < n_observers; ++o) {
        PerceptionFunction f = m_post;
        if (gi > 0) {
            Eigen::VectorXd z(gi);
            for (int p = 0; p < gi; ++p) z(p) = rng.normal();
            const Eigen::VectorXd noise = chol * z;
            for (int p = 0; p < gi; ++p) f(interior[p]) += noise(p);
        }
        functions.push_back(std::move(f));
    }
    return functions;
}

TripletSet observer_triplets(const PerceptionFunction& f, std::size_t count, Rng& rng) {
    const int n = static_cast<int>(f.size());
    if (n < 3) throw InvalidArgumentError("observer_triplets: need at least 3 stimuli");
    if (count < 1) throw InvalidArgumentError("observer_triplets: count must be >= 1");

    TripletSet S;
    S.n = n;
    S.answers.reserve(count);
    while (S.answers.size() < count) {
        int attempts = 0;
        for (;;) {
            const int i = static_cast<int>(rng.integer(n));
            int j = static_cast<int>(rng.integer(n - 1));
            if (j >= i) ++j;
            int l = static_cast<int>(rng.integer(n - 2));
            if (l >= std::min(i, j)) ++l;
            if (l >= std::max(i, j)) ++l;
            const double dij = std::abs(f(i) - f(j));
            const double dil = std::abs(f(i) - f(l));
            if (dij < dil) {
                S.answers.push_back({i, j, l});
                break;
            }
            if (dij > dil) {
                S.answers.push_back({i, l, j});
                break;
            }
            if (++attempts >= 1000)
                throw NonTerminationError("observer_triplets: persistent perceived-distance ties");
        }
    }
    return S;
}

PsychoResult run_psycho_experiment(const GpSpec& spec, const PsychoConfig& cfg, Rng& rng) {
    if (cfg.n_stimuli < 3 || cfg.n_observers < 1 || cfg.triplets_per_observer < 1 ||
        cfg.replicas < 2 || !(cfg.subsample > 0.0 && cfg.subsample < 1.0))
        throw InvalidArgumentError("run_psycho_experiment: invalid configuration");

    const Eigen::VectorXd grid = stimulus_grid(cfg.n_stimuli);
    const std::uint64_t seed_record = rng.bits();
    Rng root(seed_record);

    Rng draw_rng = root.spawn();
    const std::vector<PerceptionFunction> observers =
        sample_perception_functions(spec, grid, cfg.n_observers, draw_rng);

    TripletSet pooled;
    pooled.n = cfg.n_stimuli;
    pooled.answers.reserve(static_cast<std::size_t>(cfg.n_observers) * cfg.triplets_per_observer);
    for (const PerceptionFunction& f : observers) {
        Rng obs_rng = root.spawn();
        const TripletSet S = observer_triplets(f, cfg.triplets_per_observer, obs_rng);
        pooled.answers.insert(pooled.answers.end(), S.answers.begin(), S.answers.end());
    }

    Rng boot_rng = root.spawn();
    EmbeddingEnsemble ensemble = bootstrap_ensemble(pooled, 1, cfg.loss, cfg.replicas,
                                                    cfg.subsample, cfg.opt, boot_rng);

    // affine endpoint normalization: v -> (v - v0) / (v1 - v0)
    const int last = cfg.n_stimuli - 1;
    for (Embedding& member : ensemble.members) {
        const double v0 = member(0, 0);
        const double v1 = member(last, 0);
        if (v0 == v1)
            throw DegenerateError("run_psycho_experiment: member embeds stimuli 0 and 1 at the "
                                  "same location");
        member = (member.array() - v0) / (v1 - v0);
    }

    PsychoResult result;
    result.stimuli = grid;
    result.lengthscale = spec.lengthscale;
    result.seed = seed_record;
    result.mean = Eigen::VectorXd::Zero(cfg.n_stimuli);
    for (const Embedding& member : ensemble.members) result.mean += member.col(0);
    result.mean /= static_cast<double>(ensemble.size());

    Eigen::VectorXd var = Eigen::VectorXd::Zero(cfg.n_stimuli);
    for (const Embedding& member : ensemble.members) {
        const Eigen::VectorXd dev = member.col(0) - result.mean;
        var += dev.cwiseProduct(dev);
    }
    var /= static_cast<double>(ensemble.size() - 1);
    result.stddev = var.cwiseSqrt();
    return result;
}

} // namespace tuq
