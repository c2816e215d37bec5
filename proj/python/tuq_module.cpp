// Python bindings for the core operations: triplet generation, embedding,
// bootstrap/Bayesian ensembles, uncertainty estimates and the evaluation
// metrics. Matrices cross the boundary as numpy arrays via Eigen.

#include "tuq/datasets.hpp"
#include "tuq/embedding.hpp"
#include "tuq/ensemble.hpp"
#include "tuq/eval.hpp"
#include "tuq/experiments.hpp"
#include "tuq/psychophysics.hpp"
#include "tuq/triplets.hpp"
#include "tuq/uncertainty.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>

namespace py = pybind11;
using namespace tuq;

namespace {

LossSpec loss_from(const std::string& name, double alpha, double mu, double lambda) {
    LossSpec spec = loss_spec_from_name(name);
    if (alpha > 0.0) spec.alpha = alpha;
    if (mu >= 0.0) spec.mu = mu;
    if (lambda >= 0.0) spec.lambda = lambda;
    return spec;
}

OptimizerConfig opt_from(int max_iters, int restarts, double tolerance, double init_scale) {
    OptimizerConfig cfg;
    cfg.max_iters = max_iters;
    cfg.restarts = restarts;
    cfg.tolerance = tolerance;
    cfg.init_scale = init_scale;
    return cfg;
}

py::array_t<int> answers_to_array(const TripletSet& S) {
    py::array_t<int> out({static_cast<py::ssize_t>(S.size()), py::ssize_t{3}});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t k = 0; k < static_cast<py::ssize_t>(S.size()); ++k) {
        view(k, 0) = S.answers[k].i;
        view(k, 1) = S.answers[k].j;
        view(k, 2) = S.answers[k].l;
    }
    return out;
}

TripletSet triplets_from(int n, const py::array_t<int>& answers) {
    if (answers.ndim() != 2 || answers.shape(1) != 3)
        throw InvalidArgumentError("answers must be an (m, 3) integer array");
    TripletSet S;
    S.n = n;
    auto view = answers.unchecked<2>();
    S.answers.reserve(answers.shape(0));
    for (py::ssize_t k = 0; k < answers.shape(0); ++k)
        S.answers.push_back({view(k, 0), view(k, 1), view(k, 2)});
    S.validate();
    return S;
}

} // namespace

PYBIND11_MODULE(tuq, m) {
    m.doc() = "Ordinal embedding from triplet comparisons with bootstrap and "
              "Bayesian uncertainty estimates";

    py::register_exception<Error>(m, "TuqError");

    py::class_<TripletSet>(m, "TripletSet")
        .def(py::init(&triplets_from), py::arg("n"), py::arg("answers"))
        .def_readonly("n", &TripletSet::n)
        .def_property_readonly("answers", &answers_to_array)
        .def("__len__", [](const TripletSet& S) { return S.size(); });

    py::class_<EmbedResult>(m, "EmbedResult")
        .def_readonly("coords", &EmbedResult::coords)
        .def_readonly("loss", &EmbedResult::loss)
        .def_readonly("grad_norm", &EmbedResult::grad_norm)
        .def_readonly("iterations", &EmbedResult::iterations)
        .def_readonly("converged", &EmbedResult::converged);

    py::class_<EmbeddingEnsemble>(m, "EmbeddingEnsemble")
        .def_readonly("members", &EmbeddingEnsemble::members)
        .def_property_readonly("aligned",
                               [](const EmbeddingEnsemble& E) { return E.aligned; })
        .def("__len__", [](const EmbeddingEnsemble& E) { return E.size(); });

    py::class_<DistanceStats>(m, "DistanceStats")
        .def_readonly("rho_bar", &DistanceStats::rho_bar)
        .def_readonly("sigma_bar", &DistanceStats::sigma_bar);

    py::class_<PointStats>(m, "PointStats")
        .def_readonly("means", &PointStats::means)
        .def_readonly("covariances", &PointStats::covariances);

    m.def(
        "all_true_triplets",
        [](const Eigen::MatrixXd& X) { return all_true_triplets(X); },
        py::arg("points"),
        "Enumerate every comparison once, oriented by true distances");

    m.def(
        "sample_noisy_triplets",
        [](const Eigen::MatrixXd& X, std::size_t count, double sigma, std::uint64_t seed) {
            Rng rng(seed);
            return sample_noisy_triplets(X, count, NoiseModel(sigma), rng);
        },
        py::arg("points"), py::arg("count"), py::arg("sigma") = 0.0, py::arg("seed") = 1,
        "Draw comparisons with replacement under log-normal distance noise");

    m.def(
        "agreement_fraction",
        [](const TripletSet& S, const Eigen::MatrixXd& D) { return agreement_fraction(S, D); },
        py::arg("triplets"), py::arg("distances"));

    m.def("read_triplets", &read_triplets, py::arg("path"));
    m.def("write_triplets", &write_triplets, py::arg("triplets"), py::arg("path"));

    m.def(
        "triplet_probability",
        [](const std::string& loss, const Eigen::MatrixXd& X, int i, int j, int l, double alpha,
           double mu) {
            return triplet_probability(loss_from(loss, alpha, mu, -1.0), X, {i, j, l});
        },
        py::arg("loss"), py::arg("coords"), py::arg("i"), py::arg("j"), py::arg("l"),
        py::arg("alpha") = 0.0, py::arg("mu") = 0.05);

    m.def(
        "embed",
        [](const TripletSet& S, int d, const std::string& loss, std::uint64_t seed,
           int max_iters, int restarts, double tolerance, double init_scale, double alpha,
           double mu, double lambda) {
            Rng rng(seed);
            return embed(S, d, loss_from(loss, alpha, mu, lambda),
                         opt_from(max_iters, restarts, tolerance, init_scale), rng);
        },
        py::arg("triplets"), py::arg("d"), py::arg("loss") = "ste", py::arg("seed") = 1,
        py::arg("max_iters") = 2000, py::arg("restarts") = 3, py::arg("tolerance") = 1e-7,
        py::arg("init_scale") = 0.1, py::arg("alpha") = 0.0, py::arg("mu") = 0.05,
        py::arg("lambda_") = 0.01,
        "Gradient-descent ordinal embedding; returns the best restart");

    m.def(
        "bootstrap_ensemble",
        [](const TripletSet& S, int d, const std::string& loss, int b, double r,
           std::uint64_t seed, int max_iters, int restarts) {
            Rng rng(seed);
            return bootstrap_ensemble(S, d, loss_spec_from_name(loss), b, r,
                                      opt_from(max_iters, restarts, 1e-7, 0.1), rng);
        },
        py::arg("triplets"), py::arg("d"), py::arg("loss") = "ste", py::arg("b") = 20,
        py::arg("r") = 0.4, py::arg("seed") = 1, py::arg("max_iters") = 2000,
        py::arg("restarts") = 1,
        "Triplet-subsampling bootstrap, Procrustes-aligned to a random reference");

    m.def(
        "bayesian_ensemble",
        [](const TripletSet& S, int d, const std::string& loss, double prior_scale,
           int n_samples, int thinning, std::uint64_t seed, int max_iters, int restarts) {
            Rng rng(seed);
            return bayesian_ensemble(S, d, loss_spec_from_name(loss), PriorSpec(prior_scale),
                                     n_samples, thinning, opt_from(max_iters, restarts, 1e-7, 0.1),
                                     rng);
        },
        py::arg("triplets"), py::arg("d"), py::arg("loss") = "ste",
        py::arg("prior_scale") = 15.0, py::arg("n_samples") = 500, py::arg("thinning") = 1,
        py::arg("seed") = 1, py::arg("max_iters") = 2000, py::arg("restarts") = 3,
        "Elliptical-slice samples from the posterior over embeddings");

    m.def(
        "procrustes_align",
        [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& ref) {
            return procrustes_align(X, ref);
        },
        py::arg("coords"), py::arg("reference"));

    m.def("distance_stats", &distance_stats, py::arg("ensemble"));
    m.def("point_stats", &point_stats, py::arg("ensemble"));
    m.def("triplet_uncertainty", &triplet_uncertainty, py::arg("stats"), py::arg("i"),
          py::arg("j"), py::arg("l"));
    m.def("folded_average_uncertainty", &folded_average_uncertainty, py::arg("stats"));
    m.def("true_triplet_average_uncertainty", &true_triplet_average_uncertainty,
          py::arg("stats"), py::arg("truth"));

    m.def(
        "predict_with_abstention",
        [](const DistanceStats& stats, int i, int j, int l, double t) {
            const Prediction p = predict_with_abstention(stats, i, j, l, t);
            const char* verdict = p.verdict == Verdict::CloserJ   ? "closer_j"
                                  : p.verdict == Verdict::CloserL ? "closer_l"
                                                                  : "abstain";
            return py::make_tuple(verdict, p.pi);
        },
        py::arg("stats"), py::arg("i"), py::arg("j"), py::arg("l"), py::arg("t"),
        "Returns (verdict, pi); abstains when pi lies in [1 - t, t]");

    m.def(
        "select_uncertain_batch",
        [](const DistanceStats& stats, std::size_t k) {
            const std::vector<Comparison> batch = select_uncertain_batch(stats, k);
            py::array_t<int> out({static_cast<py::ssize_t>(batch.size()), py::ssize_t{3}});
            auto view = out.mutable_unchecked<2>();
            for (py::ssize_t q = 0; q < static_cast<py::ssize_t>(batch.size()); ++q) {
                view(q, 0) = batch[q].i;
                view(q, 1) = batch[q].j;
                view(q, 2) = batch[q].l;
            }
            return out;
        },
        py::arg("stats"), py::arg("k"),
        "The k comparisons with pi closest to 0.5, as an (k, 3) index array");

    m.def("procrustes_distance", &procrustes_distance, py::arg("coords"), py::arg("reference"));
    m.def("procrustes_distance_scaled", &procrustes_distance_scaled, py::arg("coords"),
          py::arg("reference"));
    m.def(
        "knn_error",
        [](const Eigen::MatrixXd& X, const std::vector<int>& labels, int k) {
            return knn_error(X, labels, k);
        },
        py::arg("coords"), py::arg("labels"), py::arg("k") = 5);
    m.def(
        "spectral_clustering",
        [](const Eigen::MatrixXd& X, int n_clusters, int graph_k, std::uint64_t seed) {
            Rng rng(seed);
            return spectral_clustering(X, n_clusters, graph_k, rng);
        },
        py::arg("coords"), py::arg("n_clusters"), py::arg("graph_k") = 10, py::arg("seed") = 1);
    m.def("adjusted_rand_index", &adjusted_rand_index, py::arg("a"), py::arg("b"));

    m.def(
        "paper_gaussian_mixture_sample",
        [](int n, std::uint64_t seed) {
            Rng rng(seed);
            const PointSet set = sample_mixture(paper_gaussian_mixture(), n, rng);
            return py::make_tuple(set.points, set.labels);
        },
        py::arg("n"), py::arg("seed") = 1,
        "Draw labeled points from the three-component benchmark mixture");

    m.def(
        "pca_project",
        [](const Eigen::MatrixXd& features, int d_true) {
            return pca_project(features, d_true).points;
        },
        py::arg("features"), py::arg("d_true"));

    m.def("stimulus_grid", &stimulus_grid, py::arg("n_stimuli"));
    m.def(
        "sample_perception_functions",
        [](double lengthscale, int n_stimuli, int n_observers, std::uint64_t seed) {
            Rng rng(seed);
            return sample_perception_functions(GpSpec(lengthscale), stimulus_grid(n_stimuli),
                                               n_observers, rng);
        },
        py::arg("lengthscale"), py::arg("n_stimuli") = 20, py::arg("n_observers") = 50,
        py::arg("seed") = 1);
    m.def(
        "run_psycho_experiment",
        [](double lengthscale, int n_stimuli, int n_observers, int triplets_per_observer,
           int b, double r, std::uint64_t seed) {
            PsychoConfig cfg;
            cfg.n_stimuli = n_stimuli;
            cfg.n_observers = n_observers;
            cfg.triplets_per_observer = triplets_per_observer;
            cfg.replicas = b;
            cfg.subsample = r;
            Rng rng(seed);
            const PsychoResult result = run_psycho_experiment(GpSpec(lengthscale), cfg, rng);
            return py::make_tuple(result.stimuli, result.mean, result.stddev);
        },
        py::arg("lengthscale"), py::arg("n_stimuli") = 20, py::arg("n_observers") = 50,
        py::arg("triplets_per_observer") = 100, py::arg("b") = 50, py::arg("r") = 0.1,
        py::arg("seed") = 1,
        "Returns (stimuli, mean, std) of the normalized 1-D bootstrap embedding");
}
