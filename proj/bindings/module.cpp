// Python surface: the synthetic generator, clustering, the training pipeline,
// prediction, bundle IO, and a few small utilities. Matrices cross the
// boundary as C-contiguous float64 numpy arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstddef>
#include <stdexcept>

#include "bnmoe/clustering.hpp"
#include "bnmoe/dag.hpp"
#include "bnmoe/data_pipeline.hpp"
#include "bnmoe/gated_ensemble.hpp"
#include "bnmoe/harness.hpp"

namespace py = pybind11;
using namespace bnmoe;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

MatD mat_from_numpy(const DoubleArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    MatD m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> numpy_from_mat(const MatD& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

py::array_t<int> numpy_from_mat(const MatI& m) {
    py::array_t<int> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

ReturnsDataset dataset_from(const DoubleArray& S, const std::vector<int>& y) {
    ReturnsDataset ds;
    ds.S = mat_from_numpy(S);
    ds.y = y;
    if (ds.y.size() != ds.S.rows)
        throw std::invalid_argument("y length does not match the number of rows");
    ds.dates.resize(ds.S.rows);
    for (std::size_t i = 0; i < ds.S.rows; ++i) ds.dates[i] = "r" + std::to_string(i);
    ds.target_name = "python";
    return ds;
}

ExperimentConfig config_from(const std::string& method, const py::object& k, std::size_t k_min,
                             std::size_t k_max, std::size_t bins, double threshold,
                             std::size_t max_parents, double prior_count, std::size_t epochs,
                             const std::vector<std::size_t>& hidden, double dropout,
                             double minibatch_fraction, double learning_rate,
                             std::uint64_t seed) {
    ExperimentConfig cfg;
    parse_method(method, cfg.algo, cfg.criterion);
    if (k.is_none()) {
        cfg.k_selection.mode = KSelection::Mode::dynamic;
        cfg.k_selection.k_min = k_min;
        cfg.k_selection.k_max = k_max;
    } else {
        cfg.k_selection.mode = KSelection::Mode::fixed;
        cfg.k_selection.k_fixed = k.cast<std::size_t>();
    }
    cfg.bins = bins;
    cfg.h = threshold;
    cfg.max_parents = max_parents;
    cfg.prior_count = prior_count;
    cfg.train.epochs = epochs;
    cfg.train.hidden = hidden;
    cfg.train.dropout_rate = dropout;
    cfg.train.minibatch_fraction = minibatch_fraction;
    cfg.train.learning_rate = learning_rate;
    cfg.trials = 1;
    cfg.seed_base = seed;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bayesian-network-gated mixture of experts";

    py::class_<ClusterModel>(m, "ClusterModel")
        .def_readonly("k", &ClusterModel::k)
        .def_readonly("seed", &ClusterModel::seed)
        .def_readonly("inertia", &ClusterModel::inertia)
        .def_property_readonly(
            "centroids", [](const ClusterModel& c) { return numpy_from_mat(c.centroids); })
        .def_readonly("assignments", &ClusterModel::assignments)
        .def("assign",
             [](const ClusterModel& c, const std::vector<double>& x) { return assign(c, x); },
             py::arg("x"), "Index of the nearest centroid; ties break to the lowest index.");

    m.def(
        "kmeans",
        [](const DoubleArray& S, std::size_t k, std::uint64_t seed) {
            return kmeans(mat_from_numpy(S), k, seed);
        },
        py::arg("S"), py::arg("k"), py::arg("seed") = 0,
        "Lloyd's algorithm from a seeded k-means++ initialization.");

    m.def(
        "xmeans",
        [](const DoubleArray& S, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
            return xmeans(mat_from_numpy(S), k_min, k_max, seed);
        },
        py::arg("S"), py::arg("k_min") = 2, py::arg("k_max") = 10, py::arg("seed") = 0,
        "Grow k by BIC-improving cluster splits, then refine globally.");

    m.def(
        "synth",
        [](std::size_t regimes, std::size_t n_train, std::size_t n_test, std::size_t d,
           double noise, double sigma, double separation, double margin, std::uint64_t seed) {
            SynthSpec sp;
            sp.regimes = regimes;
            sp.n_train = n_train;
            sp.n_test = n_test;
            sp.d = d;
            sp.noise = noise;
            sp.sigma = sigma;
            sp.separation = separation;
            sp.margin = margin;
            sp.seed = seed;
            const SynthData sd = synth_generate(sp);
            py::dict out;
            out["train_S"] = numpy_from_mat(sd.train.S);
            out["train_y"] = py::cast(sd.train.y);
            out["test_S"] = numpy_from_mat(sd.test.S);
            out["test_y"] = py::cast(sd.test.y);
            out["train_regimes"] = py::cast(sd.train_regimes);
            out["test_regimes"] = py::cast(sd.test_regimes);
            out["bayes_optimal"] = sd.bayes_optimal;
            return out;
        },
        py::arg("regimes") = 6, py::arg("n_train") = 4000, py::arg("n_test") = 1000,
        py::arg("d") = 6, py::arg("noise") = 0.15, py::arg("sigma") = 0.5,
        py::arg("separation") = 8.0, py::arg("margin") = 1.5, py::arg("seed") = 0,
        "Labelled mixture of well-separated Gaussian regimes.");

    py::class_<GatedEnsemble>(m, "GatedEnsemble")
        .def_property_readonly("k", &GatedEnsemble::k)
        .def_readonly("h", &GatedEnsemble::h)
        .def(
            "predict",
            [](const GatedEnsemble& ens, const DoubleArray& S, bool allow_missing) {
                const BatchPrediction bp = predict_batch(ens, mat_from_numpy(S), allow_missing);
                py::dict out;
                out["labels"] = py::cast(bp.labels);
                out["gate"] = numpy_from_mat(bp.P);
                out["gate_thresholded"] = numpy_from_mat(bp.P_hat);
                out["combined"] = numpy_from_mat(bp.combined);
                out["imputed"] = numpy_from_mat(bp.imputed);
                return out;
            },
            py::arg("S"), py::arg("allow_missing") = false,
            "Gate-weighted expert predictions per row. NaN cells count as "
            "missing and require allow_missing.")
        .def("save", &save_bundle, py::arg("dir"),
             "Write the bundle (manifest, network, clusters, experts) to a directory.")
        .def_static("load", &load_bundle, py::arg("dir"));

    m.def(
        "train",
        [](const DoubleArray& S, const std::vector<int>& y, const std::string& method,
           const py::object& k, std::size_t k_min, std::size_t k_max, std::size_t bins,
           double threshold, std::size_t max_parents, double prior_count, std::size_t epochs,
           const std::vector<std::size_t>& hidden, double dropout, double minibatch_fraction,
           double learning_rate, std::uint64_t seed) {
            const ExperimentConfig cfg =
                config_from(method, k, k_min, k_max, bins, threshold, max_parents, prior_count,
                            epochs, hidden, dropout, minibatch_fraction, learning_rate, seed);
            return train_pipeline(dataset_from(S, y), cfg, seed);
        },
        py::arg("S"), py::arg("y"), py::kw_only(), py::arg("method") = "hill-bic",
        py::arg("k") = py::none(), py::arg("k_min") = 2, py::arg("k_max") = 10,
        py::arg("bins") = 3, py::arg("threshold") = 0.001, py::arg("max_parents") = 3,
        py::arg("prior_count") = 2.0, py::arg("epochs") = 100,
        py::arg("hidden") = std::vector<std::size_t>{6, 6}, py::arg("dropout") = 0.2,
        py::arg("minibatch_fraction") = 0.2, py::arg("learning_rate") = 0.01,
        py::arg("seed") = 0,
        "Cluster, train one expert per cluster, learn the gate network, and "
        "assemble the ensemble. k=None selects the cluster count dynamically.");

    m.def(
        "metrics",
        [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
            const Metrics mm = metrics(y_true, y_pred);
            return py::make_tuple(mm.accuracy, mm.f1);
        },
        py::arg("y_true"), py::arg("y_pred"), "Returns (accuracy, f1).");

    m.def("count_dags", &count_dags, py::arg("nodes"),
          "Number of labelled DAGs on the given node count.");

    m.def(
        "dickey_fuller",
        [](const std::vector<double>& series, double alpha) {
            const DickeyFullerResult r = dickey_fuller(series, alpha);
            return py::make_tuple(r.statistic, r.reject_unit_root);
        },
        py::arg("series"), py::arg("alpha") = 0.05,
        "Returns (statistic, reject_unit_root) for the unit-root test.");
}
