#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tlrf/cart_forest.hpp"
#include "tlrf/centered_forest.hpp"
#include "tlrf/dcov.hpp"
#include "tlrf/metrics.hpp"
#include "tlrf/simgen.hpp"
#include "tlrf/transfer.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.shape(0)};
}

tlrf::FeatureMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  tlrf::FeatureMatrix m(n, d);
  auto r = a.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = r(i, j);
  return m;
}

tlrf::Dataset to_dataset(const Array& X, const Array& y) {
  tlrf::Dataset d;
  d.X = to_matrix(X);
  d.y = to_vector(y);
  if (d.X.rows() != d.y.size())
    throw std::invalid_argument("X and y row counts differ");
  return d;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

tlrf::DCovKind parse_kind(const std::string& s) {
  if (s == "fastu") return tlrf::DCovKind::FastU;
  if (s == "u") return tlrf::DCovKind::U;
  if (s == "v") return tlrf::DCovKind::V;
  throw std::invalid_argument("estimator must be one of fastu|u|v");
}

tlrf::TransferConfig transfer_config(std::size_t trees, int source_depth,
                                     int residual_depth, std::size_t source_mtry,
                                     std::size_t residual_mtry,
                                     std::size_t source_n_boot,
                                     std::size_t residual_n_boot,
                                     const std::string& estimator,
                                     std::uint64_t seed, unsigned workers) {
  tlrf::TransferConfig cfg;
  cfg.trees = trees;
  cfg.source_depth = source_depth;
  cfg.residual_depth = residual_depth;
  cfg.source_mtry = source_mtry;
  cfg.residual_mtry = residual_mtry;
  cfg.source_n_boot = source_n_boot;
  cfg.residual_n_boot = residual_n_boot;
  cfg.estimator = parse_kind(estimator);
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_tlrf, m) {
  m.doc() = "Transfer learning for random forests with distance covariance weights";

  m.def(
      "dcov_v2",
      [](const Array& x, const Array& y) {
        return tlrf::dcov_v2(to_vector(x), to_vector(y)).value;
      },
      py::arg("x"), py::arg("y"),
      "Biased V-statistic of squared distance covariance (always >= 0).");
  m.def(
      "dcov_u",
      [](const Array& x, const Array& y) {
        return tlrf::dcov_u(to_vector(x), to_vector(y)).value;
      },
      py::arg("x"), py::arg("y"),
      "Unbiased U-statistic, O(n^2) reference form; needs n >= 4.");
  m.def(
      "dcov_fast",
      [](const Array& x, const Array& y) {
        return tlrf::dcov_fast(to_vector(x), to_vector(y)).value;
      },
      py::arg("x"), py::arg("y"), "Unbiased estimator in O(n log n).");
  m.def(
      "feature_weights",
      [](const Array& values, const std::string& kind) {
        const auto v = to_vector(values);
        std::vector<tlrf::DCovEstimate> est(v.size());
        for (std::size_t j = 0; j < v.size(); ++j)
          est[j] = {v[j], parse_kind(kind), 0};
        return to_array(tlrf::feature_weights(est).probs());
      },
      py::arg("values"), py::arg("kind") = "fastu",
      "Clamp negatives, normalize to a probability vector (uniform fallback).");

  m.def(
      "mse",
      [](const Array& pred, const Array& truth) {
        return tlrf::mse(to_vector(pred), to_vector(truth));
      },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "auc",
      [](const Array& scores, const std::vector<int>& labels) {
        return tlrf::auc(to_vector(scores), labels);
      },
      py::arg("scores"), py::arg("labels"),
      "Midrank Mann-Whitney AUC; ties count 1/2.");

  m.def(
      "simulate",
      [](std::size_t n, std::size_t d, double r, double noise_sd,
         std::uint64_t seed, const std::string& domain) {
        tlrf::SimConfig cfg;
        cfg.n_source = cfg.n_target = cfg.n_test = n;
        cfg.d = d;
        cfg.discrepancy = r;
        cfg.noise_sd = noise_sd;
        cfg.seed = seed;
        tlrf::Domain dom = tlrf::Domain::Source;
        if (domain == "target") dom = tlrf::Domain::Target;
        else if (domain == "test") dom = tlrf::Domain::Test;
        else if (domain != "source")
          throw std::invalid_argument("domain must be source|target|test");
        const tlrf::Dataset ds = tlrf::gen_dataset(cfg, dom);
        py::array_t<double> X({ds.size(), ds.dims()});
        auto w = X.mutable_unchecked<2>();
        for (std::size_t i = 0; i < ds.size(); ++i)
          for (std::size_t j = 0; j < ds.dims(); ++j) w(i, j) = ds.X(i, j);
        return py::make_tuple(X, to_array(ds.y));
      },
      py::arg("n"), py::arg("d"), py::arg("r") = 0.1, py::arg("noise_sd") = 1.0,
      py::arg("seed") = 0, py::arg("domain") = "source",
      "Draw (X, y) with U(0,1) features and the study's regression functions.");
  m.def(
      "f_source",
      [](const Array& x) { return tlrf::f_source(to_vector(x)); },
      py::arg("x"));
  m.def(
      "f_target",
      [](const Array& x, std::size_t d0) { return tlrf::f_target(to_vector(x), d0); },
      py::arg("x"), py::arg("d0"));

  py::class_<tlrf::CenteredForest>(m, "CenteredForest")
      .def_static(
          "fit",
          [](const Array& X, const Array& y, std::optional<Array> weights,
             int depth, std::size_t trees, std::uint64_t seed, unsigned workers) {
            const tlrf::Dataset data = to_dataset(X, y);
            const tlrf::FeatureWeights w =
                weights ? tlrf::FeatureWeights(to_vector(*weights))
                        : tlrf::FeatureWeights::uniform(data.dims());
            return tlrf::CenteredForest::fit(data, w, {depth, trees, seed, workers});
          },
          py::arg("X"), py::arg("y"), py::arg("weights") = std::nullopt,
          py::arg("depth") = 5, py::arg("trees") = 100, py::arg("seed") = 0,
          py::arg("workers") = 0)
      .def("predict",
           [](const tlrf::CenteredForest& f, const Array& X) {
             return to_array(f.predict_batch(to_matrix(X)));
           })
      .def_property_readonly("depth", &tlrf::CenteredForest::depth)
      .def_property_readonly("weights", [](const tlrf::CenteredForest& f) {
        return to_array(f.weights().probs());
      });

  py::class_<tlrf::CartForest>(m, "CartForest")
      .def_static(
          "fit",
          [](const Array& X, const Array& y, std::optional<Array> weights,
             std::size_t trees, std::size_t mtry, std::size_t n_boot,
             int max_depth, std::uint64_t seed, unsigned workers) {
            const tlrf::Dataset data = to_dataset(X, y);
            const tlrf::FeatureWeights w =
                weights ? tlrf::FeatureWeights(to_vector(*weights))
                        : tlrf::FeatureWeights::uniform(data.dims());
            tlrf::CartConfig cfg;
            cfg.trees = trees;
            cfg.mtry = mtry;
            cfg.n_boot = n_boot;
            cfg.max_depth = max_depth;
            cfg.seed = seed;
            cfg.workers = workers;
            return tlrf::CartForest::fit(data, w, cfg);
          },
          py::arg("X"), py::arg("y"), py::arg("weights") = std::nullopt,
          py::arg("trees") = 100, py::arg("mtry") = 0, py::arg("n_boot") = 0,
          py::arg("max_depth") = -1, py::arg("seed") = 0, py::arg("workers") = 0)
      .def("predict", [](const tlrf::CartForest& f, const Array& X) {
        return to_array(f.predict_batch(to_matrix(X)));
      });

  py::class_<tlrf::TransferModel>(m, "TransferModel")
      .def("predict",
           [](const tlrf::TransferModel& model, const Array& X) {
             return to_array(model.predict_batch(to_matrix(X)));
           })
      .def_property_readonly("dcov_weights",
                             [](const tlrf::TransferModel& model) {
                               return to_array(model.dcov_weights.probs());
                             })
      .def_property_readonly("train_idx",
                             [](const tlrf::TransferModel& model) {
                               return model.split.train_idx;
                             })
      .def_property_readonly("dcov_idx", [](const tlrf::TransferModel& model) {
        return model.split.dcov_idx;
      });

  m.def(
      "fit_tlcrf",
      [](const Array& Xs, const Array& ys, const Array& Xt, const Array& yt,
         std::size_t trees, int source_depth, int residual_depth,
         const std::string& estimator, std::uint64_t seed, unsigned workers) {
        return tlrf::fit_tlcrf(
            to_dataset(Xs, ys), to_dataset(Xt, yt),
            transfer_config(trees, source_depth, residual_depth, 0, 0, 0, 0,
                            estimator, seed, workers));
      },
      py::arg("source_X"), py::arg("source_y"), py::arg("target_X"),
      py::arg("target_y"), py::arg("trees") = 100, py::arg("source_depth") = 0,
      py::arg("residual_depth") = 0, py::arg("estimator") = "fastu",
      py::arg("seed") = 0, py::arg("workers") = 0,
      "Source forest, residualize, dcov weights on one half, residual forest "
      "on the other half.");
  m.def(
      "fit_tlsrf",
      [](const Array& Xs, const Array& ys, const Array& Xt, const Array& yt,
         std::size_t trees, std::size_t source_mtry, std::size_t residual_mtry,
         std::size_t source_n_boot, std::size_t residual_n_boot,
         const std::string& estimator, std::uint64_t seed, unsigned workers) {
        return tlrf::fit_tlsrf(
            to_dataset(Xs, ys), to_dataset(Xt, yt),
            transfer_config(trees, 0, 0, source_mtry, residual_mtry,
                            source_n_boot, residual_n_boot, estimator, seed,
                            workers));
      },
      py::arg("source_X"), py::arg("source_y"), py::arg("target_X"),
      py::arg("target_y"), py::arg("trees") = 100, py::arg("source_mtry") = 0,
      py::arg("residual_mtry") = 0, py::arg("source_n_boot") = 0,
      py::arg("residual_n_boot") = 0, py::arg("estimator") = "fastu",
      py::arg("seed") = 0, py::arg("workers") = 0);

  m.def("cv_select_depth",
        [](const Array& X, const Array& y, std::size_t trees, int folds,
           std::uint64_t seed) {
          const tlrf::Dataset data = to_dataset(X, y);
          return tlrf::cv_select_depth(data, tlrf::FeatureWeights::uniform(data.dims()),
                                       trees, folds, seed);
        },
        py::arg("X"), py::arg("y"), py::arg("trees") = 50, py::arg("folds") = 5,
        py::arg("seed") = 0);
}
