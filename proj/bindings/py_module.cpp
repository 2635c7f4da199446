#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hlr/baselines.hpp"
#include "hlr/data.hpp"
#include "hlr/errors.hpp"
#include "hlr/kernel.hpp"
#include "hlr/loss.hpp"
#include "hlr/manifold.hpp"
#include "hlr/model_io.hpp"
#include "hlr/solver.hpp"

namespace py = pybind11;

namespace {

hlr::MultiViewSample sample_from_views(
    const std::vector<Eigen::VectorXd>& views) {
  hlr::MultiViewSample s;
  s.views = views;
  return s;
}

std::vector<hlr::MultiViewSample> samples_from_matrices(
    const std::vector<Eigen::MatrixXd>& view_features) {
  if (view_features.empty()) {
    throw std::invalid_argument("at least one view is required");
  }
  const Eigen::Index n = view_features.front().rows();
  std::vector<hlr::MultiViewSample> samples(static_cast<std::size_t>(n));
  for (const auto& x : view_features) {
    if (x.rows() != n) {
      throw std::invalid_argument("views disagree on the sample count");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      samples[static_cast<std::size_t>(i)].views.push_back(
          x.row(i).transpose());
    }
  }
  return samples;
}

hlr::HlrConfig build_config(double lambda, double gamma, double delta_xi,
                            int refinements,
                            const std::vector<double>& view_weights) {
  hlr::HlrConfig cfg;
  cfg.lambda = lambda;
  cfg.gamma = gamma;
  cfg.delta_xi = delta_xi;
  cfg.refinements = refinements;
  if (!view_weights.empty()) {
    cfg.view_weights = Eigen::Map<const Eigen::VectorXd>(
        view_weights.data(), static_cast<Eigen::Index>(view_weights.size()));
  }
  return cfg;
}

hlr::HlrModel fit_py(const hlr::Dataset& ds,
                     const std::vector<hlr::KernelSpec>& kernels,
                     double lambda, double gamma, double delta_xi,
                     int refinements, const std::vector<double>& view_weights,
                     int manifold_neighbors, double manifold_bandwidth,
                     bool manifold_normalized) {
  const hlr::HlrConfig cfg =
      build_config(lambda, gamma, delta_xi, refinements, view_weights);
  if (cfg.gamma > 0.0) {
    const auto op = hlr::assemble_manifold(
        ds.samples, hlr::ManifoldSpec::knn(manifold_neighbors,
                                           manifold_bandwidth,
                                           manifold_normalized));
    return hlr::fit(ds, kernels, &op, cfg);
  }
  return hlr::fit(ds, kernels, nullptr, cfg);
}

Eigen::VectorXd predict_matrix_py(const hlr::HlrModel& model,
                                  const std::vector<Eigen::MatrixXd>& views) {
  return hlr::predict_batch(model, samples_from_matrices(views));
}

}  // namespace

PYBIND11_MODULE(_hlr, m) {
  m.doc() =
      "Exact Huber-loss multi-view regression with adaptive threshold "
      "refinement";
  m.attr("__version__") = HLR_VERSION;

  py::register_exception<hlr::DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<hlr::SolverError>(m, "SolverError",
                                           PyExc_RuntimeError);

  py::class_<hlr::KernelSpec>(m, "KernelSpec")
      .def_static("linear", &hlr::KernelSpec::linear)
      .def_static("polynomial", &hlr::KernelSpec::polynomial,
                  py::arg("degree"), py::arg("offset") = 1.0)
      .def_static("gaussian", &hlr::KernelSpec::gaussian, py::arg("bandwidth"))
      .def_property_readonly("name", &hlr::KernelSpec::name)
      .def("__repr__", [](const hlr::KernelSpec& s) {
        return "KernelSpec(" + s.name() + ")";
      });

  py::class_<hlr::Dataset>(m, "Dataset")
      .def(py::init([](const std::vector<Eigen::MatrixXd>& views,
                       const std::vector<double>& labels) {
             return hlr::make_dataset(views, labels);
           }),
           py::arg("view_features"), py::arg("labels"),
           "Rows are samples; labels attach to the first len(labels) rows.")
      .def_property_readonly("size", &hlr::Dataset::size)
      .def_property_readonly("label_count", &hlr::Dataset::label_count)
      .def_property_readonly("view_count", &hlr::Dataset::view_count)
      .def_property_readonly(
          "labels", [](const hlr::Dataset& ds) { return ds.labels; })
      .def("features",
           [](const hlr::Dataset& ds, int view) {
             if (view < 0 || view >= ds.view_count()) {
               throw std::invalid_argument("view index out of range");
             }
             const Eigen::Index d =
                 ds.samples.front().views[static_cast<std::size_t>(view)]
                     .size();
             Eigen::MatrixXd x(ds.size(), d);
             for (int i = 0; i < ds.size(); ++i) {
               x.row(i) = ds.samples[static_cast<std::size_t>(i)]
                              .views[static_cast<std::size_t>(view)]
                              .transpose();
             }
             return x;
           },
           py::arg("view") = 0)
      .def("__repr__", [](const hlr::Dataset& ds) {
        return "Dataset(n=" + std::to_string(ds.size()) +
               ", labelled=" + std::to_string(ds.label_count()) +
               ", views=" + std::to_string(ds.view_count()) + ")";
      });

  py::class_<hlr::HlrModel>(m, "Model")
      .def_property_readonly(
          "w", [](const hlr::HlrModel& mod) { return mod.w; })
      .def_property_readonly(
          "view_weights",
          [](const hlr::HlrModel& mod) { return mod.view_weights; })
      .def_property_readonly(
          "xi_history",
          [](const hlr::HlrModel& mod) { return mod.xi_history; })
      .def_property_readonly(
          "removed",
          [](const hlr::HlrModel& mod) {
            std::vector<std::pair<int, int>> out;
            for (const auto& r : mod.removed) {
              out.emplace_back(r.index, r.refinement);
            }
            return out;
          },
          "(train index, refinement step) pairs, in removal order")
      .def("predict",
           [](const hlr::HlrModel& mod,
              const std::vector<Eigen::VectorXd>& views) {
             return hlr::predict(mod, sample_from_views(views));
           },
           py::arg("views"), "Decision value for one sample (list of views).")
      .def("predict_many", &predict_matrix_py, py::arg("view_features"),
           "Decision values for stacked samples (one matrix per view).")
      .def("predict_sign",
           [](const hlr::HlrModel& mod,
              const std::vector<Eigen::VectorXd>& views) {
             return hlr::predict_sign(mod, sample_from_views(views));
           },
           py::arg("views"))
      .def("save",
           [](const hlr::HlrModel& mod, const std::string& path) {
             hlr::save_model(mod, path);
           },
           py::arg("path"))
      .def_static("load", &hlr::load_model, py::arg("path"));

  m.def("fit", &fit_py, py::arg("dataset"), py::arg("kernels"),
        py::arg("lam") = 1e-3, py::arg("gamma") = 0.0,
        py::arg("delta_xi") = 0.1, py::arg("refinements") = 0,
        py::arg("view_weights") = std::vector<double>{},
        py::arg("manifold_neighbors") = 6,
        py::arg("manifold_bandwidth") = 0.0,
        py::arg("manifold_normalized") = true,
        "Exact fit plus adaptive threshold refinement with label removal.");

  m.def("huber",
        [](double xi, double y) {
          return hlr::huber(hlr::HuberThreshold(xi), y);
        },
        py::arg("xi"), py::arg("y"));
  m.def("huber_deriv",
        [](double xi, double y) {
          return hlr::huber_deriv(hlr::HuberThreshold(xi), y);
        },
        py::arg("xi"), py::arg("y"));
  m.def("mae", &hlr::mae, py::arg("truth"), py::arg("prediction"));
  m.def("mse", &hlr::mse, py::arg("truth"), py::arg("prediction"));
  m.def("mre", &hlr::mre, py::arg("truth"), py::arg("prediction"),
        "Mean relative error; raises on zero targets, by design.");
  m.def("dice",
        py::overload_cast<const std::vector<int>&, const std::vector<int>&>(
            &hlr::dice),
        py::arg("a"), py::arg("b"), "Sorensen-Dice overlap of index sets.");

  m.def("gen_linear_uniform", &hlr::gen_linear_uniform, py::arg("n"),
        py::arg("dim"), py::arg("beta"), py::arg("noise_std"), py::arg("seed"),
        "x ~ U[0,1)^dim, y = beta . x + N(0, noise_std^2), fully labelled.");
  m.def("corrupt_sign_flip", &hlr::corrupt_sign_flip, py::arg("dataset"),
        py::arg("rate"), py::arg("seed"),
        "Flips floor(rate * l) label signs; returns (dataset, indices).");
  m.def("flip_binary_labels", &hlr::flip_binary_labels, py::arg("dataset"),
        py::arg("rho_plus"), py::arg("rho_minus"), py::arg("seed"),
        "Asymmetric class-conditional flips for +/-1 labels.");
  m.def("load_csv", &hlr::load_csv, py::arg("path"), py::arg("view_dims"),
        py::arg("with_labels") = true);
  m.def("write_csv", &hlr::write_csv, py::arg("dataset"), py::arg("path"));

  py::class_<hlr::RidgeModel>(m, "RidgeModel")
      .def_property_readonly(
          "alpha", [](const hlr::RidgeModel& mod) { return mod.alpha; })
      .def("predict",
           [](const hlr::RidgeModel& mod,
              const std::vector<Eigen::VectorXd>& views) {
             return hlr::ridge_predict(mod, sample_from_views(views));
           },
           py::arg("views"));
  m.def("kernel_ridge", &hlr::kernel_ridge, py::arg("dataset"),
        py::arg("kernel"), py::arg("lam"),
        "Single-view closed-form baseline: (G + 2 l lam I) alpha = y.");
}
