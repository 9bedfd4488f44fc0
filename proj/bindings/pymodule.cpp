// Python face of the library: the main operations (tuned fitting, prediction,
// classification, the closed-form grid estimator, the simulation bench and
// model archives) on numpy arrays.  Heavy lifting stays in the C++ core; this
// file only adapts types and maps the error taxonomy onto Python exceptions.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "cosso/io.hpp"
#include "cosso/kernel.hpp"
#include "cosso/logistic.hpp"
#include "cosso/sim.hpp"
#include "cosso/solver.hpp"
#include "cosso/spectral.hpp"
#include "cosso/tuning.hpp"

namespace py = pybind11;
using namespace cosso;

namespace {

AnovaDesign design_from(const std::string &order, int d) {
  if (order == "additive") return AnovaDesign::additive(d);
  if (order == "twoway") return AnovaDesign::twoway(d);
  throw input_error("design must be additive or twoway, got '" + order + "'");
}

Criterion criterion_from(const std::string &label) {
  if (label == "gcv") return Criterion::gcv();
  if (label.size() > 2 && label.compare(0, 2, "cv") == 0) {
    const int k = std::atoi(label.c_str() + 2);
    if (k >= 2) return Criterion::kfold(k);
  }
  throw input_error("criterion must be gcv or cvK (e.g. cv5), got '" + label +
                    "'");
}

TuneGrids grids_from(std::vector<double> lambda0, std::vector<double> m,
                     int p) {
  TuneGrids g;
  g.lambda0 = lambda0.empty() ? default_lambda0_grid() : std::move(lambda0);
  g.m = m.empty() ? default_m_grid(p) : std::move(m);
  return g;
}

py::dict tuning_dict(const TuneReport &r) {
  py::dict d;
  d["criterion"] = r.criterion.label();
  d["lambda0_grid"] = r.lambda0_grid;
  d["lambda0_scores"] = r.lambda0_scores;
  d["m_grid"] = r.m_grid;
  d["m_scores"] = r.m_scores;
  d["chosen_lambda0"] = r.chosen_lambda0;
  d["chosen_m"] = r.chosen_m;
  d["norm_trace"] = r.norm_trace;
  return d;
}

std::vector<std::string> component_labels(const AnovaDesign &design) {
  std::vector<std::string> out;
  for (int a = 0; a < design.p(); ++a)
    out.push_back(design.component(a).label());
  return out;
}

// Raw covariates are mapped onto the unit cube exactly as the file loader
// does it, and the map is stored with the fit for prediction time.
std::pair<Dataset, Scaling> absorb(MatrixXd X, VectorXd y) {
  if (X.rows() != y.size())
    throw input_error("X and y disagree in length");
  Dataset data;
  const Scaling s = Scaling::fit(X);
  data.X = s.apply(X);
  data.y = std::move(y);
  return {std::move(data), s};
}

}  // namespace

PYBIND11_MODULE(_cosso, m) {
  m.doc() =
      "Component-selecting smoothing-spline regression and classification";

  py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<numerical_error>(m, "NumericalError",
                                          PyExc_ArithmeticError);
  py::register_exception<internal_error>(m, "InternalError",
                                         PyExc_RuntimeError);

  py::class_<FitState>(m, "Fit",
                       "A fitted model: component weights, representer "
                       "coefficients and the stored covariate scaling.")
      .def_property_readonly("theta",
                             [](const FitState &f) { return f.theta; })
      .def_property_readonly("b", [](const FitState &f) { return f.b; })
      .def_property_readonly("lambda0",
                             [](const FitState &f) { return f.lambda0; })
      .def_property_readonly("M", [](const FitState &f) { return f.M; })
      .def_property_readonly("objective",
                             [](const FitState &f) { return f.objective; })
      .def_property_readonly("iterations",
                             [](const FitState &f) { return f.iterations; })
      .def_property_readonly("objective_trace",
                             [](const FitState &f) { return f.objective_trace; })
      .def_property_readonly(
          "component_labels",
          [](const FitState &f) { return component_labels(f.design); })
      .def("selected", &FitState::selected,
           "1-based ids of the components kept by the fit")
      .def("selected_variables",
           [](const FitState &f) {
             return f.design.variables_in(f.selected());
           },
           "1-based ids of the variables appearing in kept components")
      .def("size", &FitState::size)
      .def("predict",
           [](const FitState &f, const MatrixXd &X) { return predict(f, X); },
           py::arg("X"), "Evaluate the fit on raw covariate rows.")
      .def("__repr__", [](const FitState &f) {
        return "<Fit: " + std::to_string(f.size()) + " of " +
               std::to_string(f.design.p()) + " components>";
      });

  py::class_<LogisticFit>(m, "LogisticModel",
                          "A fitted classifier; the logit lives in .fit.")
      .def_property_readonly("fit",
                             [](const LogisticFit &l) { return l.fit; })
      .def_property_readonly(
          "deviance_trace",
          [](const LogisticFit &l) { return l.deviance_trace; })
      .def_property_readonly(
          "separation_warning",
          [](const LogisticFit &l) { return l.separation_warning; })
      .def_property_readonly("iterations",
                             [](const LogisticFit &l) { return l.iterations; })
      .def("predict_probability",
           [](const LogisticFit &l, const MatrixXd &X) {
             return predict_probability(l, X);
           },
           py::arg("X"), "P(y = 1 | x) on raw covariate rows.")
      .def("__repr__", [](const LogisticFit &l) {
        return "<LogisticModel: " + std::to_string(l.fit.size()) +
               " components, " + std::to_string(l.iterations) + " iterations>";
      });

  m.def(
      "fit",
      [](MatrixXd X, VectorXd y, const std::string &design,
         const std::string &criterion, std::vector<double> lambda0_grid,
         std::vector<double> m_grid, std::uint64_t seed) {
        auto [data, scaling] = absorb(std::move(X), std::move(y));
        const auto des = design_from(design, data.d());
        const auto grids =
            grids_from(std::move(lambda0_grid), std::move(m_grid), des.p());
        auto [report, fit] =
            tune(data, des, criterion_from(criterion), grids, seed);
        fit.scaling = scaling;
        return py::make_tuple(fit, tuning_dict(report));
      },
      py::arg("X"), py::arg("y"), py::arg("design") = "additive",
      py::arg("criterion") = "cv5",
      py::arg("lambda0_grid") = std::vector<double>{},
      py::arg("m_grid") = std::vector<double>{}, py::arg("seed") = 0,
      "Tune both smoothing parameters on a grid and refit; returns "
      "(Fit, tuning report dict).");

  m.def(
      "fit_fixed",
      [](MatrixXd X, VectorXd y, const std::string &design, double lambda0,
         double M) {
        auto [data, scaling] = absorb(std::move(X), std::move(y));
        const auto des = design_from(design, data.d());
        GramSet grams(data.X, des);
        FitState fit = fit_full_iterate(grams, data.y, lambda0, M);
        fit.scaling = scaling;
        return fit;
      },
      py::arg("X"), py::arg("y"), py::arg("design") = "additive",
      py::arg("lambda0") = 1e-4, py::arg("M") = 2.0,
      "Fit at fixed smoothing parameter and component budget.");

  m.def(
      "classify",
      [](MatrixXd X, VectorXd y, const std::string &design, int folds,
         const std::string &loss, std::vector<double> lambda0_grid,
         std::vector<double> m_grid, std::uint64_t seed) {
        for (int i = 0; i < y.size(); ++i)
          if (y[i] != 0.0 && y[i] != 1.0)
            throw input_error("labels must be 0 or 1");
        auto [data, scaling] = absorb(std::move(X), std::move(y));
        const auto des = design_from(design, data.d());
        ClassLoss cl;
        if (loss == "mis")
          cl = ClassLoss::Misclassification;
        else if (loss == "deviance")
          cl = ClassLoss::Deviance;
        else
          throw input_error("loss must be mis or deviance, got '" + loss +
                            "'");
        const auto grids =
            grids_from(std::move(lambda0_grid), std::move(m_grid), des.p());
        auto [report, model] =
            tune_logistic(data, des, folds, cl, grids, seed);
        model.fit.scaling = scaling;
        return py::make_tuple(model, tuning_dict(report));
      },
      py::arg("X"), py::arg("y"), py::arg("design") = "additive",
      py::arg("folds") = 5, py::arg("loss") = "mis",
      py::arg("lambda0_grid") = std::vector<double>{},
      py::arg("m_grid") = std::vector<double>{}, py::arg("seed") = 0,
      "Cross-validated classifier tuning; returns (LogisticModel, report).");

  m.def(
      "spectral_fit",
      [](const VectorXd &y, int m_, double lambda) {
        const SpectralFit fit = spectral_oracle_fit(y, m_, lambda);
        py::dict out;
        out["b"] = fit.b;
        out["theta"] = std::vector<double>{fit.theta[0], fit.theta[1],
                                           fit.theta[2]};
        const auto sel = fit.selected();
        out["selected"] = std::vector<bool>{sel[0], sel[1], sel[2]};
        out["u"] = std::vector<double>{
            u_statistic(fit.coeffs, Block::Main1),
            u_statistic(fit.coeffs, Block::Main2),
            u_statistic(fit.coeffs, Block::Interaction)};
        out["fitted"] = fit.fitted;
        out["points"] = FourierGrid(m_).points();
        return out;
      },
      py::arg("y"), py::arg("m"), py::arg("lam"),
      "Closed-form estimator on the m x m tensor grid; y holds the grid "
      "responses row-major with the second axis fastest.");

  m.def(
      "simulate",
      [](const std::string &example, const std::string &covariance, int n,
         int replicates, const std::string &criterion, double noise_sd,
         std::uint64_t seed) {
        ExperimentSpec spec;
        spec.example = parse_example(example);
        if (covariance == "uniform")
          spec.covariance = CovarianceSpec::uniform();
        else if (covariance.rfind("compound:", 0) == 0)
          spec.covariance =
              CovarianceSpec::compound(std::stod(covariance.substr(9)));
        else if (covariance.rfind("ar1:", 0) == 0)
          spec.covariance = CovarianceSpec::ar1(std::stod(covariance.substr(4)));
        else
          throw input_error(
              "covariance must be uniform, compound:<t> or ar1:<rho>");
        spec.n = n;
        spec.replicates = replicates;
        spec.criterion = criterion_from(criterion);
        spec.noise_sd = noise_sd;
        spec.seed = seed;
        const RunReport rep = run_experiment(spec);
        py::dict out;
        out["ise"] = rep.ise;
        out["model_size"] = rep.model_size;
        out["selected"] = rep.selected;
        out["mean_ise"] = rep.mean_ise;
        out["se_ise"] = rep.se_ise;
        out["mean_size"] = rep.mean_size;
        out["sd_size"] = rep.sd_size;
        out["variable_frequency"] = rep.variable_frequency;
        out["failed"] = rep.failed;
        out["warnings"] = rep.warnings;
        return out;
      },
      py::arg("example"), py::arg("covariance") = "uniform",
      py::arg("n") = 100, py::arg("replicates") = 20,
      py::arg("criterion") = "cv5", py::arg("noise_sd") = -1.0,
      py::arg("seed") = 0,
      "Replicated benchmark run; example is one of 1, 2, 3, 4-Z, 4-phi.");

  m.def(
      "save_model",
      [](const std::string &path, const FitState &fit,
         std::vector<std::string> covariate_names,
         const std::string &response_name) {
        if (covariate_names.empty())
          for (int j = 1; j <= fit.design.d(); ++j)
            covariate_names.push_back("x" + std::to_string(j));
        ModelArchive a;
        a.fit = fit;
        a.covariate_names = std::move(covariate_names);
        a.response_name = response_name;
        save_archive(path, a);
      },
      py::arg("path"), py::arg("fit"),
      py::arg("covariate_names") = std::vector<std::string>{},
      py::arg("response_name") = "y",
      "Write a fit to the versioned JSON archive format.");

  m.def(
      "load_model",
      [](const std::string &path) { return load_archive(path).fit; },
      py::arg("path"), "Read a fit back from a JSON archive.");
}
