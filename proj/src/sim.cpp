#include "cosso/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cosso/kernel.hpp"
#include "cosso/rng.hpp"
#include "cosso/solver.hpp"

namespace cosso {

namespace {

void check_unit(double t, const char *what) {
  if (!(t >= 0.0 && t <= 1.0))
    throw input_error(std::string(what) + " must lie in [0,1]");
}

// Means and spreads for the circuit outputs, estimated once from a fixed
// internal stream so the derived noise scales are the same in every run.
struct CircuitScale {
  double sd_z = 0.0;
  double sd_phi = 0.0;
};

const CircuitScale &circuit_scale() {
  static const CircuitScale scale = [] {
    const int draws = 100000;
    Rng rng(derive_seed(0, "circuit-noise-mc"));
    double sz = 0, szz = 0, sp = 0, spp = 0;
    VectorXd x(4);
    for (int i = 0; i < draws; ++i) {
      for (int j = 0; j < 4; ++j) x[j] = rng.uniform();
      const double z = truth_function(ExampleId::FourZ, x);
      const double ph = truth_function(ExampleId::FourPhi, x);
      sz += z;
      szz += z * z;
      sp += ph;
      spp += ph * ph;
    }
    CircuitScale s;
    s.sd_z = std::sqrt(szz / draws - (sz / draws) * (sz / draws)) / 3.0;
    s.sd_phi = std::sqrt(spp / draws - (sp / draws) * (sp / draws)) / 3.0;
    return s;
  }();
  return scale;
}

double mean_of(const std::vector<double> &v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

// Sample standard deviation; zero for fewer than two values.
double sd_of(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

double building_block(double t, int which) {
  check_unit(t, "building-block argument");
  const double s = std::sin(2 * M_PI * t), c = std::cos(2 * M_PI * t);
  switch (which) {
    case 1:
      return t;
    case 2:
      return (2 * t - 1) * (2 * t - 1);
    case 3:
      return s / (2 - s);
    case 4:
      return 0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c +
             0.5 * s * s * s;
    default:
      throw input_error("building-block index must be 1..4");
  }
}

std::string CovarianceSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case Covariance::Uniform:
      os << "uniform";
      break;
    case Covariance::CompoundSymmetry:
      os << "compound(t=" << t << ")";
      break;
    case Covariance::TrimmedAR1:
      os << "ar1(rho=" << rho << ")";
      break;
  }
  return os.str();
}

MatrixXd sample_covariates(const CovarianceSpec &cov, int n, int d,
                           std::uint64_t seed) {
  if (n < 1 || d < 1) throw input_error("covariate sample needs n, d >= 1");
  if (cov.kind == Covariance::CompoundSymmetry &&
      !(cov.t >= 0.0 && std::isfinite(cov.t)))
    throw input_error("compound-symmetry weight must be finite and >= 0");
  if (cov.kind == Covariance::TrimmedAR1 && !(std::abs(cov.rho) < 1.0))
    throw input_error("AR coefficient must satisfy |rho| < 1");

  Rng rng(seed);
  MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    switch (cov.kind) {
      case Covariance::Uniform:
        for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
        break;
      case Covariance::CompoundSymmetry: {
        const double u = rng.uniform();
        for (int j = 0; j < d; ++j)
          X(i, j) = (rng.uniform() + cov.t * u) / (1.0 + cov.t);
        break;
      }
      case Covariance::TrimmedAR1: {
        double prev = 0.0;
        const double mix = std::sqrt(1.0 - cov.rho * cov.rho);
        for (int j = 0; j < d; ++j) {
          const double w = rng.normal();
          prev = j == 0 ? w : cov.rho * prev + mix * w;
          const double clipped = std::clamp(prev, -2.5, 2.5);
          X(i, j) = (clipped + 2.5) / 5.0;
        }
        break;
      }
    }
  }
  return X;
}

ExampleId parse_example(const std::string &token) {
  if (token == "1") return ExampleId::One;
  if (token == "2") return ExampleId::Two;
  if (token == "3") return ExampleId::Three;
  if (token == "4-Z") return ExampleId::FourZ;
  if (token == "4-phi") return ExampleId::FourPhi;
  throw input_error("unknown example '" + token +
                    "' (expected 1, 2, 3, 4-Z or 4-phi)");
}

std::string example_label(ExampleId id) {
  switch (id) {
    case ExampleId::One:
      return "1";
    case ExampleId::Two:
      return "2";
    case ExampleId::Three:
      return "3";
    case ExampleId::FourZ:
      return "4-Z";
    default:
      return "4-phi";
  }
}

int example_dimension(ExampleId id) {
  switch (id) {
    case ExampleId::One:
      return 10;
    case ExampleId::Two:
      return 60;
    case ExampleId::Three:
      return 10;
    default:
      return 4;
  }
}

AnovaDesign example_design(ExampleId id) {
  const int d = example_dimension(id);
  switch (id) {
    case ExampleId::One:
    case ExampleId::Two:
      return AnovaDesign::additive(d);
    default:
      return AnovaDesign::twoway(d);
  }
}

double truth_function(ExampleId id, const VectorXd &x) {
  if (x.size() != example_dimension(id))
    throw input_error("truth evaluation: point has wrong dimension");
  for (int j = 0; j < x.size(); ++j) check_unit(x[j], "truth argument");

  auto g = [](int which, double t) { return building_block(t, which); };
  switch (id) {
    case ExampleId::One:
      return 5 * g(1, x[0]) + 3 * g(2, x[1]) + 4 * g(3, x[2]) + 6 * g(4, x[3]);
    case ExampleId::Two: {
      // Three tiers of four shapes: scale 1 on variables 1-4, 1.5 on 5-8,
      // 2 on 9-12; the remaining 48 variables are noise.
      double f = 0.0;
      const double tier[3] = {1.0, 1.5, 2.0};
      for (int b = 0; b < 3; ++b)
        for (int w = 1; w <= 4; ++w) f += tier[b] * g(w, x[4 * b + w - 1]);
      return f;
    }
    case ExampleId::Three:
      return g(1, x[0]) + g(2, x[1]) + g(3, x[2]) + g(4, x[3]) +
             g(1, x[2] * x[3]) + g(2, (x[0] + x[2]) / 2) + g(3, x[0] * x[1]);
    default: {
      // Unit cube onto the physical ranges, then the series-RLC response.
      const double R = 100.0 * x[0];
      const double omega = 40.0 * M_PI + 520.0 * M_PI * x[1];
      const double L = x[2];
      const double C = 1.0 + 10.0 * x[3];
      const double react = omega * L - 1.0 / (omega * C);
      return id == ExampleId::FourZ ? std::hypot(R, react)
                                    : std::atan2(react, R);
    }
  }
}

double example_noise_sd(ExampleId id, bool stated_as_sd) {
  switch (id) {
    case ExampleId::One:
      return stated_as_sd ? 1.74 : std::sqrt(1.74);
    case ExampleId::Two:
      return stated_as_sd ? 0.5184 : std::sqrt(0.5184);
    case ExampleId::Three:
      return 0.2546;
    case ExampleId::FourZ:
      return circuit_scale().sd_z;
    default:
      return circuit_scale().sd_phi;
  }
}

void validate_spec(const ExperimentSpec &spec) {
  if (spec.n < 4) throw input_error("experiment needs n >= 4");
  if (spec.replicates < 1) throw input_error("experiment needs replicates >= 1");
  if (spec.noise_sd >= 0.0 && !std::isfinite(spec.noise_sd))
    throw input_error("noise sd override must be finite");
  if (std::isnan(spec.noise_sd))
    throw input_error("noise sd override must not be NaN");
  if (!spec.tuned) {
    if (!(spec.fixed_lambda0 > 0.0))
      throw input_error("fixed smoothing needs lambda0 > 0");
    if (!(spec.fixed_M >= 0.0)) throw input_error("fixed smoothing needs M >= 0");
  }
  // Covariance parameters are checked where the draws happen; probe now so a
  // bad spec fails before any replicate work.
  sample_covariates(spec.covariance, 1, 1, 0);
}

SimDataset make_dataset(const ExperimentSpec &spec, int replicate) {
  validate_spec(spec);
  if (replicate < 0) throw input_error("replicate index must be >= 0");

  const int d = example_dimension(spec.example);
  SimDataset out;
  out.data.X = sample_covariates(spec.covariance, spec.n, d,
                                 derive_seed(spec.seed, "covariates", replicate));
  out.truth.resize(spec.n);
  for (int i = 0; i < spec.n; ++i)
    out.truth[i] = truth_function(spec.example, out.data.X.row(i).transpose());

  out.noise_sd = spec.noise_sd >= 0.0
                     ? spec.noise_sd
                     : example_noise_sd(spec.example, spec.stated_noise_is_sd);
  Rng noise(spec.seed, "noise", replicate);
  out.data.y = out.truth;
  for (int i = 0; i < spec.n; ++i) out.data.y[i] += out.noise_sd * noise.normal();
  return out;
}

double ise(const std::function<double(const VectorXd &)> &fhat, ExampleId id,
           const CovarianceSpec &cov, int n_test, std::uint64_t seed) {
  if (n_test < 1) throw input_error("ise needs n_test >= 1");
  const int d = example_dimension(id);
  const MatrixXd X = sample_covariates(cov, n_test, d, seed);
  double acc = 0.0;
  for (int i = 0; i < n_test; ++i) {
    const VectorXd x = X.row(i).transpose();
    const double diff = fhat(x) - truth_function(id, x);
    acc += diff * diff;
  }
  return acc / n_test;
}

double ise(const FitState &fit, ExampleId id, const CovarianceSpec &cov,
           int n_test, std::uint64_t seed) {
  if (n_test < 1) throw input_error("ise needs n_test >= 1");
  const int d = example_dimension(id);
  const MatrixXd X = sample_covariates(cov, n_test, d, seed);
  const VectorXd pred = predict(fit, X);
  double acc = 0.0;
  for (int i = 0; i < n_test; ++i) {
    const double diff = pred[i] - truth_function(id, X.row(i).transpose());
    acc += diff * diff;
  }
  return acc / n_test;
}

RunReport run_experiment(const ExperimentSpec &spec) {
  validate_spec(spec);
  const int d = example_dimension(spec.example);
  const AnovaDesign design = example_design(spec.example);

  TuneGrids grids = spec.grids;
  if (grids.lambda0.empty()) grids.lambda0 = default_lambda0_grid();
  if (grids.m.empty()) grids.m = default_m_grid(design.p());

  RunReport report;
  report.spec = spec;
  report.variable_frequency.assign(d, 0.0);

  for (int rep = 0; rep < spec.replicates; ++rep) {
    try {
      const SimDataset ds = make_dataset(spec, rep);
      FitState fit;
      if (spec.tuned) {
        fit = tune(ds.data, design, spec.criterion, grids,
                   derive_seed(spec.seed, "tune", rep))
                  .second;
      } else {
        const GramSet grams(ds.data.X, design);
        fit = fit_full_iterate(grams, ds.data.y, spec.fixed_lambda0,
                               spec.fixed_M);
      }
      const double err = ise(fit, spec.example, spec.covariance, 10000,
                             derive_seed(spec.seed, "ise", rep));

      report.replicate.push_back(rep);
      report.ise.push_back(err);
      report.model_size.push_back(fit.size());
      std::vector<bool> indicator(d, false);
      for (int var : design.variables_in(fit.selected()))
        indicator[var - 1] = true;
      report.selected.push_back(indicator);
    } catch (const numerical_error &e) {
      report.failed.push_back(rep);
      report.warnings.push_back("replicate " + std::to_string(rep) +
                                " dropped (numerical): " + e.what());
    } catch (const input_error &e) {
      report.failed.push_back(rep);
      report.warnings.push_back("replicate " + std::to_string(rep) +
                                " dropped (input): " + e.what());
    }
  }

  const int done = static_cast<int>(report.ise.size());
  if (done > 0) {
    report.mean_ise = mean_of(report.ise);
    report.se_ise = sd_of(report.ise) / std::sqrt(double(done));
    std::vector<double> sizes(report.model_size.begin(),
                              report.model_size.end());
    report.mean_size = mean_of(sizes);
    report.sd_size = sd_of(sizes);
    report.se_size = report.sd_size / std::sqrt(double(done));
    for (const auto &indicator : report.selected)
      for (int j = 0; j < d; ++j)
        if (indicator[j]) report.variable_frequency[j] += 1.0 / done;
  }
  return report;
}

}  // namespace cosso
