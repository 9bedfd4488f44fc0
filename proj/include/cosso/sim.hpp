#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cosso/tuning.hpp"
#include "cosso/types.hpp"

namespace cosso {

// Synthetic regression benchmarks: canned ground-truth functions, covariate
// samplers with controllable dependence, and a replicated fit-tune-evaluate
// loop reporting estimation error and selection behaviour.

// The four scalar shapes the benchmark truths are assembled from:
//   1: t                          (linear)
//   2: (2t - 1)^2                 (symmetric quadratic)
//   3: sin(2pi t)/(2 - sin(2pi t))
//   4: five-term trigonometric mix
double building_block(double t, int which);

// ---------------------------------------------------------------------------
// Covariate samplers.
// ---------------------------------------------------------------------------

enum class Covariance { Uniform, CompoundSymmetry, TrimmedAR1 };

struct CovarianceSpec {
  Covariance kind = Covariance::Uniform;
  double t = 0.0;    // compound-symmetry mixing weight, >= 0
  double rho = 0.0;  // AR coefficient, |rho| < 1

  static CovarianceSpec uniform() { return {}; }
  static CovarianceSpec compound(double t) {
    return {Covariance::CompoundSymmetry, t, 0.0};
  }
  static CovarianceSpec ar1(double rho) {
    return {Covariance::TrimmedAR1, 0.0, rho};
  }
  std::string label() const;
};

// n x d matrix of covariates in [0,1]^d.  Compound symmetry mixes each row's
// independent uniforms with a shared uniform, X = (W + tU)/(1+t), giving
// pairwise correlation t^2/(1+t^2); t = 0 is the plain uniform design.  The
// AR variant runs a standard-normal chain X_j = rho X_{j-1} + sqrt(1-rho^2) W_j,
// clips to [-2.5, 2.5] and maps that interval onto [0,1].
MatrixXd sample_covariates(const CovarianceSpec &cov, int n, int d,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Benchmark problems.
// ---------------------------------------------------------------------------

// 1: additive, 10 covariates, 4 informative with component scales 5/3/4/6.
// 2: additive, 60 covariates, 12 informative in three scale tiers.
// 3: two-way model over 10 covariates; truth adds three genuine two-variable
//    terms to four mains.
// 4: AC circuit response on 4 physical inputs rescaled to the unit cube;
//    the Z output is the impedance magnitude, phi its phase shift.  Fit with
//    the two-way model.
enum class ExampleId { One, Two, Three, FourZ, FourPhi };

ExampleId parse_example(const std::string &token);  // "1"|"2"|"3"|"4-Z"|"4-phi"
std::string example_label(ExampleId id);

int example_dimension(ExampleId id);
AnovaDesign example_design(ExampleId id);

// Ground truth at one point of the unit cube.  The circuit examples first map
// the cube onto the physical ranges R in [0,100], omega in [40pi, 560pi],
// L in [0,1], C in [1,11].
double truth_function(ExampleId id, const VectorXd &x);

// Default noise scale.  The first two problems state their noise levels as
// N(0, v) figures (1.74 and 0.5184); those are variances, consistent with a
// 3:1 signal-to-noise ratio against the truth variance, and stated_as_sd
// flips the reading for sensitivity runs.  Problem 3 states sd 0.2546
// directly.  The circuit outputs derive sd(truth)/3 from a cached 1e5-draw
// Monte Carlo pass with a fixed internal seed.
double example_noise_sd(ExampleId id, bool stated_as_sd = false);

// ---------------------------------------------------------------------------
// Experiments.
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  ExampleId example = ExampleId::One;
  CovarianceSpec covariance;
  int n = 100;
  int replicates = 20;
  Criterion criterion = Criterion::kfold(5);
  TuneGrids grids;     // empty slots fall back to the default grids
  std::uint64_t seed = 0;

  double noise_sd = -1.0;            // < 0: the example's default
  bool stated_noise_is_sd = false;   // see example_noise_sd

  // Skip tuning and fit at fixed smoothing (rate studies, quick probes).
  bool tuned = true;
  double fixed_lambda0 = 1e-5;
  double fixed_M = 2.0;
};

void validate_spec(const ExperimentSpec &spec);

struct SimDataset {
  Dataset data;
  VectorXd truth;       // noiseless responses at the rows
  double noise_sd = 0;  // the sd actually applied
};

// Draw one replicate's dataset.  Covariates and noise come from separate
// streams derived from (spec.seed, replicate), so the noiseless surface for a
// replicate does not move when the noise model changes.
SimDataset make_dataset(const ExperimentSpec &spec, int replicate = 0);

// Mean squared estimation error over fresh test covariates from the same
// distribution (Monte Carlo integration with n_test points).
double ise(const std::function<double(const VectorXd &)> &fhat, ExampleId id,
           const CovarianceSpec &cov, int n_test, std::uint64_t seed);
double ise(const FitState &fit, ExampleId id, const CovarianceSpec &cov,
           int n_test, std::uint64_t seed);

struct RunReport {
  ExperimentSpec spec;

  // One entry per completed replicate, in replicate order.
  std::vector<int> replicate;
  std::vector<double> ise;
  std::vector<int> model_size;               // selected component count
  std::vector<std::vector<bool>> selected;   // d-long variable indicators

  // Aggregates over completed replicates.  Model size gets both the standard
  // error and the plain standard deviation since summaries quote either.
  double mean_ise = 0.0, se_ise = 0.0;
  double mean_size = 0.0, se_size = 0.0, sd_size = 0.0;
  std::vector<double> variable_frequency;    // d-long selection fractions

  // Failed replicates are excluded from aggregates but never silently: each
  // records its index and a warning line.
  std::vector<int> failed;
  std::vector<std::string> warnings;
};

// Replicated generate-tune-fit-evaluate loop.  Bit-identical output for
// identical spec (every random stream is derived from spec.seed).  A
// replicate whose fit or tuning fails numerically is recorded under failed
// and excluded from the aggregates; an internal invariant violation still
// propagates.
RunReport run_experiment(const ExperimentSpec &spec);

}  // namespace cosso
