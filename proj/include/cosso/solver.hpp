#pragma once

#include <optional>
#include <vector>

#include "cosso/kernel.hpp"
#include "cosso/types.hpp"

namespace cosso {

// ---------------------------------------------------------------------------
// Smoothing-spline ridge step: for fixed component weights theta minimize
//   ||y - R_theta c - b 1||^2 + n*lambda0 * c' R_theta c
// over (c, b).  Solved through the equivalent symmetric stationarity system
//   (R_theta + n*lambda0 I) c + b 1 = y,   1'c = 0
// by a Schur complement on the SPD block.  When theta == 0 the convention is
// c = 0, b = mean(y).
// ---------------------------------------------------------------------------

struct SplineSolution {
  VectorXd c;
  double b = 0.0;
  double stationarity_residual = 0.0;  // certificate, see solve_spline
  bool jittered = false;
};

SplineSolution solve_spline(const MatrixXd &R_theta, const VectorXd &y,
                            double lambda0);

SplineSolution solve_spline(const GramSet &grams, const VectorXd &theta,
                            const VectorXd &y, double lambda0);

// Weighted variant used by the IRLS loop: minimizes
//   sum_i w_i (t_i - (R_theta c)_i - b)^2 + n*lambda0 c' R_theta c
// by scaling rows with sqrt(w).  Weights must be strictly positive.
SplineSolution solve_spline_weighted(const MatrixXd &R_theta, const VectorXd &t,
                                     const VectorXd &w, double lambda0);

// ---------------------------------------------------------------------------
// Nonnegative garrote step: for fixed (c, b) minimize
//   ||z - G theta||^2   s.t.  theta >= 0,  sum(theta) <= M
// with G column alpha = R_alpha c and z = y - (n*lambda0/2) c - b 1.
// ---------------------------------------------------------------------------

struct GarroteProblem {
  MatrixXd G;
  VectorXd z;
};

GarroteProblem make_garrote_problem(const GramSet &grams, const VectorXd &y,
                                    const SplineSolution &spline,
                                    double lambda0);

// IRLS variant: rows carry sqrt(w) so that the quadratic matches the weighted
// residual, and z = W^{1/2}(t - b 1) - (n*lambda0/2) W^{-1/2} c.
GarroteProblem make_garrote_problem_weighted(const GramSet &grams,
                                             const VectorXd &t,
                                             const VectorXd &w,
                                             const SplineSolution &spline,
                                             double lambda0);

struct GarroteResult {
  VectorXd theta;
  double nu = 0.0;        // multiplier on the sum constraint (0 when slack)
  bool sum_binding = false;
  int iterations = 0;
  double kkt_residual = 0.0;
};

// Primal active-set solve; exact zeros for inactive components, ties broken
// towards the lowest component index, iteration cap 100*p.  The returned
// point carries a KKT certificate (stationarity + complementary slackness
// within 1e-6 relative to the problem scale), else numerical_error.
GarroteResult garrote_step(const GarroteProblem &prob, double M);

// Penalized twin: minimize ||z - G theta||^2 + penalty * sum(theta) over
// theta >= 0.  Exposed for the correspondence tests between the two forms
// (penalty = n*lambda maps onto a binding sum constraint with nu = penalty).
GarroteResult garrote_step_penalized(const GarroteProblem &prob, double penalty);

// ---------------------------------------------------------------------------
// Alternating fitter.
// ---------------------------------------------------------------------------

struct FitState {
  AnovaDesign design = AnovaDesign::additive(1);
  KernelFn kernel = &sobolev_rk;
  MatrixXd X;  // scaled training inputs, kept for out-of-sample evaluation
  Scaling scaling;

  VectorXd theta;
  VectorXd c;
  double b = 0.0;

  double lambda0 = 0.0;
  double M = 0.0;                   // sum bound (infinity for penalized fits)
  double objective = 0.0;           // (1/n)||y - f||^2 + lambda0 c'R_theta c
  double sum_theta = 0.0;
  double nu = 0.0;                  // sum-constraint multiplier at the end
  std::vector<double> objective_trace;
  int iterations = 0;

  std::vector<int> selected() const { return selected_components(theta); }
  int size() const { return model_size(theta); }
};

// Residual-plus-roughness value that both alternation steps decrease:
//   (1/n)||y - R_theta c - b 1||^2 + lambda0 * sum_a theta_a c'R_a c.
double cosso_objective(const GramSet &grams, const VectorXd &y,
                       const VectorXd &theta, const VectorXd &c, double b,
                       double lambda0);

// One-step procedure: spline at theta = 1, one garrote step, final spline.
FitState fit_one_step(const GramSet &grams, const VectorXd &y, double lambda0,
                      double M);

// Weighted one-step used by the IRLS outer loop (weights = 1, t = y reduces
// to fit_one_step exactly).
FitState fit_one_step_weighted(const GramSet &grams, const VectorXd &t,
                               const VectorXd &w, double lambda0, double M);

// Full alternation until the relative objective decrease falls below tol or
// max_iters alternations.  The objective sequence must be non-increasing up
// to a 1e-10 slack; a larger increase raises internal_error.  The defaults
// are the production stopping rule; the equivalence tests pass a much
// smaller tol (the objective goes flat along the simplex face well before
// theta settles, so certifying the fixed point needs extra alternations).
FitState fit_full_iterate(const GramSet &grams, const VectorXd &y,
                          double lambda0, double M, int max_iters = 20,
                          const VectorXd *theta0 = nullptr, double tol = 1e-8);

// Penalized-form twin used by the lasso-reduction and lambda<->M tests.
FitState fit_full_iterate_penalized(const GramSet &grams, const VectorXd &y,
                                    double lambda0, double lambda,
                                    int max_iters = 200, double tol = 1e-10);

// f(x) on new rows: raw rows are scaled with the stored training scaling
// (clamped to the unit cube) before kernel evaluation.
VectorXd predict(const FitState &fit, const MatrixXd &Xnew_raw);

// Fitted values on the training rows.
VectorXd fitted_values(const FitState &fit, const GramSet &grams);

// Empirical L1 norm of each fitted component, (1/n) sum_i |f_alpha(x_i)|.
VectorXd component_l1_norms(const FitState &fit, const GramSet &grams);

// RKHS norms ||P^alpha f|| = theta_alpha * sqrt(c'R_alpha c).
VectorXd component_rkhs_norms(const FitState &fit, const GramSet &grams);

}  // namespace cosso
