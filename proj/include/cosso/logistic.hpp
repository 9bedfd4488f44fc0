#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cosso/solver.hpp"
#include "cosso/tuning.hpp"
#include "cosso/types.hpp"

namespace cosso {

// Binary classification: the squared loss is swapped for the average logistic
// loss of the logit f,
//   loss(f) = (1/n) sum_i [ -y_i f_i + log(1 + e^{f_i}) ],   y_i in {0, 1},
// and the regression machinery runs inside an IRLS loop.

// Stable for |f| up to ~700 (the softplus is evaluated in the falling tail).
// Labels outside {0, 1} raise input_error.
double logistic_loss(const VectorXd &f, const VectorXd &y);

// Gradient in f: (sigma(f) - y) / n.
VectorXd logistic_loss_gradient(const VectorXd &f, const VectorXd &y);

struct LogisticFit {
  FitState fit;  // the logit function
  // Deviance 2n*loss at the initial constant fit and after each accepted IRLS
  // step; non-increasing up to 1e-8 slack (step-halving enforces it).
  std::vector<double> deviance_trace;
  int iterations = 0;
  // Set when a separation guard engaged while forming working quantities:
  // either a logit was clamped at +-30 or a weight hit the 1e-6 floor (the
  // floor fires first, around |f| ~ 14).  Either way the data are separated
  // or nearly so on some region and the logit scale there is arbitrary.
  bool separation_warning = false;
};

// IRLS around the one-step selection fit: working responses and weights come
// from the current logit, each outer iteration solves one weighted one-step
// problem, and the loop stops when the relative deviance change drops below
// 1e-6 or after max_iters outer iterations.  Requires both classes present.
LogisticFit irls_fit(const Dataset &data, const AnovaDesign &design,
                     double lambda0, double M, int max_iters = 15);

// P(y = 1 | x) on new rows through the logistic link.
VectorXd predict_probability(const LogisticFit &model, const MatrixXd &Xnew_raw);

// Held-out loss for classification tuning; GCV has no analogue here, so both
// stages cross-validate.
enum class ClassLoss { Misclassification, Deviance };

// Pooled held-out classification loss over a partition (canonicalized as in
// kfold_cv_score): mean 0/1 error of thresholding p at 1/2, or mean deviance.
double kfold_class_score(const Dataset &data, const AnovaDesign &design,
                         double lambda0, double M, ClassLoss loss,
                         std::vector<std::vector<int>> folds);
double kfold_class_score(const Dataset &data, const AnovaDesign &design,
                         double lambda0, double M, ClassLoss loss, int k,
                         std::uint64_t seed);

// Two-stage tuning mirroring tune(): stage 1 sweeps lambda0 with theta pinned
// at 1 (IRLS around the plain weighted spline), stage 2 sweeps M through full
// IRLS fits at the chosen lambda0.  Scores are k-fold with the given loss.
std::pair<TuneReport, LogisticFit> tune_logistic(const Dataset &data,
                                                 const AnovaDesign &design,
                                                 int k, ClassLoss loss,
                                                 const TuneGrids &grids,
                                                 std::uint64_t seed);

}  // namespace cosso
