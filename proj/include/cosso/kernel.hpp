#pragma once

#include <vector>

#include "cosso/types.hpp"

namespace cosso {

// Scaled Bernoulli polynomials k_nu = B_nu/nu! on [0,1].
double bern_k1(double u);
double bern_k2(double u);
double bern_k4(double u);

// Reproducing kernel of the mean-zero second-order Sobolev space on [0,1]:
//   k1(s)k1(t) + k2(s)k2(t) - k4(|s-t|).
double sobolev_rk(double s, double t);

// Rank-one linear kernel (s-1/2)(t-1/2).  Swapping it in collapses the whole
// fitter to an l1-penalized linear regression on centered inputs, which the
// equivalence tests exploit.
double linear_rk(double s, double t);

using KernelFn = double (*)(double, double);

// Per-component Gram matrices of one design-point set.  Rows of X must
// already live in [0,1]^d.  Interaction Grams are elementwise products of the
// two main-effect Grams.
class GramSet {
 public:
  GramSet() = default;
  GramSet(MatrixXd X, AnovaDesign design, KernelFn kernel = &sobolev_rk);

  // Spectral construction used by the tensor-grid cross-checks: main-effect
  // Grams are supplied directly instead of being built from a kernel function.
  GramSet(MatrixXd X, AnovaDesign design, std::vector<MatrixXd> main_grams);

  int n() const { return static_cast<int>(X_.rows()); }
  int p() const { return design_.p(); }
  const AnovaDesign &design() const { return design_; }
  const MatrixXd &X() const { return X_; }
  KernelFn kernel() const { return kernel_; }

  const MatrixXd &component(int alpha) const { return grams_[alpha]; }

  // R_theta = sum_alpha theta_alpha R_alpha.
  MatrixXd weighted(const VectorXd &theta) const;

  // Column alpha of the garrote design: R_alpha c.
  MatrixXd times_each(const VectorXd &c) const;  // n x p

 private:
  void build();
  MatrixXd X_;
  AnovaDesign design_;
  KernelFn kernel_ = &sobolev_rk;
  std::vector<MatrixXd> grams_;
};

// sum_alpha theta_alpha R_alpha(Xnew_i, Xtrain_j) without materializing the
// per-component blocks; only components with theta above the drop threshold
// contribute.
MatrixXd weighted_cross_gram(const MatrixXd &Xnew, const MatrixXd &Xtrain,
                             const AnovaDesign &design, const VectorXd &theta,
                             KernelFn kernel = &sobolev_rk);

// Single-component cross block R_alpha(Xnew_i, Xtrain_j).
MatrixXd component_cross_gram(const MatrixXd &Xnew, const MatrixXd &Xtrain,
                              const AnovaDesign &design, int alpha,
                              KernelFn kernel = &sobolev_rk);

}  // namespace cosso
