#include "cosso/kernel.hpp"

#include <cmath>

namespace cosso {

double bern_k1(double u) { return u - 0.5; }

double bern_k2(double u) {
  const double a = bern_k1(u);
  return 0.5 * (a * a - 1.0 / 12.0);
}

double bern_k4(double u) {
  const double a = bern_k1(u);
  const double a2 = a * a;
  return (a2 * a2 - 0.5 * a2 + 7.0 / 240.0) / 24.0;
}

double sobolev_rk(double s, double t) {
  return bern_k1(s) * bern_k1(t) + bern_k2(s) * bern_k2(t) -
         bern_k4(std::fabs(s - t));
}

double linear_rk(double s, double t) { return (s - 0.5) * (t - 0.5); }

namespace {

void check_unit_cube(const MatrixXd &X) {
  if ((X.array() < -1e-12).any() || (X.array() > 1.0 + 1e-12).any())
    throw input_error("design points must lie in the unit cube; scale first");
}

MatrixXd main_gram(const MatrixXd &X, int var, KernelFn kernel) {
  const int n = static_cast<int>(X.rows());
  MatrixXd R(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel(X(i, var - 1), X(j, var - 1));
      R(i, j) = v;
      R(j, i) = v;
    }
  }
  return R;
}

}  // namespace

GramSet::GramSet(MatrixXd X, AnovaDesign design, KernelFn kernel)
    : X_(std::move(X)), design_(std::move(design)), kernel_(kernel) {
  if (X_.cols() != design_.d())
    throw input_error("design dimension does not match the data");
  if (X_.rows() < 1) throw input_error("empty design point set");
  check_unit_cube(X_);
  build();
}

GramSet::GramSet(MatrixXd X, AnovaDesign design, std::vector<MatrixXd> main_grams)
    : X_(std::move(X)), design_(std::move(design)), kernel_(nullptr) {
  if (static_cast<int>(main_grams.size()) != design_.d())
    throw input_error("need one supplied Gram per covariate");
  grams_.reserve(design_.p());
  for (const Component &comp : design_.components()) {
    if (!comp.interaction()) {
      grams_.push_back(main_grams[comp.j - 1]);
    } else {
      grams_.push_back(main_grams[comp.j - 1].cwiseProduct(main_grams[comp.k - 1]));
    }
  }
}

void GramSet::build() {
  // Main-effect blocks are computed once and interactions assembled from them
  // by elementwise products, so a two-way design costs d kernel passes.
  std::vector<MatrixXd> mains(design_.d());
  std::vector<bool> needed(design_.d(), false);
  for (const Component &comp : design_.components()) {
    needed[comp.j - 1] = true;
    if (comp.interaction()) needed[comp.k - 1] = true;
  }
  for (int v = 1; v <= design_.d(); ++v)
    if (needed[v - 1]) mains[v - 1] = main_gram(X_, v, kernel_);

  grams_.reserve(design_.p());
  for (const Component &comp : design_.components()) {
    if (!comp.interaction())
      grams_.push_back(mains[comp.j - 1]);
    else
      grams_.push_back(mains[comp.j - 1].cwiseProduct(mains[comp.k - 1]));
  }
}

MatrixXd GramSet::weighted(const VectorXd &theta) const {
  if (theta.size() != p()) throw input_error("theta length does not match the design");
  MatrixXd R = MatrixXd::Zero(n(), n());
  for (int a = 0; a < p(); ++a)
    if (theta[a] != 0.0) R += theta[a] * grams_[a];
  return R;
}

MatrixXd GramSet::times_each(const VectorXd &c) const {
  MatrixXd G(n(), p());
  for (int a = 0; a < p(); ++a) G.col(a) = grams_[a] * c;
  return G;
}

MatrixXd component_cross_gram(const MatrixXd &Xnew, const MatrixXd &Xtrain,
                              const AnovaDesign &design, int alpha,
                              KernelFn kernel) {
  const Component &comp = design.component(alpha);
  const int m = static_cast<int>(Xnew.rows());
  const int n = static_cast<int>(Xtrain.rows());
  MatrixXd K(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = kernel(Xnew(i, comp.j - 1), Xtrain(j, comp.j - 1));
      if (comp.interaction())
        v *= kernel(Xnew(i, comp.k - 1), Xtrain(j, comp.k - 1));
      K(i, j) = v;
    }
  }
  return K;
}

MatrixXd weighted_cross_gram(const MatrixXd &Xnew, const MatrixXd &Xtrain,
                             const AnovaDesign &design, const VectorXd &theta,
                             KernelFn kernel) {
  if (theta.size() != design.p())
    throw input_error("theta length does not match the design");
  // Exact zeros (the usual garrote output) are skipped; tiny survivors still
  // contribute so that predictions reproduce the training fit bit for bit.
  MatrixXd K = MatrixXd::Zero(Xnew.rows(), Xtrain.rows());
  for (int a = 0; a < design.p(); ++a) {
    if (theta[a] == 0.0) continue;
    K += theta[a] * component_cross_gram(Xnew, Xtrain, design, a, kernel);
  }
  return K;
}

}  // namespace cosso
