#pragma once

// Shared helpers and independent reference implementations ("oracles") used
// across the test suites.  Everything here is deliberately naive: dense
// elimination, exhaustive grids, plain coordinate descent; the point is to
// check the production code against implementations too simple to share its
// bugs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cosso/rng.hpp"

namespace testutil {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// --------------------------------------------------------------------------
// quadrature
// --------------------------------------------------------------------------

// Composite Simpson on [a, b] with n subintervals (n rounded up to even).
inline double simpson(const std::function<double(double)> &f, double a,
                      double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Simpson with the domain split at interior kink locations.
inline double simpson_split(const std::function<double(double)> &f,
                            std::vector<double> kinks, int n_total) {
  kinks.push_back(0.0);
  kinks.push_back(1.0);
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
  double acc = 0.0;
  for (size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double a = kinks[i], b = kinks[i + 1];
    if (b - a < 1e-14) continue;
    const int n = std::max(16, static_cast<int>(n_total * (b - a)));
    acc += simpson(f, a, b, n);
  }
  return acc;
}

// --------------------------------------------------------------------------
// dense elimination
// --------------------------------------------------------------------------

// Gaussian elimination with partial pivoting, written out longhand so the
// spline solver is checked against something that shares no Eigen machinery.
inline VectorXd gauss_solve(MatrixXd A, VectorXd b) {
  const int n = static_cast<int>(A.rows());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(A(i, k)) > std::fabs(A(piv, k))) piv = i;
    if (piv != k) {
      A.row(piv).swap(A.row(k));
      std::swap(b[piv], b[k]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double m = A(i, k) / A(k, k);
      if (m == 0.0) continue;
      A.row(i).tail(n - k) -= m * A.row(k).tail(n - k);
      b[i] -= m * b[k];
    }
  }
  VectorXd x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
    x[i] = s / A(i, i);
  }
  return x;
}

// Reference solve of the penalized least-squares step through the full
// (n+1)-dimensional stationarity system.
struct SplineOracle {
  VectorXd c;
  double b;
};

inline SplineOracle spline_by_elimination(const MatrixXd &R, const VectorXd &y,
                                          double lambda0) {
  const int n = static_cast<int>(y.size());
  MatrixXd K = MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = R + n * lambda0 * MatrixXd::Identity(n, n);
  K.topRightCorner(n, 1).setOnes();
  K.bottomLeftCorner(1, n).setOnes();
  VectorXd rhs(n + 1);
  rhs.head(n) = y;
  rhs[n] = 0.0;
  const VectorXd sol = gauss_solve(K, rhs);
  return {sol.head(n), sol[n]};
}

// --------------------------------------------------------------------------
// garrote grid oracle
// --------------------------------------------------------------------------

// ||z - G theta||^2 minimized over the box/simplex set by exhaustive search
// (p <= 2) or staged zooming (p = 3; valid because the objective is convex).
// Returns the best objective value found at the target mesh.
struct GridOracleResult {
  VectorXd theta;
  double objective = std::numeric_limits<double>::infinity();
};

inline double qp_value(const MatrixXd &Q, const VectorXd &l, double z2,
                       const VectorXd &th) {
  return z2 - 2.0 * l.dot(th) + th.dot(Q * th);
}

inline GridOracleResult garrote_grid_oracle(const MatrixXd &G,
                                            const VectorXd &z, double M,
                                            double mesh) {
  const int p = static_cast<int>(G.cols());
  const MatrixXd Q = G.transpose() * G;
  const VectorXd l = G.transpose() * z;
  const double z2 = z.squaredNorm();

  GridOracleResult best;
  auto consider = [&](const VectorXd &th) {
    const double v = qp_value(Q, l, z2, th);
    if (v < best.objective) {
      best.objective = v;
      best.theta = th;
    }
  };

  auto sweep = [&](const VectorXd &lo, const VectorXd &hi, double h) {
    std::vector<int> steps(p);
    for (int a = 0; a < p; ++a)
      steps[a] = static_cast<int>(std::floor((hi[a] - lo[a]) / h + 1e-9)) + 1;
    VectorXd th(p);
    std::vector<int> idx(p, 0);
    while (true) {
      double sum = 0.0;
      for (int a = 0; a < p; ++a) {
        th[a] = lo[a] + idx[a] * h;
        sum += th[a];
      }
      if (sum <= M + 1e-12) consider(th);
      int a = 0;
      for (; a < p; ++a) {
        if (++idx[a] < steps[a]) break;
        idx[a] = 0;
      }
      if (a == p) break;
    }
  };

  if (p <= 2) {
    sweep(VectorXd::Zero(p), VectorXd::Constant(p, M), mesh);
    return best;
  }

  // Staged zoom: each stage shrinks the box around the incumbent by a factor
  // of 10 until the requested mesh is reached.
  VectorXd lo = VectorXd::Zero(p), hi = VectorXd::Constant(p, M);
  double h = std::max(mesh, M / 40.0);
  while (true) {
    sweep(lo, hi, h);
    if (h <= mesh * (1.0 + 1e-9)) break;
    for (int a = 0; a < p; ++a) {
      lo[a] = std::max(0.0, best.theta[a] - 2.5 * h);
      hi[a] = std::min(M, best.theta[a] + 2.5 * h);
    }
    h = std::max(mesh, h / 10.0);
  }
  return best;
}

// --------------------------------------------------------------------------
// convex reference for the penalized component-norm objective
// --------------------------------------------------------------------------

// Minimizes
//   (1/n)||y - b 1 - sum_a B_a w_a||^2 + tau2 * sum_a ||w_a||
// by exact block coordinate descent, where B_a = U_a D_a^{1/2} comes from the
// eigendecomposition of the a-th Gram block.  This is the component-wise
// penalty problem written in coordinates that turn each block update into a
// scalar root find, and is solved here without any of the production
// alternation machinery.
struct GroupOracle {
  double objective;
  double b;
  std::vector<VectorXd> w;
  std::vector<MatrixXd> B;
  VectorXd fitted;               // b + sum_a B_a w_a
  std::vector<double> block_norms;  // ||w_a||
};

inline GroupOracle group_penalty_oracle(const std::vector<MatrixXd> &grams,
                                        const VectorXd &y, double tau2,
                                        int max_sweeps = 50000,
                                        double tol = 1e-13) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(grams.size());

  GroupOracle out;
  out.B.resize(p);
  out.w.resize(p);
  std::vector<VectorXd> d(p);
  for (int a = 0; a < p; ++a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(grams[a]);
    const VectorXd ev = eig.eigenvalues();
    const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<int> keep;
    for (int i = 0; i < ev.size(); ++i)
      if (ev[i] > cut) keep.push_back(i);
    MatrixXd B(n, keep.size());
    VectorXd dd(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) {
      B.col(i) = eig.eigenvectors().col(keep[i]) * std::sqrt(ev[keep[i]]);
      dd[i] = ev[keep[i]];
    }
    out.B[a] = B;
    d[a] = dd;
    out.w[a] = VectorXd::Zero(keep.size());
  }

  VectorXd fit = VectorXd::Zero(n);  // sum_a B_a w_a
  out.b = y.mean();
  const double half_thresh = 0.5 * n * tau2;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;

    const double b_new = (y - fit).mean();
    max_delta = std::max(max_delta, std::fabs(b_new - out.b));
    out.b = b_new;

    for (int a = 0; a < p; ++a) {
      if (out.B[a].cols() == 0) continue;
      const VectorXd r =
          y - VectorXd::Constant(n, out.b) - (fit - out.B[a] * out.w[a]);
      const VectorXd q = out.B[a].transpose() * r;
      VectorXd w_new;
      if (q.norm() <= half_thresh || half_thresh == 0.0) {
        if (half_thresh == 0.0) {
          // Unpenalized limit: plain least squares on the block.
          w_new = q.cwiseQuotient(d[a]);
        } else {
          w_new = VectorXd::Zero(q.size());
        }
      } else {
        // Solve u = ||w(u)|| with w_i(u) = q_i / (d_i + n tau2 / (2u)).
        double lo = 1e-300, hi = (q.cwiseQuotient(d[a])).norm() + 1.0;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          double s = 0.0;
          for (int i = 0; i < q.size(); ++i) {
            const double wi = q[i] / (d[a][i] + half_thresh / mid);
            s += wi * wi;
          }
          if (std::sqrt(s) > mid)
            lo = mid;
          else
            hi = mid;
        }
        const double u = 0.5 * (lo + hi);
        w_new.resize(q.size());
        for (int i = 0; i < q.size(); ++i)
          w_new[i] = q[i] / (d[a][i] + half_thresh / u);
      }
      fit += out.B[a] * (w_new - out.w[a]);
      max_delta = std::max(max_delta, (w_new - out.w[a]).cwiseAbs().maxCoeff());
      out.w[a] = w_new;
    }
    if (max_delta < tol) break;
  }

  out.fitted = VectorXd::Constant(n, out.b) + fit;
  out.block_norms.resize(p);
  double pen = 0.0;
  for (int a = 0; a < p; ++a) {
    out.block_norms[a] = out.w[a].norm();
    pen += out.block_norms[a];
  }
  out.objective = (y - out.fitted).squaredNorm() / n + tau2 * pen;
  return out;
}

// --------------------------------------------------------------------------
// lasso coordinate descent
// --------------------------------------------------------------------------

// Minimizes (1/n)||y - b - X beta||^2 + kappa * sum |beta_j| with an
// unpenalized intercept.  Plain cyclic soft-thresholding.
struct LassoOracle {
  VectorXd beta;
  double b;
};

inline LassoOracle lasso_cd(const MatrixXd &X, const VectorXd &y, double kappa,
                            int max_sweeps = 200000, double tol = 1e-13) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  LassoOracle out;
  out.beta = VectorXd::Zero(p);
  out.b = y.mean();
  VectorXd fit = VectorXd::Zero(n);
  const VectorXd ss = X.colwise().squaredNorm();
  const double half = 0.5 * n * kappa;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    const double b_new = (y - fit).mean();
    max_delta = std::max(max_delta, std::fabs(b_new - out.b));
    out.b = b_new;
    for (int j = 0; j < p; ++j) {
      if (ss[j] <= 0.0) continue;
      const double rho =
          X.col(j).dot(y - VectorXd::Constant(n, out.b) - fit) +
          ss[j] * out.beta[j];
      double bj = 0.0;
      if (rho > half)
        bj = (rho - half) / ss[j];
      else if (rho < -half)
        bj = (rho + half) / ss[j];
      if (bj != out.beta[j]) {
        fit += (bj - out.beta[j]) * X.col(j);
        max_delta = std::max(max_delta, std::fabs(bj - out.beta[j]));
        out.beta[j] = bj;
      }
    }
    if (max_delta < tol) break;
  }
  return out;
}

// --------------------------------------------------------------------------
// misc
// --------------------------------------------------------------------------

inline MatrixXd random_unit_matrix(int n, int d, cosso::Rng &rng) {
  MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

inline double min_eigenvalue(const MatrixXd &S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
  return eig.eigenvalues().minCoeff();
}

}  // namespace testutil
