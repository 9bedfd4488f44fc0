#include "cosso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cosso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_regression_inputs(const MatrixXd &R, const VectorXd &y,
                             double lambda0) {
  if (R.rows() != R.cols()) throw input_error("Gram matrix must be square");
  if (R.rows() != y.size()) throw input_error("response length does not match Gram");
  if (!(lambda0 > 0.0)) throw input_error("lambda0 must be positive");
  if (!y.allFinite() || !R.allFinite())
    throw input_error("non-finite values in the solver input");
}

// Core of the (c, b) step in sqrt-weight coordinates.  With s = sqrt(w),
// H = diag(s) R diag(s), A = H + n*lambda0*I:
//   b = (s'A^{-1} (s.*t)) / (s'A^{-1} s),   c = s .* A^{-1}(s.*t - b s).
SplineSolution spline_core(const MatrixXd &R, const VectorXd &t,
                           const VectorXd &s, double lambda0) {
  const int n = static_cast<int>(t.size());
  SplineSolution sol;

  if (R.isZero(0.0)) {
    // All components switched off: the fit degenerates to the weighted mean
    // and c is fixed to zero by convention.
    sol.c = VectorXd::Zero(n);
    const VectorXd w = s.cwiseProduct(s);
    sol.b = w.dot(t) / w.sum();
    sol.stationarity_residual = 0.0;
    return sol;
  }

  const MatrixXd H = s.asDiagonal() * R * s.asDiagonal();
  const VectorXd zt = s.cwiseProduct(t);
  const double ridge = n * lambda0;

  auto attempt = [&](double jitter) -> SplineSolution {
    MatrixXd A = H;
    A.diagonal().array() += ridge + jitter;
    Eigen::LLT<MatrixXd> llt(A);
    SplineSolution out;
    if (llt.info() != Eigen::Success) {
      out.stationarity_residual = kInf;
      return out;
    }
    const VectorXd u1 = llt.solve(zt);
    const VectorXd u0 = llt.solve(s);
    const double denom = s.dot(u0);
    if (!(denom > 0.0)) {
      out.stationarity_residual = kInf;
      return out;
    }
    out.b = s.dot(u1) / denom;
    const VectorXd ct = u1 - out.b * u0;
    out.c = s.cwiseProduct(ct);
    // Certificate: residual of the symmetric stationarity system.
    const double r1 = (A * ct + out.b * s - zt).norm();
    const double r2 = std::fabs(s.dot(ct));
    out.stationarity_residual = r1 + r2;
    return out;
  };

  const double tol = 1e-8 * (t.norm() + 1.0);
  sol = attempt(0.0);
  if (sol.stationarity_residual > tol) {
    const double jitter = 1e-10 * R.trace() / n;
    SplineSolution retry = attempt(jitter);
    retry.jittered = true;
    if (retry.stationarity_residual > tol) {
      std::ostringstream msg;
      msg << "spline system could not be certified: residual "
          << std::min(sol.stationarity_residual, retry.stationarity_residual)
          << " (tolerance " << tol << "), diagonal scale " << H.diagonal().mean()
          << ", ridge " << ridge;
      throw numerical_error(msg.str());
    }
    sol = retry;
  }
  return sol;
}

}  // namespace

SplineSolution solve_spline(const MatrixXd &R_theta, const VectorXd &y,
                            double lambda0) {
  check_regression_inputs(R_theta, y, lambda0);
  return spline_core(R_theta, y, VectorXd::Ones(y.size()), lambda0);
}

SplineSolution solve_spline(const GramSet &grams, const VectorXd &theta,
                            const VectorXd &y, double lambda0) {
  return solve_spline(grams.weighted(theta), y, lambda0);
}

SplineSolution solve_spline_weighted(const MatrixXd &R_theta, const VectorXd &t,
                                     const VectorXd &w, double lambda0) {
  check_regression_inputs(R_theta, t, lambda0);
  if (w.size() != t.size()) throw input_error("weight length does not match");
  if ((w.array() <= 0.0).any()) throw input_error("weights must be positive");
  return spline_core(R_theta, t, w.cwiseSqrt(), lambda0);
}

GarroteProblem make_garrote_problem(const GramSet &grams, const VectorXd &y,
                                    const SplineSolution &spline,
                                    double lambda0) {
  const int n = grams.n();
  GarroteProblem prob;
  prob.G = grams.times_each(spline.c);
  prob.z = y - 0.5 * n * lambda0 * spline.c - VectorXd::Constant(n, spline.b);
  return prob;
}

GarroteProblem make_garrote_problem_weighted(const GramSet &grams,
                                             const VectorXd &t,
                                             const VectorXd &w,
                                             const SplineSolution &spline,
                                             double lambda0) {
  const int n = grams.n();
  const VectorXd s = w.cwiseSqrt();
  GarroteProblem prob;
  prob.G = s.asDiagonal() * grams.times_each(spline.c);
  prob.z = s.cwiseProduct(t - VectorXd::Constant(n, spline.b)) -
           0.5 * n * lambda0 * spline.c.cwiseQuotient(s);
  return prob;
}

namespace {

// Shared objective pieces of the two garrote forms:
//   minimize ||z - G theta||^2 + rho' theta
//   s.t. theta >= 0 and (constrained form only) sum(theta) <= M.
struct QpWork {
  const MatrixXd &G;
  const VectorXd &z;
  VectorXd rho;
  double M = kInf;  // kInf for the penalized form

  VectorXd gradient(const VectorXd &theta) const {
    return 2.0 * (G.transpose() * (G * theta - z)) + rho;
  }
};

// Equality-restricted subproblem: minimize over the free coordinates with
// theta fixed to 0 elsewhere; the sum constraint enters as an equality when
// it sits in the working set.  Returns the free-coordinate solution and the
// sum-constraint multiplier.
struct SubSolution {
  VectorXd theta_free;
  double nu = 0.0;
};

SubSolution solve_subproblem(const QpWork &qp, const std::vector<int> &free,
                             bool sum_active) {
  const int f = static_cast<int>(free.size());
  SubSolution out;
  if (f == 0) {
    out.theta_free.resize(0);
    return out;
  }
  MatrixXd Gf(qp.G.rows(), f);
  VectorXd rf(f);
  for (int i = 0; i < f; ++i) {
    Gf.col(i) = qp.G.col(free[i]);
    rf[i] = qp.rho[free[i]];
  }
  MatrixXd Hf = 2.0 * (Gf.transpose() * Gf);
  const VectorXd lin = 2.0 * (Gf.transpose() * qp.z) - rf;
  const double hscale = Hf.diagonal().cwiseAbs().maxCoeff() + 1.0;

  if (!sum_active) {
    Eigen::LDLT<MatrixXd> ldlt(Hf);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
      out.theta_free = ldlt.solve(lin);
      ok = (Hf * out.theta_free - lin).cwiseAbs().maxCoeff() <= 1e-9 * hscale;
    }
    if (!ok) {
      // Rank-deficient block (duplicated components): fall back to a faintly
      // ridged system so the outer loop can keep moving; the final KKT
      // certificate decides whether the answer stands.
      MatrixXd Hr = Hf;
      Hr.diagonal().array() += 1e-12 * hscale;
      out.theta_free = Hr.ldlt().solve(lin);
    }
    return out;
  }

  MatrixXd K = MatrixXd::Zero(f + 1, f + 1);
  K.topLeftCorner(f, f) = Hf;
  K.topRightCorner(f, 1).setOnes();
  K.bottomLeftCorner(1, f).setOnes();
  VectorXd rhs(f + 1);
  rhs.head(f) = lin;
  rhs[f] = qp.M;
  Eigen::FullPivLU<MatrixXd> lu(K);
  VectorXd sol;
  if (lu.isInvertible()) {
    sol = lu.solve(rhs);
  } else {
    MatrixXd Kr = K;
    Kr.topLeftCorner(f, f).diagonal().array() += 1e-12 * hscale;
    sol = Kr.fullPivLu().solve(rhs);
  }
  out.theta_free = sol.head(f);
  out.nu = sol[f];
  return out;
}

GarroteResult run_active_set(const QpWork &qp) {
  const int p = static_cast<int>(qp.G.cols());
  const int max_iters = 100 * p;
  const double gscale =
      std::max(1.0, (2.0 * (qp.G.transpose() * qp.z)).cwiseAbs().maxCoeff());
  const bool constrained = std::isfinite(qp.M);
  const double feas_tol = 1e-10 * std::max(1.0, constrained ? qp.M : 1.0);

  VectorXd theta = VectorXd::Zero(p);
  std::vector<bool> at_bound(p, true);
  bool sum_active = false;
  double nu = 0.0;

  GarroteResult res;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    std::vector<int> free;
    for (int a = 0; a < p; ++a)
      if (!at_bound[a]) free.push_back(a);

    SubSolution sub = solve_subproblem(qp, free, sum_active);

    VectorXd cand = VectorXd::Zero(p);
    for (size_t i = 0; i < free.size(); ++i) cand[free[i]] = sub.theta_free[i];
    const double cand_sum = cand.sum();

    const bool bounds_ok =
        free.empty() ||
        sub.theta_free.minCoeff() >= -feas_tol;
    const bool sum_ok = sum_active || !constrained || cand_sum <= qp.M + feas_tol;

    if (bounds_ok && sum_ok) {
      theta = cand.cwiseMax(0.0);
      nu = sum_active ? sub.nu : 0.0;

      // Multiplier scan: free the most negative one, preferring the lowest
      // component index on ties.
      if (sum_active && sub.nu < -1e-9 * gscale) {
        sum_active = false;
        continue;
      }
      const VectorXd g = qp.gradient(theta);
      int worst = -1;
      double worst_mu = -1e-9 * gscale;
      for (int a = 0; a < p; ++a) {
        if (!at_bound[a]) continue;
        const double mu = g[a] + nu;
        if (mu < worst_mu) {
          worst_mu = mu;
          worst = a;
        }
      }
      if (worst < 0) break;  // KKT satisfied
      at_bound[worst] = false;
      continue;
    }

    // Partial step towards the subproblem solution, blocked by the first
    // constraint hit.
    double step = 1.0;
    int blocking = -1;           // component index, or p for the sum row
    for (size_t i = 0; i < free.size(); ++i) {
      const int a = free[i];
      if (cand[a] < 0.0 && cand[a] < theta[a]) {
        const double s = theta[a] / (theta[a] - cand[a]);
        if (s < step - 1e-15) {
          step = s;
          blocking = a;
        }
      }
    }
    if (!sum_active && constrained) {
      const double cur_sum = theta.sum();
      if (cand_sum > qp.M && cand_sum > cur_sum) {
        const double s = (qp.M - cur_sum) / (cand_sum - cur_sum);
        if (s < step - 1e-15) {
          step = s;
          blocking = p;
        }
      }
    }
    if (blocking < 0) {
      // Numerical dust: accept the candidate clamped into the feasible set.
      theta = cand.cwiseMax(0.0);
      if (constrained && theta.sum() > qp.M && theta.sum() > 0.0)
        theta *= qp.M / theta.sum();
      continue;
    }
    theta += step * (cand - theta);
    theta = theta.cwiseMax(0.0);
    if (blocking == p) {
      sum_active = true;
    } else {
      theta[blocking] = 0.0;
      at_bound[blocking] = true;
    }
  }

  if (iter >= max_iters) {
    std::ostringstream msg;
    msg << "garrote active-set did not converge in " << max_iters
        << " iterations; best feasible objective "
        << (qp.z - qp.G * theta).squaredNorm() + qp.rho.dot(theta)
        << ", sum(theta) = " << theta.sum();
    throw numerical_error(msg.str());
  }

  // Final certificate, recomputed from scratch on the returned point.
  const VectorXd g = qp.gradient(theta);
  const double sum_gap = constrained ? qp.M - theta.sum() : kInf;
  const bool binding = constrained && sum_gap <= 1e-8 * std::max(1.0, qp.M);
  double cert_nu = binding ? std::max(0.0, nu) : 0.0;
  double viol = 0.0;
  for (int a = 0; a < p; ++a) {
    if (theta[a] > 0.0)
      viol = std::max(viol, std::fabs(g[a] + cert_nu));
    else
      viol = std::max(viol, std::max(0.0, -(g[a] + cert_nu)));
  }
  if (constrained && !binding) viol = std::max(viol, std::max(0.0, -sum_gap));
  if (binding) viol = std::max(viol, std::max(0.0, -nu));

  res.theta = theta;
  res.nu = cert_nu;
  res.sum_binding = binding;
  res.iterations = iter + 1;
  res.kkt_residual = viol / gscale;
  if (res.kkt_residual > 1e-6) {
    std::ostringstream msg;
    msg << "garrote KKT certificate failed: scaled violation "
        << res.kkt_residual;
    throw numerical_error(msg.str());
  }
  return res;
}

}  // namespace

GarroteResult garrote_step(const GarroteProblem &prob, double M) {
  if (!(M >= 0.0)) throw input_error("garrote bound M must be nonnegative");
  const int p = static_cast<int>(prob.G.cols());
  if (prob.z.size() != prob.G.rows())
    throw input_error("garrote problem dimensions disagree");

  if (M == 0.0) {
    GarroteResult res;
    res.theta = VectorXd::Zero(p);
    const VectorXd g0 = -2.0 * (prob.G.transpose() * prob.z);
    res.nu = std::max(0.0, -g0.minCoeff());
    res.sum_binding = true;
    res.iterations = 0;
    res.kkt_residual = 0.0;
    return res;
  }

  QpWork qp{prob.G, prob.z, VectorXd::Zero(p), M};
  return run_active_set(qp);
}

GarroteResult garrote_step_penalized(const GarroteProblem &prob,
                                     double penalty) {
  if (!(penalty >= 0.0)) throw input_error("garrote penalty must be nonnegative");
  const int p = static_cast<int>(prob.G.cols());
  QpWork qp{prob.G, prob.z, VectorXd::Constant(p, penalty), kInf};
  GarroteResult res = run_active_set(qp);
  res.nu = penalty;
  res.sum_binding = false;
  return res;
}

double cosso_objective(const GramSet &grams, const VectorXd &y,
                       const VectorXd &theta, const VectorXd &c, double b,
                       double lambda0) {
  const int n = grams.n();
  const MatrixXd G = grams.times_each(c);
  const VectorXd f = G * theta;
  const double rss = (y.array() - f.array() - b).matrix().squaredNorm();
  const double rough = theta.dot(G.transpose() * c);
  return rss / n + lambda0 * rough;
}

namespace {

double objective_weighted(const GramSet &grams, const VectorXd &t,
                          const VectorXd &w, const VectorXd &theta,
                          const VectorXd &c, double b, double lambda0) {
  const int n = grams.n();
  const MatrixXd G = grams.times_each(c);
  const VectorXd r = t - G * theta - VectorXd::Constant(n, b);
  const double rss = r.cwiseProduct(r).dot(w);
  const double rough = theta.dot(G.transpose() * c);
  return rss / n + lambda0 * rough;
}

void enforce_descent(double before, double after, const char *stage) {
  const double slack = 1e-10 * (1.0 + std::fabs(before));
  if (after > before + slack) {
    std::ostringstream msg;
    msg << "objective increased across " << stage << ": " << before << " -> "
        << after;
    throw internal_error(msg.str());
  }
}

FitState one_step_core(const GramSet &grams, const VectorXd &t,
                       const VectorXd &w, double lambda0, double M) {
  if (!(M >= 0.0)) throw input_error("M must be nonnegative");
  const int p = grams.p();
  FitState st;
  st.design = grams.design();
  st.kernel = grams.kernel();
  st.X = grams.X();
  st.lambda0 = lambda0;
  st.M = M;

  const VectorXd ones = VectorXd::Ones(p);
  SplineSolution pilot = solve_spline_weighted(grams.weighted(ones), t, w, lambda0);
  st.objective_trace.push_back(
      objective_weighted(grams, t, w, ones, pilot.c, pilot.b, lambda0));

  GarroteProblem prob = make_garrote_problem_weighted(grams, t, w, pilot, lambda0);
  GarroteResult gar = garrote_step(prob, M);
  const double obj_gar =
      objective_weighted(grams, t, w, gar.theta, pilot.c, pilot.b, lambda0);
  st.objective_trace.push_back(obj_gar);
  if (M >= static_cast<double>(p))
    enforce_descent(st.objective_trace[0], obj_gar, "garrote step");

  SplineSolution fin = solve_spline_weighted(grams.weighted(gar.theta), t, w, lambda0);
  const double obj_fin =
      objective_weighted(grams, t, w, gar.theta, fin.c, fin.b, lambda0);
  st.objective_trace.push_back(obj_fin);
  enforce_descent(obj_gar, obj_fin, "spline refit");

  st.theta = gar.theta;
  st.c = fin.c;
  st.b = fin.b;
  st.objective = obj_fin;
  st.sum_theta = gar.theta.sum();
  st.nu = gar.nu;
  st.iterations = 1;
  return st;
}

}  // namespace

FitState fit_one_step(const GramSet &grams, const VectorXd &y, double lambda0,
                      double M) {
  return one_step_core(grams, y, VectorXd::Ones(y.size()), lambda0, M);
}

FitState fit_one_step_weighted(const GramSet &grams, const VectorXd &t,
                               const VectorXd &w, double lambda0, double M) {
  return one_step_core(grams, t, w, lambda0, M);
}

FitState fit_full_iterate(const GramSet &grams, const VectorXd &y,
                          double lambda0, double M, int max_iters,
                          const VectorXd *theta0, double tol) {
  if (!(M >= 0.0)) throw input_error("M must be nonnegative");
  const int p = grams.p();
  const VectorXd w = VectorXd::Ones(y.size());

  FitState st;
  st.design = grams.design();
  st.kernel = grams.kernel();
  st.X = grams.X();
  st.lambda0 = lambda0;
  st.M = M;

  VectorXd theta = theta0 ? *theta0 : VectorXd::Ones(p);
  if (theta.size() != p) throw input_error("theta0 length does not match");
  SplineSolution sp = solve_spline(grams.weighted(theta), y, lambda0);
  double obj = cosso_objective(grams, y, theta, sp.c, sp.b, lambda0);
  st.objective_trace.push_back(obj);
  // The all-ones start may violate sum(theta) <= M.  While the reference
  // value belongs to an infeasible point it is useless both for the descent
  // assertion and for the stopping rule (restoring feasibility can eat the
  // whole apparent improvement), so both wait until the reference is feasible.
  bool ref_feasible = theta.sum() <= M * (1.0 + 1e-12);

  GarroteResult gar;
  gar.theta = theta;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    GarroteProblem prob = make_garrote_problem(grams, y, sp, lambda0);
    gar = garrote_step(prob, M);
    const double obj_gar =
        cosso_objective(grams, y, gar.theta, sp.c, sp.b, lambda0);
    st.objective_trace.push_back(obj_gar);
    if (ref_feasible) enforce_descent(obj, obj_gar, "garrote step");

    sp = solve_spline(grams.weighted(gar.theta), y, lambda0);
    const double obj_sp =
        cosso_objective(grams, y, gar.theta, sp.c, sp.b, lambda0);
    st.objective_trace.push_back(obj_sp);
    enforce_descent(obj_gar, obj_sp, "spline refit");

    const double drop = obj - obj_sp;
    obj = obj_sp;
    if (ref_feasible && drop < tol * std::max(1.0, std::fabs(obj))) {
      ++iter;
      break;
    }
    ref_feasible = true;
  }

  st.theta = gar.theta;
  st.c = sp.c;
  st.b = sp.b;
  st.objective = obj;
  st.sum_theta = gar.theta.sum();
  st.nu = gar.nu;
  st.iterations = iter;
  return st;
}

FitState fit_full_iterate_penalized(const GramSet &grams, const VectorXd &y,
                                    double lambda0, double lambda,
                                    int max_iters, double tol) {
  if (!(lambda >= 0.0)) throw input_error("lambda must be nonnegative");
  const int n = grams.n();
  const int p = grams.p();
  const double penalty = n * lambda;

  FitState st;
  st.design = grams.design();
  st.kernel = grams.kernel();
  st.X = grams.X();
  st.lambda0 = lambda0;
  st.M = kInf;

  VectorXd theta = VectorXd::Ones(p);
  SplineSolution sp = solve_spline(grams.weighted(theta), y, lambda0);
  // Trace records the penalized objective, which both steps decrease from the
  // very start (there is no feasibility caveat in this form).
  auto pen_obj = [&](const VectorXd &th, const SplineSolution &s) {
    return cosso_objective(grams, y, th, s.c, s.b, lambda0) +
           lambda * th.sum();
  };
  double obj = pen_obj(theta, sp);
  st.objective_trace.push_back(obj);

  GarroteResult gar;
  gar.theta = theta;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    GarroteProblem prob = make_garrote_problem(grams, y, sp, lambda0);
    gar = garrote_step_penalized(prob, penalty);
    const double obj_gar = pen_obj(gar.theta, sp);
    st.objective_trace.push_back(obj_gar);
    enforce_descent(obj, obj_gar, "garrote step");

    sp = solve_spline(grams.weighted(gar.theta), y, lambda0);
    const double obj_sp = pen_obj(gar.theta, sp);
    st.objective_trace.push_back(obj_sp);
    enforce_descent(obj_gar, obj_sp, "spline refit");

    const double drop = obj - obj_sp;
    obj = obj_sp;
    if (drop < tol * std::max(1.0, std::fabs(obj))) {
      ++iter;
      break;
    }
  }

  st.theta = gar.theta;
  st.c = sp.c;
  st.b = sp.b;
  st.objective = cosso_objective(grams, y, st.theta, st.c, st.b, lambda0);
  st.sum_theta = st.theta.sum();
  st.nu = penalty;
  st.iterations = iter;
  return st;
}

VectorXd predict(const FitState &fit, const MatrixXd &Xnew_raw) {
  MatrixXd Xs = fit.scaling.apply(Xnew_raw);
  Xs = Xs.cwiseMax(0.0).cwiseMin(1.0);
  if (Xs.cols() != fit.design.d())
    throw input_error("prediction rows have the wrong number of columns");
  const MatrixXd K =
      weighted_cross_gram(Xs, fit.X, fit.design, fit.theta, fit.kernel);
  return (K * fit.c).array() + fit.b;
}

VectorXd fitted_values(const FitState &fit, const GramSet &grams) {
  return (grams.weighted(fit.theta) * fit.c).array() + fit.b;
}

VectorXd component_l1_norms(const FitState &fit, const GramSet &grams) {
  const int p = grams.p();
  VectorXd norms(p);
  for (int a = 0; a < p; ++a) {
    if (fit.theta[a] == 0.0) {
      norms[a] = 0.0;
      continue;
    }
    norms[a] =
        fit.theta[a] * (grams.component(a) * fit.c).cwiseAbs().mean();
  }
  return norms;
}

VectorXd component_rkhs_norms(const FitState &fit, const GramSet &grams) {
  const int p = grams.p();
  VectorXd norms(p);
  for (int a = 0; a < p; ++a) {
    const double q = fit.c.dot(grams.component(a) * fit.c);
    norms[a] = fit.theta[a] * std::sqrt(std::max(0.0, q));
  }
  return norms;
}

}  // namespace cosso
