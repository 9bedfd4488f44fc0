#include "cosso/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cosso/errors.hpp"
#include "cosso/kernel.hpp"
#include "cosso/rng.hpp"

namespace cosso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smoother matrix of the fixed-theta spline: with H = R_theta + n*lambda0*I,
//   b = u'y,  u = H^{-1}1 / (1'H^{-1}1),   c = H^{-1}(I - 1u')y,
// so  A = R_theta H^{-1}(I - 1u') + 1u'.
MatrixXd smoother_matrix(const MatrixXd &R, double lambda0) {
  const int n = static_cast<int>(R.rows());
  MatrixXd H = R + n * lambda0 * MatrixXd::Identity(n, n);
  Eigen::LLT<MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw numerical_error("smoother system is not positive definite");
  const MatrixXd Hin = llt.solve(MatrixXd::Identity(n, n));
  const VectorXd h1 = Hin * VectorXd::Ones(n);
  const double denom = h1.sum();
  if (!(denom > 0.0))
    throw numerical_error("smoother intercept direction collapsed");
  const VectorXd u = h1 / denom;
  MatrixXd A = R * (Hin - h1 * u.transpose());
  A.noalias() += VectorXd::Ones(n) * u.transpose();
  return A;
}

}  // namespace

double gcv_score(const GramSet &grams, const VectorXd &theta, const VectorXd &y,
                 double lambda0) {
  if (!(lambda0 > 0.0)) throw input_error("lambda0 must be positive");
  if (y.size() != grams.n()) throw input_error("response length mismatch");
  const int n = grams.n();
  const MatrixXd A = smoother_matrix(grams.weighted(theta), lambda0);
  const double tr = n - A.trace();
  if (tr <= 1e-8 * n)
    throw numerical_error("GCV denominator degenerate: smoother is near-interpolating");
  const double press = (y - A * y).squaredNorm() / n;
  const double frac = tr / n;
  return press / (frac * frac);
}

std::vector<std::vector<int>> make_folds(int n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) throw input_error("fold count must be in [2, n]");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::vector<std::vector<int>> folds(k);
  const int base = n / k, extra = n % k;
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return folds;
}

std::vector<std::vector<int>> canonicalize_folds(
    int n, std::vector<std::vector<int>> folds) {
  const int k = static_cast<int>(folds.size());
  if (k < 2) throw input_error("need at least 2 folds");
  std::vector<char> seen(n, 0);
  int covered = 0;
  for (auto &fold : folds) {
    if (static_cast<int>(fold.size()) < 2 && k != n)
      throw input_error("fold with fewer than 2 points");
    std::sort(fold.begin(), fold.end());
    for (int i : fold) {
      if (i < 0 || i >= n || seen[i]) throw input_error("folds must partition the rows");
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n) throw input_error("folds must cover every row");
  std::sort(folds.begin(), folds.end(),
            [](const auto &a, const auto &b) { return a.front() < b.front(); });
  return folds;
}

double kfold_cv_score(const Dataset &data, const AnovaDesign &design,
                      double lambda0, double M,
                      std::vector<std::vector<int>> folds) {
  const int n = data.n();
  folds = canonicalize_folds(n, std::move(folds));

  double acc = 0.0;
  for (const auto &fold : folds) {
    std::vector<char> held(n, 0);
    for (int i : fold) held[i] = 1;
    const int m = static_cast<int>(fold.size());
    MatrixXd Xtr(n - m, data.d()), Xte(m, data.d());
    VectorXd ytr(n - m), yte(m);
    int r = 0, t = 0;
    for (int i = 0; i < n; ++i) {
      if (held[i]) {
        Xte.row(t) = data.X.row(i);
        yte[t++] = data.y[i];
      } else {
        Xtr.row(r) = data.X.row(i);
        ytr[r++] = data.y[i];
      }
    }
    GramSet grams(Xtr, design);
    const auto fit = fit_one_step(grams, ytr, lambda0, M);
    const VectorXd pred = predict(fit, Xte);
    acc += (yte - pred).squaredNorm();
  }
  return acc / n;
}

double kfold_cv_score(const Dataset &data, const AnovaDesign &design,
                      double lambda0, double M, int k, std::uint64_t seed) {
  return kfold_cv_score(data, design, lambda0, M,
                        make_folds(data.n(), k, seed));
}

std::vector<double> default_lambda0_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 24; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

std::vector<double> default_m_grid(int p) {
  const double hi = std::min(2.0 * p, 50.0);
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back(hi * i / 40.0);
  return g;
}

namespace {

// Theta = 1 spline scored by k-fold CV: the stage-1 criterion when GCV is not
// requested.  Pooled like kfold_cv_score, same canonical partition.
double kfold_spline_score(const Dataset &data, const AnovaDesign &design,
                          double lambda0,
                          const std::vector<std::vector<int>> &folds) {
  const int n = data.n();
  double acc = 0.0;
  for (const auto &fold : folds) {
    std::vector<char> held(n, 0);
    for (int i : fold) held[i] = 1;
    const int m = static_cast<int>(fold.size());
    MatrixXd Xtr(n - m, data.d()), Xte(m, data.d());
    VectorXd ytr(n - m), yte(m);
    int r = 0, t = 0;
    for (int i = 0; i < n; ++i) {
      if (held[i]) {
        Xte.row(t) = data.X.row(i);
        yte[t++] = data.y[i];
      } else {
        Xtr.row(r) = data.X.row(i);
        ytr[r++] = data.y[i];
      }
    }
    GramSet grams(Xtr, design);
    const VectorXd ones = VectorXd::Ones(design.p());
    const auto sp = solve_spline(grams, ones, ytr, lambda0);
    FitState st;
    st.design = design;
    st.kernel = grams.kernel();
    st.X = Xtr;
    st.theta = ones;
    st.c = sp.c;
    st.b = sp.b;
    st.lambda0 = lambda0;
    const VectorXd pred = predict(st, Xte);
    acc += (yte - pred).squaredNorm();
  }
  return acc / n;
}

}  // namespace

GridPick pick_min(const std::vector<double> &grid,
                  const std::vector<double> &scores) {
  GridPick best;
  best.score = kInf;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(scores[i])) continue;
    if (scores[i] < best.score ||
        (scores[i] == best.score && grid[i] < best.value)) {
      best = {static_cast<int>(i), grid[i], scores[i]};
    }
  }
  return best;
}

std::pair<TuneReport, FitState> tune(const Dataset &data,
                                     const AnovaDesign &design,
                                     const Criterion &criterion,
                                     const TuneGrids &grids,
                                     std::uint64_t seed) {
  if (grids.lambda0.empty() || grids.m.empty())
    throw input_error("tuning grids must be non-empty");
  const int n = data.n();
  const int p = design.p();

  TuneReport rep;
  rep.criterion = criterion;
  rep.seed = seed;
  rep.lambda0_grid = grids.lambda0;
  rep.m_grid = grids.m;

  GramSet grams(data.X, design);
  const VectorXd ones = VectorXd::Ones(p);
  std::vector<std::vector<int>> folds;
  if (criterion.kind == Criterion::KFold)
    folds = make_folds(n, criterion.k, seed);

  // Stage 1: theta pinned at 1, sweep lambda0.  This is nothing more than
  // classical smoothing-spline tuning of the all-components model.
  for (double l0 : grids.lambda0) {
    double s = kInf;
    try {
      s = criterion.kind == Criterion::GCV
              ? gcv_score(grams, ones, data.y, l0)
              : kfold_spline_score(data, design, l0, folds);
    } catch (const numerical_error &) {
      // near-interpolating smoother: leave the score infinite
    }
    rep.lambda0_scores.push_back(s);
  }
  const GridPick l0_pick = pick_min(rep.lambda0_grid, rep.lambda0_scores);
  if (l0_pick.index < 0)
    throw numerical_error("every lambda0 grid point degenerated");
  rep.chosen_lambda0 = l0_pick.value;

  // Stage 2: sweep M through one-step fits at the chosen lambda0.
  rep.norm_trace.resize(static_cast<int>(grids.m.size()), p);
  for (size_t i = 0; i < grids.m.size(); ++i) {
    const double M = grids.m[i];
    const auto fit = fit_one_step(grams, data.y, rep.chosen_lambda0, M);
    rep.norm_trace.row(static_cast<int>(i)) =
        component_l1_norms(fit, grams).transpose();
    double s = kInf;
    try {
      s = criterion.kind == Criterion::GCV
              ? gcv_score(grams, fit.theta, data.y, rep.chosen_lambda0)
              : kfold_cv_score(data, design, rep.chosen_lambda0, M, folds);
    } catch (const numerical_error &) {
    }
    rep.m_scores.push_back(s);
  }
  const GridPick m_pick = pick_min(rep.m_grid, rep.m_scores);
  if (m_pick.index < 0) throw numerical_error("every M grid point degenerated");
  rep.chosen_m = m_pick.value;

  FitState final_fit =
      fit_one_step(grams, data.y, rep.chosen_lambda0, rep.chosen_m);
  return {std::move(rep), std::move(final_fit)};
}

}  // namespace cosso
