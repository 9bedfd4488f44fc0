#include "cosso/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "cosso/errors.hpp"
#include "cosso/kernel.hpp"

namespace cosso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFClamp = 30.0;
constexpr double kWeightFloor = 1e-6;
constexpr double kDevSlack = 1e-8;
constexpr double kDevRelTol = 1e-6;

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(1 + e^v), evaluated in the falling tail so it never overflows.
double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

void check_labels(const VectorXd &y) {
  for (int i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw input_error("labels must be exactly 0 or 1");
}

// Working response and weights at the current logit.  Two guards against
// separation: the logit is clamped to +-30, and the weights are floored at
// 1e-6.  The floor is the one that actually engages (it throttles the logit
// growth near |f| ~ 14, well short of the clamp), so either guard firing is
// reported as the separation signal.
struct Working {
  VectorXd t, w;
  bool guarded = false;
};

Working working_quantities(const VectorXd &f, const VectorXd &y) {
  const int n = static_cast<int>(f.size());
  Working out;
  out.t.resize(n);
  out.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double fc = f[i];
    if (fc > kFClamp) {
      fc = kFClamp;
      out.guarded = true;
    } else if (fc < -kFClamp) {
      fc = -kFClamp;
      out.guarded = true;
    }
    const double p = sigmoid(fc);
    const double raw = p * (1.0 - p);
    if (raw < kWeightFloor) out.guarded = true;
    out.w[i] = std::max(raw, kWeightFloor);
    out.t[i] = fc + (y[i] - p) / out.w[i];
  }
  return out;
}

// IRLS loop shared by the selection fit and the theta = 1 spline used during
// stage-1 tuning.  The kept state always reproduces the kept logit: a step is
// only ever accepted as the fitted values of a solve, never as an interpolated
// vector, so step-halving re-solves from the walked-back logit.
LogisticFit irls_core(const GramSet &grams, const VectorXd &y, double lambda0,
                      double M, int max_iters, bool select) {
  const int n = grams.n();
  const double two_n = 2.0 * n;
  LogisticFit out;

  const double ybar = y.mean();
  const double f0 = std::log(ybar / (1.0 - ybar));
  VectorXd f = VectorXd::Constant(n, f0);
  double dev = two_n * logistic_loss(f, y);
  out.deviance_trace.push_back(dev);

  // Intercept-only logit, so a zero-iteration exit still predicts.
  FitState state;
  state.design = grams.design();
  state.kernel = grams.kernel();
  state.X = grams.X();
  state.theta = VectorXd::Zero(grams.p());
  state.c = VectorXd::Zero(n);
  state.b = f0;
  state.lambda0 = lambda0;
  state.M = M;

  MatrixXd R1;
  if (!select) R1 = grams.weighted(VectorXd::Ones(grams.p()));

  auto newton_candidate = [&](const VectorXd &fcur) {
    const Working wq = working_quantities(fcur, y);
    if (wq.guarded) out.separation_warning = true;
    if (select) return fit_one_step_weighted(grams, wq.t, wq.w, lambda0, M);
    const auto sp = solve_spline_weighted(R1, wq.t, wq.w, lambda0);
    FitState cand;
    cand.design = grams.design();
    cand.kernel = grams.kernel();
    cand.X = grams.X();
    cand.theta = VectorXd::Ones(grams.p());
    cand.c = sp.c;
    cand.b = sp.b;
    cand.lambda0 = lambda0;
    cand.M = kInf;
    return cand;
  };

  for (int it = 0; it < max_iters; ++it) {
    FitState cand = newton_candidate(f);
    VectorXd fN = fitted_values(cand, grams);
    double devN = two_n * logistic_loss(fN, y);

    if (devN > dev + kDevSlack) {
      // Overshoot: walk the target logit back towards the current one and
      // re-solve from there, so acceptance keeps state and logit in sync.
      bool rescued = false;
      const VectorXd dir = fN - f;
      for (int h = 1; h <= 6 && !rescued; ++h) {
        cand = newton_candidate(f + std::ldexp(1.0, -h) * dir);
        fN = fitted_values(cand, grams);
        devN = two_n * logistic_loss(fN, y);
        rescued = devN <= dev + kDevSlack;
      }
      if (!rescued) break;
    }

    f = std::move(fN);
    state = std::move(cand);
    out.deviance_trace.push_back(devN);
    ++out.iterations;
    const bool settled =
        std::abs(dev - devN) <= kDevRelTol * (std::abs(dev) + 1e-12);
    dev = devN;
    if (settled) break;
  }

  out.fit = std::move(state);
  return out;
}

// Summed held-out contribution of one fold, given its predicted logits.
double heldout_loss(const VectorXd &logits, const VectorXd &yte,
                    ClassLoss loss) {
  double acc = 0.0;
  for (int i = 0; i < logits.size(); ++i) {
    if (loss == ClassLoss::Misclassification)
      acc += (logits[i] > 0.0) != (yte[i] == 1.0) ? 1.0 : 0.0;
    else
      acc += 2.0 * (-yte[i] * logits[i] + softplus(logits[i]));
  }
  return acc;
}

void check_two_classes(const VectorXd &y) {
  check_labels(y);
  if (y.size() < 2 || y.minCoeff() == y.maxCoeff())
    throw input_error("both classes must be present");
}

}  // namespace

double logistic_loss(const VectorXd &f, const VectorXd &y) {
  if (f.size() != y.size()) throw input_error("logit/label length mismatch");
  check_labels(y);
  double acc = 0.0;
  for (int i = 0; i < f.size(); ++i) acc += -y[i] * f[i] + softplus(f[i]);
  return acc / static_cast<double>(f.size());
}

VectorXd logistic_loss_gradient(const VectorXd &f, const VectorXd &y) {
  if (f.size() != y.size()) throw input_error("logit/label length mismatch");
  check_labels(y);
  VectorXd g(f.size());
  for (int i = 0; i < f.size(); ++i)
    g[i] = (sigmoid(f[i]) - y[i]) / static_cast<double>(f.size());
  return g;
}

LogisticFit irls_fit(const Dataset &data, const AnovaDesign &design,
                     double lambda0, double M, int max_iters) {
  check_two_classes(data.y);
  if (!(lambda0 > 0.0)) throw input_error("lambda0 must be positive");
  if (!(M >= 0.0)) throw input_error("component budget must be non-negative");
  if (max_iters < 1) throw input_error("need at least one IRLS iteration");
  GramSet grams(data.X, design);
  return irls_core(grams, data.y, lambda0, M, max_iters, /*select=*/true);
}

VectorXd predict_probability(const LogisticFit &model,
                             const MatrixXd &Xnew_raw) {
  VectorXd p = predict(model.fit, Xnew_raw);
  for (int i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
  return p;
}

namespace {

// Shared fold loop: fit on the complement, score the held-out logits, pool.
template <typename FitLogit>
double pooled_fold_score(const Dataset &data, ClassLoss loss,
                         std::vector<std::vector<int>> folds,
                         const FitLogit &fit_logit) {
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
    acc += heldout_loss(fit_logit(Xtr, ytr, Xte), yte, loss);
  }
  return acc / n;
}

}  // namespace

double kfold_class_score(const Dataset &data, const AnovaDesign &design,
                         double lambda0, double M, ClassLoss loss,
                         std::vector<std::vector<int>> folds) {
  check_two_classes(data.y);
  return pooled_fold_score(
      data, loss, std::move(folds),
      [&](const MatrixXd &Xtr, const VectorXd &ytr, const MatrixXd &Xte) {
        check_two_classes(ytr);
        GramSet grams(Xtr, design);
        const auto model =
            irls_core(grams, ytr, lambda0, M, 15, /*select=*/true);
        return predict(model.fit, Xte);
      });
}

double kfold_class_score(const Dataset &data, const AnovaDesign &design,
                         double lambda0, double M, ClassLoss loss, int k,
                         std::uint64_t seed) {
  return kfold_class_score(data, design, lambda0, M, loss,
                           make_folds(data.n(), k, seed));
}

std::pair<TuneReport, LogisticFit> tune_logistic(const Dataset &data,
                                                 const AnovaDesign &design,
                                                 int k, ClassLoss loss,
                                                 const TuneGrids &grids,
                                                 std::uint64_t seed) {
  if (grids.lambda0.empty() || grids.m.empty())
    throw input_error("tuning grids must be non-empty");
  check_two_classes(data.y);
  const int p = design.p();

  TuneReport rep;
  rep.criterion = Criterion::kfold(k);
  rep.seed = seed;
  rep.lambda0_grid = grids.lambda0;
  rep.m_grid = grids.m;
  const auto folds = make_folds(data.n(), k, seed);

  // Stage 1: theta pinned at 1, sweep lambda0 on the IRLS spline.
  for (double l0 : grids.lambda0) {
    double s = kInf;
    try {
      s = pooled_fold_score(
          data, loss, folds,
          [&](const MatrixXd &Xtr, const VectorXd &ytr, const MatrixXd &Xte) {
            check_two_classes(ytr);
            GramSet grams(Xtr, design);
            const auto model =
                irls_core(grams, ytr, l0, kInf, 15, /*select=*/false);
            return predict(model.fit, Xte);
          });
    } catch (const numerical_error &) {
    }
    rep.lambda0_scores.push_back(s);
  }
  const GridPick l0_pick = pick_min(rep.lambda0_grid, rep.lambda0_scores);
  if (l0_pick.index < 0)
    throw numerical_error("every lambda0 grid point degenerated");
  rep.chosen_lambda0 = l0_pick.value;

  // Stage 2: sweep M through full IRLS fits at the chosen lambda0.
  GramSet grams(data.X, design);
  rep.norm_trace.resize(static_cast<int>(grids.m.size()), p);
  for (size_t i = 0; i < grids.m.size(); ++i) {
    const double M = grids.m[i];
    const auto full = irls_fit(data, design, rep.chosen_lambda0, M);
    rep.norm_trace.row(static_cast<int>(i)) =
        component_l1_norms(full.fit, grams).transpose();
    double s = kInf;
    try {
      s = kfold_class_score(data, design, rep.chosen_lambda0, M, loss, folds);
    } catch (const numerical_error &) {
    }
    rep.m_scores.push_back(s);
  }
  const GridPick m_pick = pick_min(rep.m_grid, rep.m_scores);
  if (m_pick.index < 0) throw numerical_error("every M grid point degenerated");
  rep.chosen_m = m_pick.value;

  LogisticFit final_fit = irls_fit(data, design, rep.chosen_lambda0, rep.chosen_m);
  return {std::move(rep), std::move(final_fit)};
}

}  // namespace cosso
