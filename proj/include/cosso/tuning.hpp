#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cosso/solver.hpp"
#include "cosso/types.hpp"

namespace cosso {

// ---------------------------------------------------------------------------
// Risk scores.
// ---------------------------------------------------------------------------

// GCV for the fixed-theta spline smoother: (1/n)||(I-A)y||^2 over
// ((1/n)tr(I-A))^2, with A formed explicitly from the stationarity system.
// Near-interpolating A (tr(I-A) <= 1e-8 n) raises numerical_error.
double gcv_score(const GramSet &grams, const VectorXd &theta, const VectorXd &y,
                 double lambda0);

// Seeded fold partition: uniform shuffle of 0..n-1, cut into k contiguous
// blocks (first n%k blocks one element larger).
std::vector<std::vector<int>> make_folds(int n, int k, std::uint64_t seed);

// Validates a partition of 0..n-1 and puts it in canonical form: each fold
// ascending, folds ordered by first element.  CV scores computed over the
// result depend only on the partition as a set family, bit for bit.  Folds of
// fewer than 2 points are rejected, except the all-singletons case k = n
// (leave-one-out).
std::vector<std::vector<int>> canonicalize_folds(
    int n, std::vector<std::vector<int>> folds);

// Mean held-out squared error, pooled over all n points; each fold's model is
// a one-step fit on the remaining rows.  The partition is canonicalized
// (folds sorted internally, then by smallest element) so the score depends
// only on the partition as a set family, bit for bit.  Folds of fewer than 2
// points are rejected, except the all-singletons case k = n (leave-one-out).
double kfold_cv_score(const Dataset &data, const AnovaDesign &design,
                      double lambda0, double M,
                      std::vector<std::vector<int>> folds);
double kfold_cv_score(const Dataset &data, const AnovaDesign &design,
                      double lambda0, double M, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two-stage tuning: lambda0 with theta = 1, then M by one-step fits.
// ---------------------------------------------------------------------------

struct Criterion {
  enum Kind { GCV, KFold } kind = GCV;
  int k = 5;  // folds, KFold only

  static Criterion gcv() { return {GCV, 0}; }
  static Criterion kfold(int k) { return {KFold, k}; }
  std::string label() const {
    return kind == GCV ? "gcv" : "cv" + std::to_string(k);
  }
};

struct TuneGrids {
  std::vector<double> lambda0;
  std::vector<double> m;
};

// Smallest score on a grid; ties go to the smaller grid value, and degenerate
// entries (non-finite score) never win.  index stays -1 if nothing is finite.
struct GridPick {
  int index = -1;
  double value = 0.0;
  double score = 0.0;
};
GridPick pick_min(const std::vector<double> &grid,
                  const std::vector<double> &scores);

// {2^-k : k = 0..24}; small magnitudes matter in practice.
std::vector<double> default_lambda0_grid();
// 41 evenly spaced points on [0, min(2p, 50)].
std::vector<double> default_m_grid(int p);

struct TuneReport {
  std::vector<double> lambda0_grid, lambda0_scores;
  std::vector<double> m_grid, m_scores;
  double chosen_lambda0 = 0.0;
  double chosen_m = 0.0;
  Criterion criterion;
  std::uint64_t seed = 0;
  // Row per M grid point: component L1 norms of that one-step fit, recorded
  // so the selection path can be dumped alongside the scores.
  MatrixXd norm_trace;
};

// Stage 1 scores lambda0 on the theta = 1 smoother; stage 2 scores M through
// one-step fits at the chosen lambda0.  Degenerate scores (near-interpolation)
// are skipped; if a whole grid degenerates this raises numerical_error.  Ties
// break towards the smaller grid value.
std::pair<TuneReport, FitState> tune(const Dataset &data,
                                     const AnovaDesign &design,
                                     const Criterion &criterion,
                                     const TuneGrids &grids,
                                     std::uint64_t seed);

}  // namespace cosso
