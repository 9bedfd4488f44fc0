#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cosso/errors.hpp"

namespace cosso {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Weights smaller than this count as "component dropped" when model sizes and
// selected sets are reported.  The garrote itself produces exact zeros; the
// threshold only guards against stray positive dust.
inline constexpr double kThetaZeroTol = 1e-6;

// One functional ANOVA component: a main effect in variable j, or the
// interaction of variables j < k.  Variable indices are 1-based.
struct Component {
  int j = 0;
  int k = 0;  // 0 for a main effect

  bool interaction() const { return k != 0; }
  std::string label() const;
};

// An ordered component list over d covariates.  Additive designs carry the d
// main effects; two-way designs append all d(d-1)/2 pairwise interactions.
class AnovaDesign {
 public:
  static AnovaDesign additive(int d);
  static AnovaDesign twoway(int d);

  int d() const { return d_; }
  int p() const { return static_cast<int>(components_.size()); }
  const std::vector<Component> &components() const { return components_; }
  const Component &component(int alpha) const { return components_[alpha]; }

  // Distinct 1-based variable indices appearing in the given components.
  std::vector<int> variables_in(const std::vector<int> &component_ids) const;

 private:
  AnovaDesign(int d, std::vector<Component> comps);
  int d_ = 0;
  std::vector<Component> components_;
};

std::vector<int> selected_components(const VectorXd &theta);
int model_size(const VectorXd &theta);

// A design matrix (rows in the unit cube) with its response.
struct Dataset {
  MatrixXd X;
  VectorXd y;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

// Per-column affine map onto [0,1] remembered from the training data.  A
// constant column is degenerate and maps to 0.5.
struct ColumnScale {
  double lo = 0.0;
  double hi = 1.0;
};

class Scaling {
 public:
  Scaling() = default;  // identity (data already in the unit cube)

  static Scaling fit(const MatrixXd &X);
  static Scaling identity(int d);

  // Scales new rows with the stored parameters, clamping to [0,1].
  MatrixXd apply(const MatrixXd &X) const;

  bool is_identity() const { return cols_.empty(); }
  const std::vector<ColumnScale> &columns() const { return cols_; }
  std::vector<bool> degenerate_columns() const;

  static Scaling from_columns(std::vector<ColumnScale> cols);

 private:
  std::vector<ColumnScale> cols_;  // empty means identity
};

}  // namespace cosso
