#include "cosso/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cosso {

std::string Component::label() const {
  if (!interaction()) return "x" + std::to_string(j);
  return "x" + std::to_string(j) + "*x" + std::to_string(k);
}

AnovaDesign::AnovaDesign(int d, std::vector<Component> comps)
    : d_(d), components_(std::move(comps)) {}

AnovaDesign AnovaDesign::additive(int d) {
  if (d < 1) throw input_error("design needs at least one covariate");
  std::vector<Component> comps;
  comps.reserve(d);
  for (int j = 1; j <= d; ++j) comps.push_back({j, 0});
  return AnovaDesign(d, std::move(comps));
}

AnovaDesign AnovaDesign::twoway(int d) {
  if (d < 2) throw input_error("two-way design needs at least two covariates");
  std::vector<Component> comps;
  comps.reserve(d + d * (d - 1) / 2);
  for (int j = 1; j <= d; ++j) comps.push_back({j, 0});
  for (int j = 1; j <= d; ++j)
    for (int k = j + 1; k <= d; ++k) comps.push_back({j, k});
  return AnovaDesign(d, std::move(comps));
}

std::vector<int> AnovaDesign::variables_in(
    const std::vector<int> &component_ids) const {
  std::set<int> vars;
  for (int id : component_ids) {
    const Component &c = components_.at(id);
    vars.insert(c.j);
    if (c.interaction()) vars.insert(c.k);
  }
  return {vars.begin(), vars.end()};
}

std::vector<int> selected_components(const VectorXd &theta) {
  std::vector<int> out;
  for (int a = 0; a < theta.size(); ++a)
    if (theta[a] > kThetaZeroTol) out.push_back(a);
  return out;
}

int model_size(const VectorXd &theta) {
  return static_cast<int>(selected_components(theta).size());
}

Scaling Scaling::fit(const MatrixXd &X) {
  Scaling s;
  s.cols_.resize(X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    s.cols_[j].lo = X.col(j).minCoeff();
    s.cols_[j].hi = X.col(j).maxCoeff();
  }
  return s;
}

Scaling Scaling::identity(int d) {
  Scaling s;
  s.cols_.assign(d, ColumnScale{0.0, 1.0});
  return s;
}

Scaling Scaling::from_columns(std::vector<ColumnScale> cols) {
  Scaling s;
  s.cols_ = std::move(cols);
  return s;
}

MatrixXd Scaling::apply(const MatrixXd &X) const {
  if (is_identity()) return X;
  if (X.cols() != static_cast<Eigen::Index>(cols_.size()))
    throw input_error("column count does not match the stored scaling");
  MatrixXd out(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    const double lo = cols_[j].lo, hi = cols_[j].hi;
    if (hi - lo <= 0.0) {
      out.col(j).setConstant(0.5);  // constant training column
      continue;
    }
    out.col(j) = ((X.col(j).array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0);
  }
  return out;
}

std::vector<bool> Scaling::degenerate_columns() const {
  std::vector<bool> deg(cols_.size());
  for (size_t j = 0; j < cols_.size(); ++j) deg[j] = !(cols_[j].hi - cols_[j].lo > 0.0);
  return deg;
}

}  // namespace cosso
