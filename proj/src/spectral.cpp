#include "cosso/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cosso/errors.hpp"
#include "cosso/kernel.hpp"
#include "cosso/rng.hpp"

namespace cosso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_m(int m) {
  if (m < 4 || m % 2 != 0)
    throw input_error("per-axis grid count must be even and at least 4");
}

// 1-based basis index to its axis penalty weight.
double axis_weight(int idx, int m) {
  if (idx == 1) return 0.0;
  if (idx == m) return std::pow(M_PI * m, 4);
  return std::pow(2.0 * M_PI * (idx / 2), 4);
}

// Applies f(mu, nu) over the 1-based index pairs of a block.
template <typename F>
void for_block(int m, Block block, F &&f) {
  switch (block) {
    case Block::Main1:
      for (int mu = 2; mu <= m; ++mu) f(mu, 1);
      break;
    case Block::Main2:
      for (int nu = 2; nu <= m; ++nu) f(1, nu);
      break;
    case Block::Interaction:
      for (int mu = 2; mu <= m; ++mu)
        for (int nu = 2; nu <= m; ++nu) f(mu, nu);
      break;
  }
}

}  // namespace

FourierGrid::FourierGrid(int m_in) : m(m_in) { check_m(m); }

MatrixXd FourierGrid::points() const {
  MatrixXd P(n(), 2);
  for (int k = 1; k <= m; ++k)
    for (int l = 1; l <= m; ++l) {
      const int i = (k - 1) * m + (l - 1);
      P(i, 0) = static_cast<double>(k) / m;
      P(i, 1) = static_cast<double>(l) / m;
    }
  return P;
}

MatrixXd trig_basis(int m) {
  check_m(m);
  const double root2 = std::sqrt(2.0);
  MatrixXd B(m, m);
  for (int k = 1; k <= m; ++k) {
    const double t = static_cast<double>(k) / m;
    B(k - 1, 0) = 1.0;
    for (int v = 1; v <= m / 2 - 1; ++v) {
      B(k - 1, 2 * v - 1) = root2 * std::cos(2 * M_PI * v * t);
      B(k - 1, 2 * v) = root2 * std::sin(2 * M_PI * v * t);
    }
    B(k - 1, m - 1) = std::cos(M_PI * m * t);
  }
  return B;
}

SpectralCoeffs spectral_transform(const VectorXd &y, int m) {
  check_m(m);
  if (y.size() != static_cast<Eigen::Index>(m) * m)
    throw input_error("response length must be the squared grid count");
  const MatrixXd B = trig_basis(m);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
      Y(y.data(), m, m);
  SpectralCoeffs out;
  out.m = m;
  out.z = (B.transpose() * Y * B) / static_cast<double>(m * m);
  out.q = penalty_weights(m);
  return out;
}

VectorXd spectral_inverse(const MatrixXd &coef) {
  const int m = static_cast<int>(coef.rows());
  check_m(m);
  if (coef.cols() != m) throw input_error("coefficient table must be square");
  const MatrixXd B = trig_basis(m);
  const MatrixXd Y = B * coef * B.transpose();
  VectorXd y(m * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) y[k * m + l] = Y(k, l);
  return y;
}

MatrixXd penalty_weights(int m) {
  check_m(m);
  MatrixXd q(m, m);
  for (int mu = 1; mu <= m; ++mu)
    for (int nu = 1; nu <= m; ++nu) {
      const double wmu = axis_weight(mu, m), wnu = axis_weight(nu, m);
      if (mu == 1 && nu == 1)
        q(0, 0) = 0.0;
      else if (nu == 1)
        q(mu - 1, 0) = wmu;
      else if (mu == 1)
        q(0, nu - 1) = wnu;
      else
        q(mu - 1, nu - 1) = wmu * wnu;
    }
  return q;
}

double u_statistic(const SpectralCoeffs &coeffs, Block block) {
  double u = 0.0;
  for_block(coeffs.m, block, [&](int mu, int nu) {
    const double z = coeffs.z(mu - 1, nu - 1);
    u += z * z / coeffs.q(mu - 1, nu - 1);
  });
  return u;
}

double theta_minimize_1d(const SpectralCoeffs &coeffs, Block block,
                         double lambda) {
  if (!(lambda >= 0.0)) throw input_error("lambda must be non-negative");
  const double U = u_statistic(coeffs, block);
  if (U == 0.0) return 0.0;
  if (lambda == 0.0) return kInf;  // unpenalized limit, nothing shrinks
  if (U <= lambda) return 0.0;

  // A'(theta) = lambda - sum q z^2 (q + theta)^-2 increases from A'(0) < 0,
  // so the positive root is bracketed by doubling and then bisected.
  auto aprime = [&](double th) {
    double s = 0.0;
    for_block(coeffs.m, block, [&](int mu, int nu) {
      const double q = coeffs.q(mu - 1, nu - 1);
      const double z = coeffs.z(mu - 1, nu - 1);
      const double denom = q + th;
      s += q * z * z / (denom * denom);
    });
    return lambda - s;
  };
  double lo = 0.0, hi = 1.0;
  while (aprime(hi) < 0.0) hi *= 2.0;
  while (hi - lo > 1e-10 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    (aprime(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::array<bool, 3> SpectralFit::selected() const {
  return {theta[0] > 0.0, theta[1] > 0.0, theta[2] > 0.0};
}

SpectralFit spectral_oracle_fit(const VectorXd &y, int m, double lambda) {
  SpectralFit fit;
  fit.coeffs = spectral_transform(y, m);
  fit.lambda = lambda;
  fit.b = fit.coeffs.z(0, 0);

  const Block blocks[3] = {Block::Main1, Block::Main2, Block::Interaction};
  for (int i = 0; i < 3; ++i)
    fit.theta[i] = theta_minimize_1d(fit.coeffs, blocks[i], lambda);

  fit.a_hat = MatrixXd::Zero(m, m);
  fit.a_hat(0, 0) = fit.b;
  for (int i = 0; i < 3; ++i) {
    const double th = fit.theta[i];
    for_block(m, blocks[i], [&](int mu, int nu) {
      const double z = fit.coeffs.z(mu - 1, nu - 1);
      if (std::isinf(th))
        fit.a_hat(mu - 1, nu - 1) = z;
      else if (th > 0.0)
        fit.a_hat(mu - 1, nu - 1) =
            z * th / (th + fit.coeffs.q(mu - 1, nu - 1));
    });
  }
  fit.fitted = spectral_inverse(fit.a_hat);
  return fit;
}

MatrixXd periodic_marginal_kernel(int m) {
  check_m(m);
  MatrixXd S(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      // Fold the circular lag onto [0, m/2]: the kernel depends only on the
      // distance, and evaluating both (i,j) and (j,i) at the same point keeps
      // the matrix symmetric to the last bit.
      int r = ((i - j) % m + m) % m;
      r = std::min(r, m - r);
      S(i, j) = -bern_k4(static_cast<double>(r) / m);
    }
  return S;
}

ConsistencyReport selection_consistency_experiment(const MatrixXd &truth,
                                                   double sigma, double lambda,
                                                   int replicates,
                                                   std::uint64_t seed) {
  const int m = static_cast<int>(truth.rows());
  check_m(m);
  if (truth.cols() != m) throw input_error("truth table must be square");
  if (!(sigma >= 0.0)) throw input_error("sigma must be non-negative");
  if (replicates < 1) throw input_error("need at least one replicate");

  ConsistencyReport rep;
  const Block blocks[3] = {Block::Main1, Block::Main2, Block::Interaction};
  for (int i = 0; i < 3; ++i) {
    bool any = false;
    for_block(m, blocks[i],
              [&](int mu, int nu) { any |= truth(mu - 1, nu - 1) != 0.0; });
    rep.truth[i] = any;
  }

  const VectorXd f = spectral_inverse(truth);
  for (int r = 0; r < replicates; ++r) {
    Rng rng(seed, "spectral-rep", static_cast<std::uint64_t>(r));
    VectorXd yr = f;
    for (int i = 0; i < yr.size(); ++i) yr[i] += sigma * rng.normal();
    const auto fit = spectral_oracle_fit(yr, m, lambda);
    const auto sel = fit.selected();
    rep.selected.push_back(sel);
    for (int i = 0; i < 3; ++i) rep.frequency[i] += sel[i] ? 1.0 : 0.0;
  }
  for (int i = 0; i < 3; ++i) rep.frequency[i] /= replicates;
  return rep;
}

}  // namespace cosso
