#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cosso/types.hpp"

namespace cosso {

// Closed-form estimator on the m x m tensor-product grid of an additive plus
// interaction model over periodic second-order Sobolev spaces.  In the
// trigonometric basis every component block decouples, so selection reduces
// to a per-block soft threshold on a weighted coefficient energy, making this
// an exact oracle for the general solver on the same design.
//
// Grid ordering everywhere: row i = (k-1)*m + (l-1) holds the point
// (k/m, l/m), axis 2 fastest.  That ordering makes the axis-1 main-effect
// kernel matrix a Kronecker product Sigma (x) 11' and the interaction kernel
// Sigma (x) Sigma, which the diagnostics below rely on.

struct FourierGrid {
  explicit FourierGrid(int m);  // m even, m >= 4
  int m = 0;
  int n() const { return m * m; }
  MatrixXd points() const;  // n x 2 in the ordering above
};

// Columns are the m basis vectors evaluated on the 1-D grid {k/m}: the
// constant, then interleaved sqrt(2) cos / sqrt(2) sin pairs at frequencies
// 1..m/2-1, and cos(pi m t) last.  (1/m) B'B = I.
MatrixXd trig_basis(int m);

struct SpectralCoeffs {
  int m = 0;
  MatrixXd z;  // m x m coefficient table, (mu-1, nu-1)
  MatrixXd q;  // matching penalty weights
};

// Coefficients of y on the product basis: z(mu,nu) = <y, gamma_mu gamma_nu>_n.
// Requires y.size() == m*m with the grid ordering above.
SpectralCoeffs spectral_transform(const VectorXd &y, int m);

// Evaluates a coefficient table back to grid values (exact inverse of the
// transform).
VectorXd spectral_inverse(const MatrixXd &coef);

// Penalty weight table.  Axis weights: 0 for the constant, (2 pi freq)^4 for
// the cos/sin pairs, (pi m)^4 for the boundary index m; a main-effect entry
// carries its axis weight and an interaction entry the product of the two.
// The (1,1) cell is 0 (the constant direction is never penalized).
MatrixXd penalty_weights(int m);

enum class Block { Main1, Main2, Interaction };

// Weighted block energy U = sum over the block of z^2 / q.  The block is
// selected iff U exceeds lambda.
double u_statistic(const SpectralCoeffs &coeffs, Block block);

// Per-block exact minimizer of
//   A(theta) = sum_block q z^2 / (q + theta) + lambda * theta,  theta >= 0.
// Zero iff U <= lambda; +infinity when lambda = 0 and the block is nonzero
// (the unpenalized limit); otherwise the unique positive root of A' = 0 by
// bisection to 1e-10 relative interval width.
double theta_minimize_1d(const SpectralCoeffs &coeffs, Block block,
                         double lambda);

struct SpectralFit {
  SpectralCoeffs coeffs;
  double lambda = 0.0;
  double b = 0.0;  // = z(1,1)
  std::array<double, 3> theta{};  // Main1, Main2, Interaction
  MatrixXd a_hat;   // shrunk coefficient table, intercept included
  VectorXd fitted;  // a_hat evaluated back on the grid
  std::array<bool, 3> selected() const;
};

SpectralFit spectral_oracle_fit(const VectorXd &y, int m, double lambda);

// The m x m marginal kernel matrix of the periodic Sobolev space on the grid,
// Sigma(i,j) = -k4({(i-j)/m}).  Satisfies Sigma 1 = m t 1 with
// t = 1/(720 m^4); its remaining eigenvalues fall off like the fourth power
// of the index.  Used by the diagnostics and the cross-solver check.
MatrixXd periodic_marginal_kernel(int m);

// Replicated selection experiment: data are drawn as the grid values of the
// coefficient table `truth` plus N(0, sigma^2) noise, each replicate on its
// own derived stream.  Reports which blocks were selected per replicate and
// the empirical selection frequencies.
struct ConsistencyReport {
  std::array<bool, 3> truth{};        // block nonzero in the generating table
  std::vector<std::array<bool, 3>> selected;  // per replicate
  std::array<double, 3> frequency{};  // fraction of replicates selected
};

ConsistencyReport selection_consistency_experiment(const MatrixXd &truth,
                                                   double sigma, double lambda,
                                                   int replicates,
                                                   std::uint64_t seed);

}  // namespace cosso
