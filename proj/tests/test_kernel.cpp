#include <cmath>

#include "doctest.h"

#include "cosso/errors.hpp"
#include "cosso/kernel.hpp"
#include "cosso/rng.hpp"
#include "support.hpp"

using namespace cosso;
using testutil::min_eigenvalue;
using testutil::random_unit_matrix;

TEST_CASE("kernel closed-form values") {
  // Hand derivation at s = t = 1/2: k1(1/2) = 0, k2(1/2) = -1/24, and the
  // distance term is k4(0) = (1/16 - 1/8 + 7/240)/24 = -1/720, so the kernel
  // equals 1/576 + 1/720 = 1/320.  (Exact-fraction arithmetic and the
  // quadrature check of <K(s,.), K(s,.)> = K(s,s) below both confirm it.)
  CHECK(sobolev_rk(0.5, 0.5) == doctest::Approx(1.0 / 320.0).epsilon(1e-13));
  CHECK(std::abs(sobolev_rk(0.5, 0.5) - 3.125e-3) < 1e-15);

  CHECK(linear_rk(0.75, 0.75) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(linear_rk(0.0, 1.0) == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("kernel symmetry") {
  Rng rng(20240401);
  for (int i = 0; i < 100; ++i) {
    const double s = rng.uniform(), t = rng.uniform();
    CHECK(std::abs(sobolev_rk(s, t) - sobolev_rk(t, s)) < 1e-15);
    CHECK(std::abs(linear_rk(s, t) - linear_rk(t, s)) < 1e-15);
  }
}

TEST_CASE("component grams are positive semidefinite") {
  Rng rng(77);
  const auto design = AnovaDesign::additive(3);
  const MatrixXd X = random_unit_matrix(50, 3, rng);
  GramSet grams(X, design);
  for (int a = 0; a < grams.p(); ++a)
    CHECK(min_eigenvalue(grams.component(a)) >= -1e-10);
  CHECK(min_eigenvalue(grams.weighted(VectorXd::Ones(3))) >= -1e-10);
}

TEST_CASE("interaction gram is the elementwise product of its mains") {
  Rng rng(78);
  const auto design = AnovaDesign::twoway(3);
  const MatrixXd X = random_unit_matrix(12, 3, rng);
  GramSet grams(X, design);
  // Components 0..2 are the main effects; component 3 pairs variables 1,2.
  const auto &pair = design.component(3);
  REQUIRE(pair.interaction());
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      const double want = sobolev_rk(X(i, pair.j - 1), X(j, pair.j - 1)) *
                          sobolev_rk(X(i, pair.k - 1), X(j, pair.k - 1));
      CHECK(std::abs(grams.component(3)(i, j) - want) < 1e-15);
    }
  CHECK(min_eigenvalue(grams.component(3)) >= -1e-10);
}

TEST_CASE("single observation and duplicate rows are fine") {
  const auto design = AnovaDesign::additive(2);
  MatrixXd one(1, 2);
  one << 0.3, 0.9;
  GramSet g1(one, design);
  CHECK(g1.n() == 1);
  CHECK(g1.weighted(VectorXd::Ones(2)).rows() == 1);

  MatrixXd dup(6, 2);
  dup << 0.1, 0.2, 0.1, 0.2, 0.5, 0.5, 0.5, 0.5, 0.9, 0.1, 0.9, 0.1;
  GramSet g2(dup, design);
  for (int a = 0; a < 2; ++a)
    CHECK(min_eigenvalue(g2.component(a)) >= -1e-10);
}

TEST_CASE("weighted gram basics and linearity") {
  Rng rng(79);
  const auto design = AnovaDesign::twoway(3);
  const int p = design.p();
  const MatrixXd X = random_unit_matrix(15, 3, rng);
  GramSet grams(X, design);

  CHECK(grams.weighted(VectorXd::Zero(p)).isZero(0.0));
  for (int a = 0; a < p; ++a) {
    VectorXd e = VectorXd::Zero(p);
    e[a] = 1.0;
    CHECK((grams.weighted(e) - grams.component(a)).cwiseAbs().maxCoeff() == 0.0);
  }

  VectorXd t1(p), t2(p);
  for (int a = 0; a < p; ++a) {
    t1[a] = rng.uniform();
    t2[a] = 2.0 * rng.uniform();
  }
  const MatrixXd lhs = grams.weighted(t1 + t2);
  const MatrixXd rhs = grams.weighted(t1) + grams.weighted(t2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cross gram on the training points reproduces the gram") {
  Rng rng(80);
  const auto design = AnovaDesign::twoway(3);
  const MatrixXd X = random_unit_matrix(10, 3, rng);
  GramSet grams(X, design);
  VectorXd theta(design.p());
  for (int a = 0; a < design.p(); ++a) theta[a] = rng.uniform();

  const MatrixXd K = weighted_cross_gram(X, X, design, theta);
  CHECK((K - grams.weighted(theta)).cwiseAbs().maxCoeff() < 1e-13);

  // Fresh points: every entry must agree with a direct kernel evaluation.
  const MatrixXd Xnew = random_unit_matrix(4, 3, rng);
  const MatrixXd Kc = component_cross_gram(Xnew, X, design, 3);
  const auto &pair = design.component(3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 10; ++j) {
      const double want = sobolev_rk(Xnew(i, pair.j - 1), X(j, pair.j - 1)) *
                          sobolev_rk(Xnew(i, pair.k - 1), X(j, pair.k - 1));
      CHECK(std::abs(Kc(i, j) - want) < 1e-15);
    }
}

TEST_CASE("input validation") {
  const auto design = AnovaDesign::additive(2);
  MatrixXd bad(2, 2);
  bad << 0.1, 1.2, 0.3, 0.4;
  CHECK_THROWS_AS(GramSet(bad, design), input_error);

  MatrixXd neg(1, 2);
  neg << -0.2, 0.5;
  CHECK_THROWS_AS(GramSet(neg, design), input_error);

  // Boundary slack: values a hair outside [0,1] pass.
  MatrixXd edge(1, 2);
  edge << -1e-13, 1.0 + 1e-13;
  CHECK_NOTHROW(GramSet(edge, design));

  MatrixXd wrong(3, 3);
  wrong.setConstant(0.5);
  CHECK_THROWS_AS(GramSet(wrong, design), input_error);

  MatrixXd ok(3, 2);
  ok.setConstant(0.5);
  GramSet grams(ok, design);
  CHECK_THROWS_AS(grams.weighted(VectorXd::Ones(3)), input_error);
  CHECK_THROWS_AS(GramSet(MatrixXd(0, 2), design), input_error);
}

namespace {

// <g, h> = (integral of g')(integral of h') + integral of g''h'' on the
// mean-zero Sobolev space; with g = K(s, .) this should reproduce h(s).
// The first factor telescopes to g(1) - g(0); the curvature factor needs
// d^2/du^2 K(s, u) = k2(s) - k2(|s - u|), which has a kink at u = s.
double inner_with_kernel_section(double s, const std::function<double(double)> &h,
                                 const std::function<double(double)> &hpp,
                                 double h1_minus_h0) {
  const double boundary = (sobolev_rk(s, 1.0) - sobolev_rk(s, 0.0)) * h1_minus_h0;
  const auto integrand = [&](double u) {
    return (bern_k2(s) - bern_k2(std::abs(s - u))) * hpp(u);
  };
  return boundary + testutil::simpson_split(integrand, {s}, 10000);
}

}  // namespace

TEST_CASE("kernel sections reproduce mean-zero test functions") {
  struct Probe {
    std::function<double(double)> h, hpp;
    double jump;  // h(1) - h(0)
  };
  const double tau = 2.0 * M_PI;
  const std::vector<Probe> probes = {
      {[](double t) { return t - 0.5; }, [](double) { return 0.0; }, 1.0},
      {[](double t) { return (t - 0.5) * (t - 0.5) - 1.0 / 12.0; },
       [](double) { return 2.0; }, 0.0},
      {[tau](double t) { return std::sin(tau * t); },
       [tau](double t) { return -tau * tau * std::sin(tau * t); }, 0.0},
  };
  for (double s : {0.15, 0.5, 0.837}) {
    for (const auto &pr : probes) {
      const double got = inner_with_kernel_section(s, pr.h, pr.hpp, pr.jump);
      CHECK(std::abs(got - pr.h(s)) < 1e-6);
    }
  }
}

TEST_CASE("kernel reproduces its own sections") {
  // <K(s,.), K(u,.)> = K(s,u), evaluated with the same inner product; this
  // pins the kernel's additive constant, which the smooth probes above are
  // blind to.
  for (double s : {0.15, 0.5, 0.837}) {
    for (double u : {0.3, 0.5, 0.9}) {
      const auto h = [u](double v) { return sobolev_rk(u, v); };
      const auto hpp = [u](double v) {
        return bern_k2(u) - bern_k2(std::abs(u - v));
      };
      const double jump = sobolev_rk(u, 1.0) - sobolev_rk(u, 0.0);
      const double boundary =
          (sobolev_rk(s, 1.0) - sobolev_rk(s, 0.0)) * jump;
      const auto integrand = [&](double v) {
        return (bern_k2(s) - bern_k2(std::abs(s - v))) * hpp(v);
      };
      const double got =
          boundary + testutil::simpson_split(integrand, {s, u}, 10000);
      CHECK(std::abs(got - sobolev_rk(s, u)) < 1e-6);
    }
  }
}
