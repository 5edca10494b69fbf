#include "gdgp/kernel.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "gdgp/rng.hpp"
#include "support/quadrature.hpp"

using namespace gdgp;
using testsupport::gh_expect;
using testsupport::piecewise_expect;

namespace {

double oracle_xi(KernelFamily f, double gamma, double m, double v, double w) {
  return piecewise_expect(
      [&](double x) { return kernel1d(f, x, w, gamma); }, m, v, {w}, gamma);
}

double oracle_zeta(KernelFamily f, double gamma, double m, double v, double wi,
                   double wj) {
  return piecewise_expect(
      [&](double x) { return kernel1d(f, x, wi, gamma) * kernel1d(f, x, wj, gamma); },
      m, v, {wi, wj}, gamma);
}

}  // namespace

TEST_CASE("correlation is 1 at zero distance and decays monotonically") {
  KernelSpec se = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, 1.0);
  KernelSpec mat = KernelSpec::isotropic(KernelFamily::Matern25, 3, 0.8);
  Vec a = Vec::Zero(3), b = Vec::Zero(3);
  CHECK(correlation(mat, a, b) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double t = 0.25; t < 8.0; t += 0.25) {
    const double k = correlation(se, Vec::Zero(1), Vec::Constant(1, t));
    CHECK(k < prev);
    CHECK(k > 0.0);
    prev = k;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("matern-2.5 matches an independent hand evaluation") {
  // gamma=1, distance 1: (1 + sqrt5 + 5/3) exp(-sqrt5)
  const double s5 = std::sqrt(5.0);
  const double expected = (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5);
  CHECK(kernel1d(KernelFamily::Matern25, 0.0, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("correlation rejects dimension mismatch and bad specs") {
  KernelSpec spec = KernelSpec::isotropic(KernelFamily::Matern25, 2, 1.0);
  CHECK_THROWS_AS(correlation(spec, Vec::Zero(3), Vec::Zero(3)), std::invalid_argument);
  KernelSpec bad = spec;
  bad.lengthscales[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.amplitude = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.nugget = -1e-9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("corr_matrix: single row, duplicated rows, elementwise agreement") {
  KernelSpec spec = KernelSpec::isotropic(KernelFamily::Matern25, 2, 0.9, 1.0, 1e-3);
  Mat one(1, 2);
  one << 0.3, -0.4;
  Mat R1 = corr_matrix(spec, one);
  CHECK(R1.rows() == 1);
  CHECK(R1(0, 0) == doctest::Approx(1.0 + 1e-3));

  // Duplicated rows with zero nugget: exactly singular.
  KernelSpec nonoise = spec;
  nonoise.nugget = 0.0;
  Mat dup(3, 2);
  dup << 0.1, 0.2, 0.1, 0.2, 0.5, -0.1;
  Mat Rd = corr_matrix(nonoise, dup);
  Eigen::SelfAdjointEigenSolver<Mat> es(Rd);
  CHECK(std::fabs(es.eigenvalues().minCoeff()) < 1e-12);

  // Random block: symmetric, Cholesky succeeds, matches elementwise calls.
  Rng rng(5);
  Mat W(12, 2);
  for (int i = 0; i < W.size(); ++i) W(i / 2, i % 2) = rng.normal();
  KernelSpec jittered = spec;
  jittered.nugget = 1e-6;
  Mat R = corr_matrix(jittered, W);
  CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::LLT<Mat> llt(R);
  CHECK(llt.info() == Eigen::Success);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      const double expected =
          correlation(jittered, W.row(i).transpose(), W.row(j).transpose()) +
          (i == j ? jittered.nugget : 0.0);
      CHECK(R(i, j) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("cross_correlation matches elementwise correlation") {
  KernelSpec spec = KernelSpec::isotropic(KernelFamily::SquaredExponential, 3, 1.3);
  Rng rng(6);
  Mat A(4, 3), B(5, 3);
  for (int i = 0; i < A.rows(); ++i)
    for (int d = 0; d < 3; ++d) A(i, d) = rng.normal();
  for (int i = 0; i < B.rows(); ++i)
    for (int d = 0; d < 3; ++d) B(i, d) = rng.normal();
  Mat R = cross_correlation(spec, A, B);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(R(i, j) ==
            doctest::Approx(correlation(spec, A.row(i).transpose(), B.row(j).transpose()))
                .epsilon(1e-14));
}

TEST_CASE("lengthscale gradients match central finite differences") {
  Rng rng(8);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    for (int rep = 0; rep < 50; ++rep) {
      const double a = 2.0 * rng.normal();
      const double b = 2.0 * rng.normal();
      const double gamma = 0.3 + 2.0 * rng.uniform();
      const double h = 1e-6;
      const double fd = (kernel1d(family, a, b, gamma * std::exp(h)) -
                         kernel1d(family, a, b, gamma * std::exp(-h))) /
                        (2.0 * h);
      const double an = kernel1d_dloggamma(family, a, b, gamma);
      CHECK(std::fabs(fd - an) < 1e-8 + 1e-6 * std::fabs(an));
    }
  }
  // Matrix form against elementwise derivative.
  KernelSpec spec = KernelSpec::isotropic(KernelFamily::Matern25, 2, 0.7, 1.0, 1e-6);
  Mat W(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int d = 0; d < 2; ++d) W(i, d) = rng.normal();
  for (int d = 0; d < 2; ++d) {
    Mat G = corr_matrix_dloggamma(spec, W, d);
    for (int i = 0; i < 6; ++i) {
      CHECK(G(i, i) == 0.0);
      for (int j = 0; j < 6; ++j) {
        if (i == j) continue;
        double other = 1.0;
        for (int e = 0; e < 2; ++e)
          if (e != d) other *= kernel1d(spec.family, W(i, e), W(j, e), spec.lengthscales[e]);
        const double expected =
            other * kernel1d_dloggamma(spec.family, W(i, d), W(j, d), spec.lengthscales[d]);
        CHECK(G(i, j) == doctest::Approx(expected).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("xi/zeta degenerate variance reduces to plain kernel products") {
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    CHECK(xi_moment(family, 0.9, 0.4, 0.0, -0.2) ==
          doctest::Approx(kernel1d(family, 0.4, -0.2, 0.9)).epsilon(1e-15));
    CHECK(xi_moment(family, 0.9, 0.5, 0.0, 0.5) == doctest::Approx(1.0));
    CHECK(zeta_moment(family, 1.1, 0.3, 0.0, -0.6, 0.2) ==
          doctest::Approx(kernel1d(family, 0.3, -0.6, 1.1) * kernel1d(family, 0.3, 0.2, 1.1))
              .epsilon(1e-15));
    CHECK(zeta_moment(family, 1.1, 0.0, 0.0, 0.0, 0.0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(xi_moment(KernelFamily::Matern25, 1.0, 0.0, -1e-3, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(zeta_moment(KernelFamily::Matern25, 0.0, 0.0, 0.5, 0.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("xi/zeta reference tuples match plain 64-node Gauss-Hermite") {
  const double xi_ref = gh_expect(
      [](double x) { return kernel1d(KernelFamily::SquaredExponential, x, -0.5, 0.7); }, 0.3,
      0.2);
  CHECK(std::fabs(xi_moment(KernelFamily::SquaredExponential, 0.7, 0.3, 0.2, -0.5) - xi_ref) <
        1e-8);
  const double ze_ref = gh_expect(
      [](double x) {
        return kernel1d(KernelFamily::Matern25, x, -0.4, 1.2) *
               kernel1d(KernelFamily::Matern25, x, 0.6, 1.2);
      },
      0.1, 0.3);
  CHECK(std::fabs(zeta_moment(KernelFamily::Matern25, 1.2, 0.1, 0.3, -0.4, 0.6) - ze_ref) < 1e-8);
}

TEST_CASE("xi/zeta agree with the kink-split quadrature oracle on 1000 tuples") {
  // Tuple ranges: m,w in [-2,2], v in [0,2], gamma in [0.5,2].
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    Rng rng(31 + static_cast<int>(family));
    double worst_xi = 0.0, worst_ze = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double m = -2.0 + 4.0 * rng.uniform();
      const double v = 2.0 * rng.uniform();
      const double w = -2.0 + 4.0 * rng.uniform();
      const double wj = -2.0 + 4.0 * rng.uniform();
      const double gamma = 0.5 + 1.5 * rng.uniform();
      worst_xi = std::max(worst_xi, std::fabs(xi_moment(family, gamma, m, v, w) -
                                              oracle_xi(family, gamma, m, v, w)));
      worst_ze = std::max(worst_ze, std::fabs(zeta_moment(family, gamma, m, v, w, wj) -
                                              oracle_zeta(family, gamma, m, v, w, wj)));
      // Symmetry and the Jensen bound.
      CHECK(zeta_moment(family, gamma, m, v, w, wj) ==
            doctest::Approx(zeta_moment(family, gamma, m, v, wj, w)).epsilon(1e-13));
      const double xi = xi_moment(family, gamma, m, v, w);
      CHECK(zeta_moment(family, gamma, m, v, w, w) >= xi * xi - 1e-12);
    }
    CHECK_MESSAGE(worst_xi <= 1e-8, "family=", static_cast<int>(family), " xi err ", worst_xi);
    CHECK_MESSAGE(worst_ze <= 1e-8, "family=", static_cast<int>(family), " zeta err ", worst_ze);
  }
}

TEST_CASE("xi vanishes as the kernel center moves far away") {
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    double prev = 1.0;
    for (double w = 2.0; w < 40.0; w *= 2.0) {
      const double x = xi_moment(family, 0.8, 0.0, 0.7, w);
      CHECK(x < prev);
      prev = x;
    }
    CHECK(prev < 1e-12);
  }
}
