#pragma once

// Test-only quadrature oracles, independent of the closed forms they gate.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace testsupport {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch: nodes/weights from the symmetric Jacobi matrix of the
// orthogonal-polynomial recurrence. beta holds the off-diagonal entries,
// mu0 the total weight-function mass.
inline Rule golub_welsch(const std::vector<double>& beta, double mu0) {
  const int n = static_cast<int>(beta.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = beta[i];
    J(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  return r;
}

// Gauss-Hermite with weight exp(-x^2); total mass sqrt(pi).
inline Rule gauss_hermite(int n) {
  std::vector<double> beta(n - 1);
  for (int k = 1; k < n; ++k) beta[k - 1] = std::sqrt(k / 2.0);
  return golub_welsch(beta, std::sqrt(M_PI));
}

// Gauss-Legendre on [-1,1].
inline Rule gauss_legendre(int n) {
  std::vector<double> beta(n - 1);
  for (int k = 1; k < n; ++k) beta[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(beta, 2.0);
}

// E[f(X)], X ~ N(m, v), by n-node Gauss-Hermite.
template <class F>
double gh_expect(const F& f, double m, double v, int n = 64) {
  static thread_local int cached_n = -1;
  static thread_local Rule rule;
  if (cached_n != n) {
    rule = gauss_hermite(n);
    cached_n = n;
  }
  const double s = std::sqrt(2.0 * v);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(m + s * rule.nodes[i]);
  return acc / std::sqrt(M_PI);
}

// E[f(X)], X ~ N(m, v), by composite 64-node Gauss-Legendre panels split at
// the integrand's non-smooth points. Panel width is capped by `scale` so the
// rule resolves kernels narrower than the Gaussian; accuracy ~1e-13.
template <class F>
double piecewise_expect(const F& f, double m, double v,
                        std::vector<double> breaks, double scale) {
  static thread_local Rule rule;
  if (rule.nodes.empty()) rule = gauss_legendre(64);
  const double s = std::sqrt(v);
  const double lo = m - 10.0 * s;
  const double hi = m + 10.0 * s;
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  const double inv_norm = 1.0 / (s * std::sqrt(2.0 * M_PI));
  const double h_max = std::max(1e-12, 0.5 * std::min(s, scale));
  double acc = 0.0;
  for (size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const double a = std::max(lo, breaks[seg]);
    const double b = std::min(hi, breaks[seg + 1]);
    if (b <= a) continue;
    const int panels = std::max(1, std::min(256, static_cast<int>(std::ceil((b - a) / h_max))));
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double c = a + p * h;
      for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = c + 0.5 * h * (rule.nodes[i] + 1.0);
        const double z = (x - m) / s;
        acc += 0.5 * h * rule.weights[i] * f(x) * inv_norm * std::exp(-0.5 * z * z);
      }
    }
  }
  return acc;
}

}  // namespace testsupport
