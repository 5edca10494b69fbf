#include "gdgp/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace gdgp {
namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kVarFloor = 1e-12;  // below this, xi/zeta use the exact v=0 branch

// erfc(x) * exp(x^2) for x >= 0 without overflow; asymptotic tail above 25.
double erfcx_pos(double x) {
  if (x <= 25.0) return std::exp(x * x) * std::erfc(x);
  const double z = 1.0 / (2.0 * x * x);
  // 1/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + 105/(16 x^8))
  double s = 1.0 + z * (-1.0 + z * (3.0 + z * (-15.0 + z * 105.0)));
  return s / (x * 1.7724538509055160272981674833411);
}

// e^c * Phi(a), stable for strongly negative a paired with large c.
double exp_phi(double c, double a) {
  if (a > -6.0) return std::exp(c) * (0.5 * std::erfc(-a * 0.70710678118654752440084436210485));
  return 0.5 * erfcx_pos(-a * 0.70710678118654752440084436210485) * std::exp(c - 0.5 * a * a);
}

// e^c * phi(a) with phi the standard normal density.
double exp_pdf(double c, double a) { return kInvSqrt2Pi * std::exp(c - 0.5 * a * a); }

// m_n = e^c * int_l^inf (x-l)^n N(x; mu, v) dx for n = 0..nmax.
// Recurrence m_{n+1} = (mu-l) m_n + v n m_{n-1}.
void upper_moments(double l, double mu, double v, double c, int nmax, double* m) {
  const double s = std::sqrt(v);
  const double a = (l - mu) / s;
  const double A = mu - l;
  m[0] = exp_phi(c, -a);
  if (nmax >= 1) m[1] = A * m[0] + s * exp_pdf(c, a);
  for (int n = 1; n < nmax; ++n) m[n + 1] = A * m[n] + v * n * m[n - 1];
}

// m_n = e^c * int_-inf^u (u-x)^n N(x; mu, v) dx.
void lower_moments(double u, double mu, double v, double c, int nmax, double* m) {
  const double s = std::sqrt(v);
  const double b = (u - mu) / s;
  const double B = u - mu;
  m[0] = exp_phi(c, b);
  if (nmax >= 1) m[1] = B * m[0] + s * exp_pdf(c, b);
  for (int n = 1; n < nmax; ++n) m[n + 1] = B * m[n] + v * n * m[n - 1];
}

// q_n = int_l^u (x-l)^n N(x; m, v) dx (no tilt; boundary term enters the recurrence).
void interval_moments(double l, double u, double m, double v, int nmax, double* q) {
  const double s = std::sqrt(v);
  const double al = (l - m) / s;
  const double au = (u - m) / s;
  const double A = m - l;
  const double dl = kInvSqrt2Pi * std::exp(-0.5 * al * al) / s;
  const double du = kInvSqrt2Pi * std::exp(-0.5 * au * au) / s;
  const double phi_lo = 0.5 * std::erfc(-al * 0.70710678118654752440084436210485);
  const double phi_hi = 0.5 * std::erfc(-au * 0.70710678118654752440084436210485);
  q[0] = phi_hi - phi_lo;
  if (nmax >= 1) q[1] = A * q[0] + v * (dl - du);
  double width_pow = u - l;
  for (int n = 1; n < nmax; ++n) {
    q[n + 1] = A * q[n] + v * n * q[n - 1] - v * width_pow * du;
    width_pow *= (u - l);
  }
}

double kernel1d_se(double t, double gamma) { return std::exp(-t * t / (gamma * gamma)); }

double kernel1d_mat(double t, double gamma) {
  const double u = kSqrt5 * std::fabs(t) / gamma;
  return (1.0 + u + u * u / 3.0) * std::exp(-u);
}

double xi_se(double gamma, double m, double v, double w) {
  const double g2 = gamma * gamma;
  const double d = m - w;
  return gamma / std::sqrt(g2 + 2.0 * v) * std::exp(-d * d / (g2 + 2.0 * v));
}

double zeta_se(double gamma, double m, double v, double wi, double wj) {
  const double g2 = gamma * gamma;
  const double wb = 0.5 * (wi + wj);
  const double dw = wi - wj;
  return std::exp(-dw * dw / (2.0 * g2)) * gamma / std::sqrt(g2 + 4.0 * v) *
         std::exp(-2.0 * (m - wb) * (m - wb) / (g2 + 4.0 * v));
}

// E[k(X,w)] for Matern-2.5: split at the kink, tilt each side into a Gaussian
// with shifted mean, and accumulate e^c-scaled one-sided moments (all
// polynomial coefficients are non-negative, so no cancellation across terms).
double xi_mat(double gamma, double m, double v, double w) {
  const double lam = kSqrt5 / gamma;
  double mom[3];
  // x > w: poly (1 + lam t + lam^2 t^2 / 3), t = x - w, tilt exp(-lam t).
  upper_moments(w, m - lam * v, v, lam * (w - m) + 0.5 * lam * lam * v, 2, mom);
  double total = mom[0] + lam * mom[1] + lam * lam / 3.0 * mom[2];
  // x < w: mirror image.
  lower_moments(w, m + lam * v, v, lam * (m - w) + 0.5 * lam * lam * v, 2, mom);
  total += mom[0] + lam * mom[1] + lam * lam / 3.0 * mom[2];
  return total;
}

// Multiplies the degree-2 polys p and q (in t) into r (degree 4).
void poly_mul(const double* p, const double* q, double* r) {
  for (int i = 0; i < 5; ++i) r[i] = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i + j] += p[i] * q[j];
}

double zeta_mat(double gamma, double m, double v, double wi, double wj) {
  if (wi > wj) std::swap(wi, wj);
  const double lam = kSqrt5 / gamma;
  const double D = wj - wi;
  const double l2 = lam * lam;
  // Shared factors of k(x,wi) k(x,wj) written in one-sided coordinates.
  const double far[3] = {1.0 + lam * D + l2 * D * D / 3.0, lam + 2.0 * l2 * D / 3.0, l2 / 3.0};
  const double near_[3] = {1.0, lam, l2 / 3.0};
  double poly[5], mom[5];
  // x > wj: t = x - wj, x - wi = t + D; tilt exp(-2 lam t - lam D).
  poly_mul(far, near_, poly);
  upper_moments(wj, m - 2.0 * lam * v, v,
                -lam * D + 2.0 * lam * (wj - m) + 2.0 * l2 * v, 4, mom);
  double total = 0.0;
  for (int n = 0; n < 5; ++n) total += poly[n] * mom[n];
  // x < wi: t = wi - x, wj - x = t + D; same polynomial by symmetry.
  lower_moments(wi, m + 2.0 * lam * v, v,
                -lam * D + 2.0 * lam * (m - wi) + 2.0 * l2 * v, 4, mom);
  for (int n = 0; n < 5; ++n) total += poly[n] * mom[n];
  // wi <= x <= wj: t = x - wi, wj - x = D - t; constant factor exp(-lam D).
  const double desc[3] = {1.0 + lam * D + l2 * D * D / 3.0, -(lam + 2.0 * l2 * D / 3.0), l2 / 3.0};
  poly_mul(near_, desc, poly);
  interval_moments(wi, wj, m, v, 4, mom);
  double mid = 0.0;
  for (int n = 0; n < 5; ++n) mid += poly[n] * mom[n];
  total += std::exp(-lam * D) * mid;
  return total;
}

void check_moment_args(double gamma, double v) {
  if (!(gamma > 0.0)) throw std::invalid_argument("moment: lengthscale must be positive");
  if (!(v >= 0.0)) throw std::invalid_argument("moment: variance must be non-negative");
}

}  // namespace

KernelSpec KernelSpec::isotropic(KernelFamily f, int dim, double gamma,
                                 double sigma2, double eta) {
  KernelSpec spec;
  spec.family = f;
  spec.lengthscales = Vec::Constant(dim, gamma);
  spec.amplitude = sigma2;
  spec.nugget = eta;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (lengthscales.size() == 0) throw std::invalid_argument("KernelSpec: no lengthscales");
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite())
    throw std::invalid_argument("KernelSpec: lengthscales must be positive finite");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("KernelSpec: amplitude must be positive finite");
  if (!(nugget >= 0.0) || !std::isfinite(nugget))
    throw std::invalid_argument("KernelSpec: nugget must be non-negative finite");
}

double kernel1d(KernelFamily family, double a, double b, double gamma) {
  return family == KernelFamily::SquaredExponential ? kernel1d_se(a - b, gamma)
                                                    : kernel1d_mat(a - b, gamma);
}

double kernel1d_dloggamma(KernelFamily family, double a, double b, double gamma) {
  const double t = a - b;
  if (family == KernelFamily::SquaredExponential) {
    return kernel1d_se(t, gamma) * 2.0 * t * t / (gamma * gamma);
  }
  const double u = kSqrt5 * std::fabs(t) / gamma;
  return std::exp(-u) * u * u * (1.0 + u) / 3.0;
}

double correlation(const KernelSpec& spec, Eigen::Ref<const Vec> a,
                   Eigen::Ref<const Vec> b) {
  if (a.size() != spec.dim() || b.size() != spec.dim())
    throw std::invalid_argument("correlation: dimension mismatch");
  if (!a.allFinite() || !b.allFinite())
    throw std::invalid_argument("correlation: non-finite input");
  double k = 1.0;
  for (int d = 0; d < spec.dim(); ++d)
    k *= kernel1d(spec.family, a[d], b[d], spec.lengthscales[d]);
  return k;
}

Mat corr_matrix(const KernelSpec& spec, Eigen::Ref<const Mat> W) {
  const Eigen::Index n = W.rows();
  if (n == 0) throw std::invalid_argument("corr_matrix: empty input block");
  if (W.cols() != spec.dim()) throw std::invalid_argument("corr_matrix: dimension mismatch");
  if (!W.allFinite()) throw std::invalid_argument("corr_matrix: non-finite input");
  Mat R = Mat::Ones(n, n);
  for (int d = 0; d < spec.dim(); ++d) {
    const double gamma = spec.lengthscales[d];
    const auto col = W.col(d);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        R(i, j) *= kernel1d(spec.family, col[i], col[j], gamma);
      }
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = 1.0 + spec.nugget;
    for (Eigen::Index i = j + 1; i < n; ++i) R(j, i) = R(i, j);
  }
  return R;
}

Mat cross_correlation(const KernelSpec& spec, Eigen::Ref<const Mat> A,
                      Eigen::Ref<const Mat> B) {
  if (A.cols() != spec.dim() || B.cols() != spec.dim())
    throw std::invalid_argument("cross_correlation: dimension mismatch");
  if (!A.allFinite() || !B.allFinite())
    throw std::invalid_argument("cross_correlation: non-finite input");
  Mat R = Mat::Ones(A.rows(), B.rows());
  for (int d = 0; d < spec.dim(); ++d) {
    const double gamma = spec.lengthscales[d];
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        R(i, j) *= kernel1d(spec.family, A(i, d), B(j, d), gamma);
      }
    }
  }
  return R;
}

Mat corr_matrix_dloggamma(const KernelSpec& spec, Eigen::Ref<const Mat> W, int d) {
  const Eigen::Index n = W.rows();
  Mat G = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double k_other = 1.0;
      for (int e = 0; e < spec.dim(); ++e) {
        if (e == d) continue;
        k_other *= kernel1d(spec.family, W(i, e), W(j, e), spec.lengthscales[e]);
      }
      const double g =
          k_other * kernel1d_dloggamma(spec.family, W(i, d), W(j, d), spec.lengthscales[d]);
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  return G;
}

double xi_moment(KernelFamily family, double gamma, double m, double v, double w) {
  check_moment_args(gamma, v);
  if (v < kVarFloor) return kernel1d(family, m, w, gamma);
  return family == KernelFamily::SquaredExponential ? xi_se(gamma, m, v, w)
                                                    : xi_mat(gamma, m, v, w);
}

double zeta_moment(KernelFamily family, double gamma, double m, double v,
                   double wi, double wj) {
  check_moment_args(gamma, v);
  if (v < kVarFloor)
    return kernel1d(family, m, wi, gamma) * kernel1d(family, m, wj, gamma);
  return family == KernelFamily::SquaredExponential ? zeta_se(gamma, m, v, wi, wj)
                                                    : zeta_mat(gamma, m, v, wi, wj);
}

}  // namespace gdgp
