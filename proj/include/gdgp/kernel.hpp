#pragma once

#include <Eigen/Dense>

#include "gdgp/types.hpp"

namespace gdgp {

enum class KernelFamily { SquaredExponential, Matern25 };

// Per-node kernel: multiplicative over input dimensions,
//   R_ij = prod_d k_d(a_d, b_d) + eta * 1{i=j},
// with k the squared exponential exp(-(a-b)^2/gamma^2) or Matern-2.5
//   (1 + sqrt5 u + 5 u^2 / 3) exp(-sqrt5 u),  u = |a-b|/gamma.
// amplitude sigma^2 scales the process, not the correlation entries here.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern25;
  Vec lengthscales;        // gamma_d > 0, one per input dimension
  double amplitude = 1.0;  // sigma^2 > 0
  double nugget = 0.0;     // eta >= 0

  static KernelSpec isotropic(KernelFamily f, int dim, double gamma,
                              double sigma2 = 1.0, double eta = 0.0);
  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;  // throws std::invalid_argument
};

// One-dimensional correlation k(a,b) for lengthscale gamma.
double kernel1d(KernelFamily family, double a, double b, double gamma);

// d k(a,b) / d log(gamma), used by the marginal-likelihood optimizers.
double kernel1d_dloggamma(KernelFamily family, double a, double b, double gamma);

// Product correlation over dimensions; no nugget.
double correlation(const KernelSpec& spec, Eigen::Ref<const Vec> a,
                   Eigen::Ref<const Vec> b);

// N x N correlation matrix over the rows of W with nugget on the diagonal.
Mat corr_matrix(const KernelSpec& spec, Eigen::Ref<const Mat> W);

// M x N cross-correlation between the rows of A and the rows of B; no nugget.
Mat cross_correlation(const KernelSpec& spec, Eigen::Ref<const Mat> A,
                      Eigen::Ref<const Mat> B);

// Elementwise d corr_matrix / d log(gamma_d) over rows of W (diagonal zero).
Mat corr_matrix_dloggamma(const KernelSpec& spec, Eigen::Ref<const Mat> W, int d);

// xi(m,v,w)  = E[k(X,w)],        X ~ N(m,v), for a 1-d kernel with lengthscale gamma.
// zeta(m,v,wi,wj) = E[k(X,wi) k(X,wj)].
// Closed forms; both fall back to the v=0 kernel product below v = 1e-12.
double xi_moment(KernelFamily family, double gamma, double m, double v, double w);
double zeta_moment(KernelFamily family, double gamma, double m, double v,
                   double wi, double wj);

}  // namespace gdgp
