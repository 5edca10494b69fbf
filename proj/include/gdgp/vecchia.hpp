#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gdgp/kernel.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

// Random ordering plus nearest-neighbor conditioning sets.  Position k of the
// ordering conditions on up to m earlier-ordered points, nearest in
// lengthscale-scaled input space.
struct VecchiaPlan {
  bool exact = false;  // every set holds all predecessors
  int m = 0;
  std::vector<int> ordering;           // position -> data index
  std::vector<std::vector<int>> sets;  // per position: conditioning data indices

  int n() const { return static_cast<int>(ordering.size()); }
  void validate() const;
};

VecchiaPlan make_plan(const Mat& inputs, const Vec& lengthscales, int m_train,
                      std::uint64_t seed);

// Identity ordering with full conditioning sets.
VecchiaPlan exact_plan(int n);

struct VecchiaLoglik {
  double value = 0.0;
  Vec grad_loggamma;            // one entry per input dimension
  double grad_logeta = 0.0;
  double grad_logsigma2 = 0.0;
  double sigma2_hat = 0.0;  // profile optimum of the amplitude at these lengthscales
};

// Sum over ordered points of the conditional Gaussian log-density given the
// conditioning set, with analytic gradients in log-parameter space.
// Summands accumulate in fixed batches so results do not depend on the
// worker count.
VecchiaLoglik vecchia_loglik(const KernelSpec& spec, const Vec& w, const Mat& inputs,
                             const VecchiaPlan& plan, bool want_grad = true);

// Sparse upper-triangular factor U of the implied precision, U U^T = P,
// stored per ordering position: at most m off-diagonal entries per column,
// strictly positive diagonal.
struct SparseU {
  std::vector<int> order;  // position -> data index
  Vec diag;
  std::vector<std::vector<std::pair<int, double>>> off;  // (position j < i, value)

  int n() const { return static_cast<int>(order.size()); }
  // (U^T w)_k for w given in data index order.
  Vec multiply_transposed(const Vec& w) const;
};

SparseU build_U(const KernelSpec& spec, const Mat& inputs, const VecchiaPlan& plan);

// Solves U^T w = z by forward substitution; z in position order, result in
// data index order.  For standard-normal z the result is N(0, (U U^T)^{-1}).
Vec sample_via_U(const SparseU& u, const Vec& z);

// The factored form of the same log-likelihood:
// -N/2 log 2pi + sum log U_kk - ||U^T w||^2 / 2.
double loglik_via_U(const SparseU& u, const Vec& w);

// Joint factor over (responses, latent mean) with responses ordered first.
// Only the latent-mean columns are materialized: they are all the posterior
// needs.  Rows split by block.
struct JointFactor {
  std::vector<int> order;  // latent-block position -> location index
  Vec diag;
  std::vector<std::vector<std::pair<int, double>>> y_off;  // (location index, value)
  std::vector<std::vector<std::pair<int, double>>> f_off;  // (latent position, value)

  int n() const { return static_cast<int>(order.size()); }
};

// noise[i] is the response noise variance at location i (sigma_i^2, or
// sigma_i^2/S_i for replicate means).  Conditioning sets pick up to m joint
// variables nearest in lengthscale-scaled input space; at a tied location the
// latent variable is preferred over the response.
JointFactor build_joint_U(const KernelSpec& spec, const Mat& inputs, const Vec& noise,
                          int m, std::uint64_t seed);

}  // namespace gdgp
