#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gdgp/model.hpp"
#include "gdgp/optim.hpp"
#include "gdgp/rng.hpp"
#include "gdgp/types.hpp"
#include "gdgp/vecchia.hpp"

namespace gdgp {

// Counters for rare numerical fallbacks plus the warnings they produced;
// optional everywhere, reported at the end of a training run.
struct InferenceDiagnostics {
  long long ess_bracket_collapses = 0;
  long long optimizer_fallbacks = 0;  // M-steps that kept the previous estimate
  std::vector<std::string> warnings;
};

// One elliptical slice sampling update of the target p(w) ~ exp(loglik(w)) *
// N(w; 0, Sigma).  prior_draw must return independent N(0, Sigma) draws; the
// ellipse through the current point and one such draw is searched with the
// standard shrinking angle bracket.  A bracket collapsed below 1e-12 radians
// returns the current point and bumps the diagnostics counter.
Vec ess_step(const Vec& current, const std::function<Vec()>& prior_draw,
             const std::function<double(const Vec&)>& loglik, Rng& rng,
             InferenceDiagnostics* diag = nullptr);

// Dense Gaussian posterior over the latent mean channel.
struct GaussianPosterior {
  Vec mean;
  Mat cov;

  Vec sample(Rng& rng) const;  // Cholesky draw with a PSD eigenvalue fallback
};

// Mean-channel posterior with one observation per location:
// mean = Sigma (Sigma + Gamma)^{-1} y, cov = Sigma (Sigma + Gamma)^{-1} Gamma,
// Gamma = diag(noise).
GaussianPosterior posterior_mu_dense(const Mat& sigma, const Vec& noise, const Vec& y);

// Replicated form: mean = Sigma (I + D Sigma)^{-1} s with D = diag(S_i /
// sigma_i^2) and s_i = (sum_s y_{i,s}) / sigma_i^2, cov = Sigma (I + D
// Sigma)^{-1}.  Only N x N objects are formed regardless of sum S_i.
// replication_map sends each entry of y_flat to its location index.
GaussianPosterior posterior_mu_grouped(const Mat& sigma, const std::vector<int>& replication_map,
                                       const Vec& noise, const Vec& y_flat);

// Mean-channel posterior in factored form: mean = -(U_FF^T)^{-1} U_YF^T y,
// covariance (U_FF U_FF^T)^{-1}, sampled with one triangular solve per draw.
struct VecchiaPosterior {
  Vec mean;  // location order
  JointFactor factor;

  Vec sample(Rng& rng) const;
};

VecchiaPosterior posterior_mu_vecchia(const JointFactor& joint_u, const Vec& y);

// Pseudo-data form for replicates: y_tilde holds the per-location replicate
// means and joint_u must be built with noise sigma_i^2 / S_i.
VecchiaPosterior posterior_mu_vecchia_grouped(const JointFactor& joint_u, const Vec& y_tilde);

// Data log-likelihood summed over every replicate:
// sum_i sum_s log p(y_{i,s} | phi_i) with phi_i = inv_link(row i of f).
double replicate_loglik(const LikelihoodSpec& lik, const Dataset& data, const Mat& f);

// Conditioning plans for one training iteration, indexed [layer][node];
// hidden-layer plans order by the current latent inputs.
using SweepPlans = std::vector<std::vector<VecchiaPlan>>;

SweepPlans make_sweep_plans(const LatentState& state, const Mat& x,
                            const std::vector<std::vector<KernelSpec>>& kernels, int m_train,
                            Rng& rng);

// One ESS-within-Gibbs sweep: nodes update in layer order then node order.
// Hidden nodes target their GP prior times the next layer's GP densities;
// last-layer nodes target their GP prior times the replicate-summed data
// log-likelihood.  Under a heteroskedastic Gaussian likelihood the mean
// channel is drawn exactly from its Gaussian conditional instead of via ESS:
// densely when plans is null or the location count is at most
// vecchia.mu_dense_threshold, through the joint factor otherwise.
void gibbs_sweep(LatentState& state, const Architecture& arch,
                 const std::vector<std::vector<KernelSpec>>& kernels, const Dataset& scaled_data,
                 const SweepPlans* plans, const VecchiaConfig& vecchia, Rng& rng,
                 InferenceDiagnostics* diag = nullptr);

// Box-constrained maximization settings for one node's kernel parameters.
struct NodeOptions {
  int restarts = 2;    // random restarts in addition to the warm start
  int max_iters = 100;
  bool eta_free = false;
  double fixed_eta = 1e-6;
  double gamma_lo = 1e-3, gamma_hi = 1e3;
  double eta_lo = 1e-8, eta_hi = 1.0;
};

// Thrown when every optimization attempt for a node failed; carries the best
// point seen so a training loop can keep going with it.
struct NodeOptimizationError : NumericalError {
  KernelSpec best;

  NodeOptimizationError(const std::string& msg, KernelSpec best_point)
      : NumericalError(msg), best(std::move(best_point)) {}
};

// Maximizes the node's marginal log-likelihood over log(gamma) (and log(eta)
// when free) with the amplitude profiled out; pass a plan for the Vecchia
// objective or null for the dense one.  The returned spec never has a lower
// profile log-likelihood than the warm start.
KernelSpec optimize_node(const KernelSpec& node, const Mat& inputs, const Vec& outputs,
                         const VecchiaPlan* plan, const NodeOptions& opts, Rng& rng,
                         InferenceDiagnostics* diag = nullptr);

// Stochastic EM schedule: T iterations of {C Gibbs sweeps; per-node
// maximization}, discarding the first B parameter estimates from the final
// average, then K stored imputations separated by `thinning` sweeps.
struct SemConfig {
  int T = 500;
  int B = 250;
  int C = 10;
  int K = 50;
  int thinning = 10;
  std::uint64_t seed = 0;

  void validate() const;  // 0 <= B < T, C >= 1, K >= 1, thinning >= 1
};

// Per-iteration parameter estimates, one row per M-step output, plus the
// replicate data log-likelihood of the imputation each M-step saw.
struct SemTrace {
  std::vector<std::string> names;
  Mat values;  // T x names.size()
  Vec loglik;  // length T
};

// Fits a model on raw (unscaled) grouped data: scales inputs/outputs,
// initializes latents, runs the stochastic EM loop, averages the post-burn-in
// estimates, and collects K imputations at the averaged parameters.  A node
// whose M-step fails keeps its previous estimate and logs a warning; training
// never aborts mid-run for that reason.
GdgpModel sem_train(const Dataset& data, const Architecture& arch, const SemConfig& cfg,
                    const VecchiaConfig& vecchia = {}, SemTrace* trace = nullptr,
                    InferenceDiagnostics* diag = nullptr);

}  // namespace gdgp
