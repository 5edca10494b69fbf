#include "gdgp/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>

#include "gdgp/kernel.hpp"
#include "gdgp/likelihood.hpp"
#include "gdgp/parallel.hpp"

namespace gdgp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMinBracket = 1e-12;  // radians; below this the update gives up

// Stream labels for the per-phase RNGs derived from the training seed.
enum StreamPhase : std::uint64_t {
  kStreamInit = 11,
  kStreamPlans = 12,
  kStreamSweeps = 13,
  kStreamMstep = 14,
  kStreamCollectPlans = 15,
  kStreamCollectSweeps = 16,
};

void emit_warning(InferenceDiagnostics* diag, const std::string& msg) {
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
  if (diag) diag->warnings.push_back(msg);
}

}  // namespace

Vec ess_step(const Vec& current, const std::function<Vec()>& prior_draw,
             const std::function<double(const Vec&)>& loglik, Rng& rng,
             InferenceDiagnostics* diag) {
  const Vec nu = prior_draw();
  if (nu.size() != current.size())
    throw std::invalid_argument("ess_step: prior draw size mismatch");
  const double logy = loglik(current) + std::log(rng.uniform());
  double theta = kTwoPi * rng.uniform();
  double lo = theta - kTwoPi, hi = theta;
  for (;;) {
    const Vec proposal = std::cos(theta) * current + std::sin(theta) * nu;
    if (loglik(proposal) > logy) return proposal;
    if (theta < 0.0)
      lo = theta;
    else
      hi = theta;
    if (hi - lo < kMinBracket) {
      if (diag) ++diag->ess_bracket_collapses;
      return current;
    }
    theta = lo + (hi - lo) * rng.uniform();
  }
}

Vec GaussianPosterior::sample(Rng& rng) const {
  const Eigen::Index n = mean.size();
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return mean + llt.matrixL() * z;
  // A posterior covariance can be numerically semidefinite (for example with
  // near-zero noise); fall back to an eigenvalue square root with clamping.
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericalError("posterior covariance factorization failed");
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * root.asDiagonal() * z;
}

GaussianPosterior posterior_mu_dense(const Mat& sigma, const Vec& noise, const Vec& y) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n || noise.size() != n || y.size() != n)
    throw std::invalid_argument("posterior_mu_dense: shape mismatch");
  Mat total = sigma;
  total.diagonal() += noise;
  Eigen::LLT<Mat> llt(total);
  if (llt.info() != Eigen::Success)
    throw NumericalError("posterior_mu_dense: Sigma + Gamma is not positive definite");
  GaussianPosterior post;
  post.mean = sigma * llt.solve(y);
  Mat cov = sigma * llt.solve(Mat(noise.asDiagonal()));
  post.cov = 0.5 * (cov + cov.transpose());
  return post;
}

GaussianPosterior posterior_mu_grouped(const Mat& sigma, const std::vector<int>& replication_map,
                                       const Vec& noise, const Vec& y_flat) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n || noise.size() != n)
    throw std::invalid_argument("posterior_mu_grouped: shape mismatch");
  if (static_cast<Eigen::Index>(replication_map.size()) != y_flat.size())
    throw std::invalid_argument("posterior_mu_grouped: replication map and data disagree");
  // Fold the replicates down to the N-vector M^T Lambda^{-1} y and the
  // diagonal of M^T Lambda^{-1} M; nothing of size sum S_i is ever formed.
  Vec s = Vec::Zero(n);
  Vec d = Vec::Zero(n);
  for (Eigen::Index r = 0; r < y_flat.size(); ++r) {
    const int i = replication_map[static_cast<size_t>(r)];
    if (i < 0 || i >= n) throw std::invalid_argument("posterior_mu_grouped: map index out of range");
    s[i] += y_flat[r] / noise[i];
    d[i] += 1.0 / noise[i];
  }
  Mat system = d.asDiagonal() * sigma;
  system.diagonal().array() += 1.0;  // I + D Sigma
  Eigen::PartialPivLU<Mat> lu(system);
  GaussianPosterior post;
  post.mean = sigma * lu.solve(s);
  Mat cov = sigma * lu.solve(Mat::Identity(n, n));
  post.cov = 0.5 * (cov + cov.transpose());
  if (!post.mean.allFinite() || !post.cov.allFinite())
    throw NumericalError("posterior_mu_grouped: singular I + D Sigma system");
  return post;
}

namespace {

// Solves U_FF^T x = rhs by forward substitution; rhs and x in factor position
// order.
Vec solve_uff_transposed(const JointFactor& jf, const Vec& rhs) {
  const int n = jf.n();
  Vec x(n);
  for (int k = 0; k < n; ++k) {
    double s = rhs[k];
    for (const auto& [j, v] : jf.f_off[static_cast<size_t>(k)]) s -= v * x[j];
    const double dk = jf.diag[k];
    if (!(dk > 0.0) || !std::isfinite(dk))
      throw NumericalError("mean-channel joint factor is singular");
    x[k] = s / dk;
  }
  return x;
}

VecchiaPosterior factor_posterior(const JointFactor& joint_u, const Vec& y) {
  const int n = joint_u.n();
  if (y.size() != n) throw std::invalid_argument("factor posterior: data length mismatch");
  Vec rhs = Vec::Zero(n);
  for (int k = 0; k < n; ++k)
    for (const auto& [loc, v] : joint_u.y_off[static_cast<size_t>(k)]) rhs[k] -= v * y[loc];
  const Vec pos_mean = solve_uff_transposed(joint_u, rhs);
  VecchiaPosterior post;
  post.mean = Vec(n);
  for (int k = 0; k < n; ++k) post.mean[joint_u.order[static_cast<size_t>(k)]] = pos_mean[k];
  post.factor = joint_u;
  return post;
}

}  // namespace

Vec VecchiaPosterior::sample(Rng& rng) const {
  const int n = factor.n();
  Vec z(n);
  for (int k = 0; k < n; ++k) z[k] = rng.normal();
  const Vec x = solve_uff_transposed(factor, z);
  Vec out(n);
  for (int k = 0; k < n; ++k) {
    const int loc = factor.order[static_cast<size_t>(k)];
    out[loc] = mean[loc] + x[k];
  }
  return out;
}

VecchiaPosterior posterior_mu_vecchia(const JointFactor& joint_u, const Vec& y) {
  return factor_posterior(joint_u, y);
}

VecchiaPosterior posterior_mu_vecchia_grouped(const JointFactor& joint_u, const Vec& y_tilde) {
  return factor_posterior(joint_u, y_tilde);
}

double replicate_loglik(const LikelihoodSpec& lik, const Dataset& data, const Mat& f) {
  const int n = data.n();
  if (f.rows() != n || f.cols() != lik.param_count())
    throw std::invalid_argument("replicate_loglik: latent matrix shape mismatch");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec phi = inv_link(lik, f.row(i).transpose());
    for (const double y : data.outputs[static_cast<size_t>(i)])
      total += log_density(lik, y, phi);
  }
  return total;
}

SweepPlans make_sweep_plans(const LatentState& state, const Mat& x,
                            const std::vector<std::vector<KernelSpec>>& kernels, int m_train,
                            Rng& rng) {
  SweepPlans plans(kernels.size());
  for (size_t l = 0; l < kernels.size(); ++l) {
    const Mat inputs = (l == 0) ? x : state.layer_matrix(static_cast<int>(l) - 1);
    plans[l].reserve(kernels[l].size());
    for (const KernelSpec& spec : kernels[l])
      plans[l].push_back(make_plan(inputs, spec.lengthscales, m_train, rng.next_u64()));
  }
  return plans;
}

namespace {

// Prior draw from N(0, sigma^2 (K + eta I)) over the given inputs, dense or
// factored depending on the plan.
Vec gp_prior_draw(const KernelSpec& spec, const Mat& inputs, const VecchiaPlan* plan, Rng& rng) {
  const Eigen::Index n = inputs.rows();
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  if (plan) {
    const SparseU u = build_U(spec, inputs, *plan);
    return sample_via_U(u, z);
  }
  Mat cov = spec.amplitude * corr_matrix(spec, inputs);
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("prior covariance is not positive definite");
  return llt.matrixL() * z;
}

double gp_logdensity(const KernelSpec& spec, const Vec& w, const Mat& inputs,
                     const VecchiaPlan* plan) {
  return plan ? vecchia_loglik(spec, w, inputs, *plan, false).value
              : gp_loglik_dense(spec, w, inputs, false).value;
}

// Exact draw of the heteroskedastic mean channel given the current
// log-variance channel, the replicate layout, and the mean node's GP prior.
Vec draw_mu_exact(const KernelSpec& spec, const Mat& w_in, const Vec& log_var,
                  const Dataset& data, bool vecchia_mode, const VecchiaConfig& vecchia,
                  Rng& rng) {
  const int n = data.n();
  Vec gamma(n);
  for (int i = 0; i < n; ++i)
    gamma[i] = std::exp(std::clamp(log_var[i], -45.0, 45.0));
  if (!vecchia_mode || n <= vecchia.mu_dense_threshold) {
    const Mat sigma = spec.amplitude * corr_matrix(spec, w_in);
    return posterior_mu_grouped(sigma, data.replication_map, gamma, data.flat_outputs())
        .sample(rng);
  }
  Vec pseudo_noise(n);
  for (int i = 0; i < n; ++i) pseudo_noise[i] = gamma[i] / data.group_size(i);
  const JointFactor jf = build_joint_U(spec, w_in, pseudo_noise, vecchia.m_train, rng.next_u64());
  return posterior_mu_vecchia_grouped(jf, data.replicate_means()).sample(rng);
}

}  // namespace

void gibbs_sweep(LatentState& state, const Architecture& arch,
                 const std::vector<std::vector<KernelSpec>>& kernels, const Dataset& scaled_data,
                 const SweepPlans* plans, const VecchiaConfig& vecchia, Rng& rng,
                 InferenceDiagnostics* diag) {
  const int n = scaled_data.n();
  state.validate(arch, n);
  if (static_cast<int>(kernels.size()) != arch.layer_count)
    throw std::invalid_argument("gibbs_sweep: kernel table does not match the architecture");
  const int L = arch.layer_count;
  const bool heteroskedastic = arch.likelihood.id == LikelihoodId::HeteroGaussian;

  for (int l = 0; l < L; ++l) {
    const Mat in_l = (l == 0) ? scaled_data.inputs : state.layer_matrix(l - 1);
    const int nodes = arch.nodes_in(l);
    auto plan_for = [&](int layer, int p) -> const VecchiaPlan* {
      return plans ? &(*plans)[static_cast<size_t>(layer)][static_cast<size_t>(p)] : nullptr;
    };

    if (l < L - 1) {
      // Hidden node: GP prior times the GP densities of the next layer, whose
      // inputs contain this node's column.
      Mat next_in = state.layer_matrix(l);
      for (int p = 0; p < nodes; ++p) {
        auto prior = [&] { return gp_prior_draw(kernels[l][p], in_l, plan_for(l, p), rng); };
        auto loglik = [&](const Vec& w) {
          next_in.col(p) = w;
          double total = 0.0;
          for (int q = 0; q < arch.nodes_in(l + 1); ++q)
            total += gp_logdensity(kernels[l + 1][q], state.node(l + 1, q), next_in,
                                   plan_for(l + 1, q));
          return total;
        };
        const Vec updated = ess_step(state.node(l, p), prior, loglik, rng, diag);
        state.node(l, p) = updated;
        next_in.col(p) = updated;
      }
    } else {
      // Last layer: GP prior times the replicate-summed data log-likelihood.
      Mat f = state.layer_matrix(l);
      for (int q = 0; q < nodes; ++q) {
        if (heteroskedastic && q == 0) {
          const Vec mu = draw_mu_exact(kernels[l][0], in_l, state.node(l, 1), scaled_data,
                                       plans != nullptr, vecchia, rng);
          state.node(l, 0) = mu;
          f.col(0) = mu;
          continue;
        }
        auto prior = [&] { return gp_prior_draw(kernels[l][q], in_l, plan_for(l, q), rng); };
        auto loglik = [&](const Vec& v) {
          f.col(q) = v;
          return replicate_loglik(arch.likelihood, scaled_data, f);
        };
        const Vec updated = ess_step(state.node(l, q), prior, loglik, rng, diag);
        state.node(l, q) = updated;
        f.col(q) = updated;
      }
    }
  }
}

namespace {

struct ProfilePoint {
  double value = -std::numeric_limits<double>::infinity();
  double sigma2 = 1.0;
};

// Profile log-likelihood at log-parameters x = [log gamma_1.., log eta?]:
// the amplitude is replaced by its closed-form optimum quad/N.  Gradients, by
// the envelope theorem, are the log-parameter gradients evaluated at that
// amplitude.
ProfilePoint profile_loglik(const KernelSpec& base, const NodeOptions& opts, const Vec& x,
                            const Mat& inputs, const Vec& outputs, const VecchiaPlan* plan,
                            Vec* grad) {
  const int d = static_cast<int>(inputs.cols());
  KernelSpec spec = base;
  spec.lengthscales = x.head(d).array().exp();
  spec.nugget = opts.eta_free ? std::exp(x[d]) : opts.fixed_eta;
  spec.amplitude = 1.0;
  const VecchiaLoglik at_unit = plan ? vecchia_loglik(spec, outputs, inputs, *plan, false)
                                     : gp_loglik_dense(spec, outputs, inputs, false);
  if (!std::isfinite(at_unit.value) || !std::isfinite(at_unit.sigma2_hat))
    throw NumericalError("node profile likelihood is not finite");
  ProfilePoint out;
  out.sigma2 = std::max(at_unit.sigma2_hat, 1e-12);
  const double n = static_cast<double>(outputs.size());
  if (!grad) {
    out.value = at_unit.value + 0.5 * n * (out.sigma2 - std::log(out.sigma2) - 1.0);
    return out;
  }
  spec.amplitude = out.sigma2;
  const VecchiaLoglik at_hat = plan ? vecchia_loglik(spec, outputs, inputs, *plan, true)
                                    : gp_loglik_dense(spec, outputs, inputs, true);
  out.value = at_hat.value;
  grad->head(d) = at_hat.grad_loggamma;
  if (opts.eta_free) (*grad)[d] = at_hat.grad_logeta;
  return out;
}

}  // namespace

KernelSpec optimize_node(const KernelSpec& node, const Mat& inputs, const Vec& outputs,
                         const VecchiaPlan* plan, const NodeOptions& opts, Rng& rng,
                         InferenceDiagnostics* diag) {
  (void)diag;
  node.validate();
  const int d = static_cast<int>(inputs.cols());
  if (node.dim() != d) throw std::invalid_argument("optimize_node: lengthscale count mismatch");
  const int np = d + (opts.eta_free ? 1 : 0);

  Vec lower(np), upper(np);
  lower.head(d).setConstant(std::log(opts.gamma_lo));
  upper.head(d).setConstant(std::log(opts.gamma_hi));
  if (opts.eta_free) {
    lower[d] = std::log(opts.eta_lo);
    upper[d] = std::log(opts.eta_hi);
  }
  auto clamp_inside = [&](Vec x) {
    for (int j = 0; j < np; ++j) {
      const double pad = 1e-8 * (upper[j] - lower[j]);
      x[j] = std::clamp(x[j], lower[j] + pad, upper[j] - pad);
    }
    return x;
  };

  // minimize_box minimizes, so the objective is the negated profile value; a
  // numerical failure reports +inf and lets the line search back off.
  auto objective = [&](const Vec& x, Vec& g) -> double {
    g.setZero(np);
    try {
      Vec grad(np);
      const ProfilePoint p = profile_loglik(node, opts, x, inputs, outputs, plan, &grad);
      g = -grad;
      return -p.value;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Vec warm(np);
  warm.head(d) = node.lengthscales.array().log();
  if (opts.eta_free) warm[d] = std::log(std::max(node.nugget, opts.eta_lo));

  LbfgsOptions lopts;
  lopts.max_iters = opts.max_iters;

  double best_value = std::numeric_limits<double>::infinity();
  Vec best_x;
  bool any_success = false;
  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    Vec x0(np);
    if (attempt == 0) {
      x0 = clamp_inside(warm);
    } else {
      for (int j = 0; j < d; ++j)
        x0[j] = std::log(0.05) + rng.uniform() * (std::log(5.0) - std::log(0.05));
      if (opts.eta_free) x0[d] = std::log(1e-7) + rng.uniform() * (std::log(0.3) - std::log(1e-7));
      x0 = clamp_inside(x0);
    }
    try {
      const LbfgsResult res = minimize_box(objective, x0, lower, upper, lopts);
      any_success = true;
      if (res.value < best_value) {
        best_value = res.value;
        best_x = res.x;
      }
    } catch (const NumericalError&) {
      // attempt failed; other starts may still succeed
    }
  }
  if (!any_success)
    throw NodeOptimizationError("every optimization attempt for the node failed", node);

  KernelSpec out = node;
  out.lengthscales = best_x.head(d).array().exp();
  out.nugget = opts.eta_free ? std::exp(best_x[d]) : opts.fixed_eta;
  out.amplitude = profile_loglik(node, opts, best_x, inputs, outputs, plan, nullptr).sigma2;
  out.validate();
  return out;
}

void SemConfig::validate() const {
  if (B < 0 || B >= T) throw std::invalid_argument("SEM burn-in must satisfy 0 <= B < T");
  if (C < 1) throw std::invalid_argument("SEM needs at least one sweep per imputation");
  if (K < 1) throw std::invalid_argument("SEM must store at least one imputation");
  if (thinning < 1) throw std::invalid_argument("SEM thinning must be >= 1");
}

namespace {

std::vector<std::vector<KernelSpec>> init_kernels(const Architecture& arch, int input_dim) {
  std::vector<std::vector<KernelSpec>> kernels(static_cast<size_t>(arch.layer_count));
  for (int l = 0; l < arch.layer_count; ++l) {
    const int dim_l = (l == 0) ? input_dim : arch.nodes_in(l - 1);
    const bool last = l == arch.layer_count - 1;
    kernels[static_cast<size_t>(l)].assign(
        static_cast<size_t>(arch.nodes_in(l)),
        KernelSpec::isotropic(arch.kernel_family, dim_l, 0.5, 1.0, last ? 1e-4 : 1e-6));
  }
  return kernels;
}

std::vector<std::string> param_names(const std::vector<std::vector<KernelSpec>>& kernels) {
  std::vector<std::string> names;
  for (size_t l = 0; l < kernels.size(); ++l)
    for (size_t p = 0; p < kernels[l].size(); ++p) {
      const std::string stem =
          "layer" + std::to_string(l + 1) + ".node" + std::to_string(p + 1) + ".";
      for (int j = 0; j < kernels[l][p].dim(); ++j)
        names.push_back(stem + "gamma" + std::to_string(j + 1));
      names.push_back(stem + "sigma2");
      names.push_back(stem + "eta");
    }
  return names;
}

Vec flatten_params(const std::vector<std::vector<KernelSpec>>& kernels) {
  std::vector<double> vals;
  for (const auto& layer : kernels)
    for (const KernelSpec& k : layer) {
      for (int j = 0; j < k.dim(); ++j) vals.push_back(k.lengthscales[j]);
      vals.push_back(k.amplitude);
      vals.push_back(k.nugget);
    }
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void unflatten_params(const Vec& theta, std::vector<std::vector<KernelSpec>>& kernels) {
  Eigen::Index at = 0;
  for (auto& layer : kernels)
    for (KernelSpec& k : layer) {
      for (int j = 0; j < k.dim(); ++j) k.lengthscales[j] = theta[at++];
      k.amplitude = theta[at++];
      k.nugget = theta[at++];
      k.validate();
    }
  if (at != theta.size()) throw std::invalid_argument("parameter vector length mismatch");
}

}  // namespace

GdgpModel sem_train(const Dataset& data, const Architecture& arch, const SemConfig& cfg,
                    const VecchiaConfig& vecchia, SemTrace* trace, InferenceDiagnostics* diag) {
  cfg.validate();
  arch.validate();
  data.validate(arch.likelihood);

  const ScalingInfo scaling = ScalingInfo::fit(data, arch.likelihood);
  const Dataset scaled = apply_scaling(data, scaling);
  Rng init_rng = Rng::stream(cfg.seed, {kStreamInit});
  LatentState state = init_latent(scaled, arch, init_rng);
  auto kernels = init_kernels(arch, scaled.dim());

  const int L = arch.layer_count;
  struct NodeRef {
    int l, p;
  };
  std::vector<NodeRef> node_list;
  for (int l = 0; l < L; ++l)
    for (int p = 0; p < arch.nodes_in(l); ++p) node_list.push_back({l, p});

  const std::vector<std::string> names = param_names(kernels);
  Mat estimates(cfg.T, static_cast<Eigen::Index>(names.size()));
  Vec data_loglik(cfg.T);

  SweepPlans plans;
  for (int t = 0; t < cfg.T; ++t) {
    // Imputation step: conditioning sets are rebuilt once per iteration from
    // the current latents and lengthscales, then held fixed across sweeps.
    if (vecchia.enabled) {
      Rng plan_rng = Rng::stream(cfg.seed, {kStreamPlans, static_cast<std::uint64_t>(t)});
      plans = make_sweep_plans(state, scaled.inputs, kernels, vecchia.m_train, plan_rng);
    }
    Rng sweep_rng = Rng::stream(cfg.seed, {kStreamSweeps, static_cast<std::uint64_t>(t)});
    for (int c = 0; c < cfg.C; ++c)
      gibbs_sweep(state, arch, kernels, scaled, vecchia.enabled ? &plans : nullptr, vecchia,
                  sweep_rng, diag);

    // Maximization step: every node optimizes against an immutable snapshot,
    // in parallel, with a counter-derived stream per node.
    std::vector<Mat> layer_inputs(static_cast<size_t>(L));
    layer_inputs[0] = scaled.inputs;
    for (int l = 1; l < L; ++l) layer_inputs[static_cast<size_t>(l)] = state.layer_matrix(l - 1);

    std::vector<std::optional<KernelSpec>> updated(node_list.size());
    std::vector<std::string> failures(node_list.size());
    parallel_for(static_cast<std::ptrdiff_t>(node_list.size()), [&](std::ptrdiff_t j) {
      const auto [l, p] = node_list[static_cast<size_t>(j)];
      NodeOptions opts;
      opts.eta_free = (l == L - 1);
      Rng node_rng = Rng::stream(cfg.seed, {kStreamMstep, static_cast<std::uint64_t>(t),
                                            static_cast<std::uint64_t>(l),
                                            static_cast<std::uint64_t>(p)});
      try {
        const VecchiaPlan* plan =
            vecchia.enabled ? &plans[static_cast<size_t>(l)][static_cast<size_t>(p)] : nullptr;
        updated[static_cast<size_t>(j)] =
            optimize_node(kernels[static_cast<size_t>(l)][static_cast<size_t>(p)],
                          layer_inputs[static_cast<size_t>(l)], state.node(l, p), plan, opts,
                          node_rng, diag);
      } catch (const std::exception& e) {
        failures[static_cast<size_t>(j)] = e.what();
      }
    });
    for (size_t j = 0; j < node_list.size(); ++j) {
      if (updated[j]) {
        kernels[static_cast<size_t>(node_list[j].l)][static_cast<size_t>(node_list[j].p)] =
            *updated[j];
      } else {
        emit_warning(diag, "M-step kept the previous estimate for layer " +
                               std::to_string(node_list[j].l + 1) + " node " +
                               std::to_string(node_list[j].p + 1) + " at iteration " +
                               std::to_string(t + 1) + ": " + failures[j]);
        if (diag) ++diag->optimizer_fallbacks;
      }
    }
    estimates.row(t) = flatten_params(kernels).transpose();
    data_loglik[t] = replicate_loglik(arch.likelihood, scaled, state.layer_matrix(L - 1));
  }

  // Point estimate: plain average of the post-burn-in per-iteration estimates.
  const Vec theta_hat =
      estimates.middleRows(cfg.B, cfg.T - cfg.B).colwise().mean().transpose();
  unflatten_params(theta_hat, kernels);

  // Final imputations at the fixed estimate, `thinning` sweeps apart.
  GdgpModel model;
  model.imputations.reserve(static_cast<size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    if (vecchia.enabled) {
      Rng plan_rng = Rng::stream(cfg.seed, {kStreamCollectPlans, static_cast<std::uint64_t>(k)});
      plans = make_sweep_plans(state, scaled.inputs, kernels, vecchia.m_train, plan_rng);
    }
    Rng sweep_rng = Rng::stream(cfg.seed, {kStreamCollectSweeps, static_cast<std::uint64_t>(k)});
    for (int s = 0; s < cfg.thinning; ++s)
      gibbs_sweep(state, arch, kernels, scaled, vecchia.enabled ? &plans : nullptr, vecchia,
                  sweep_rng, diag);
    model.imputations.push_back(state);
  }

  if (trace) {
    trace->names = names;
    trace->values = estimates;
    trace->loglik = data_loglik;
  }
  model.arch = arch;
  model.kernels = kernels;
  model.train_inputs = scaled.inputs;
  model.scaling = scaling;
  model.vecchia = vecchia;
  model.validate();
  return model;
}

}  // namespace gdgp
