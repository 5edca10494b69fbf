#include "gdgp/predict.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gdgp/kdtree.hpp"
#include "gdgp/kernel.hpp"
#include "gdgp/likelihood.hpp"
#include "gdgp/parallel.hpp"
#include "gdgp/rng.hpp"

namespace gdgp {

namespace {

constexpr std::uint64_t kStreamComposition = 21;

// Round-off can push the propagated variance slightly negative; clamp those
// cases and fail loudly on anything larger.  The propagated variance is a
// difference of quadratic forms in R^{-1}f, so its absolute error scales
// with the marginal variance amplified by the correlation matrix's
// conditioning; near-interpolation fits (nugget at its floor, dense smooth
// designs) legitimately reach a few 1e-6 of the marginal.  A genuine
// assembly defect shows up at the scale of the marginal itself, orders of
// magnitude above this threshold.
double clamp_variance(double var, double scale, double magnitude, PredictDiagnostics* diag) {
  if (var >= 0.0) return var;
  const double tol = 1e-5 * std::max(1.0, scale) + 1e-12 * std::fabs(magnitude);
  if (var < -tol) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "propagated predictive variance %.3e is negative beyond round-off "
                  "(tolerance %.3e, marginal %.3e, magnitude %.3e)",
                  var, tol, scale, magnitude);
    throw NumericalError(msg);
  }
  if (diag) ++diag->variance_clamps;
  return 0.0;
}

// E[k(X, w_i)] over the layer's input dimensions (the I-vector entries).
double xi_product(const KernelSpec& spec, const Vec& mu, const Vec& var,
                  Eigen::Ref<const Mat> w, Eigen::Index i) {
  double out = 1.0;
  for (int d = 0; d < spec.dim(); ++d)
    out *= xi_moment(spec.family, spec.lengthscales[d], mu[d], var[d], w(i, d));
  return out;
}

// E[k(X, w_i) k(X, w_j)] over the layer's input dimensions (J-matrix entries).
double zeta_product(const KernelSpec& spec, const Vec& mu, const Vec& var,
                    Eigen::Ref<const Mat> w, Eigen::Index i, Eigen::Index j) {
  double out = 1.0;
  for (int d = 0; d < spec.dim(); ++d)
    out *= zeta_moment(spec.family, spec.lengthscales[d], mu[d], var[d], w(i, d), w(j, d));
  return out;
}

struct ExactNodeCache {
  Eigen::LLT<Mat> llt;
  Vec alpha;  // R^{-1} w
  Mat rinv;   // only for layers fed by latent nodes (trace term)
};

}  // namespace

struct LgpPredictor::Impl {
  const GdgpModel* model = nullptr;
  int k = 0;
  std::vector<Mat> layer_inputs;                    // [layer]: inputs feeding that layer
  std::vector<std::vector<ExactNodeCache>> exact;   // [layer][node], exact mode
  std::vector<std::vector<NeighborSearch>> trees;   // [layer][node], factored mode

  NodeMoments forward(const Vec& x0, PredictDiagnostics* diag) const;
};

LgpPredictor::LgpPredictor(const GdgpModel& model, int imputation)
    : impl_(std::make_unique<Impl>()) {
  model.validate();
  if (imputation < 0 || imputation >= static_cast<int>(model.imputations.size()))
    throw std::invalid_argument("imputation index out of range");
  impl_->model = &model;
  impl_->k = imputation;
  const Architecture& arch = model.arch;
  const LatentState& state = model.imputations[static_cast<size_t>(imputation)];

  impl_->layer_inputs.resize(static_cast<size_t>(arch.layer_count));
  impl_->layer_inputs[0] = model.train_inputs;
  for (int l = 1; l < arch.layer_count; ++l)
    impl_->layer_inputs[static_cast<size_t>(l)] = state.layer_matrix(l - 1);

  if (!model.vecchia.enabled) {
    impl_->exact.resize(static_cast<size_t>(arch.layer_count));
    for (int l = 0; l < arch.layer_count; ++l) {
      const Mat& w_in = impl_->layer_inputs[static_cast<size_t>(l)];
      for (int p = 0; p < arch.nodes_in(l); ++p) {
        const KernelSpec& spec = model.kernels[static_cast<size_t>(l)][static_cast<size_t>(p)];
        ExactNodeCache cache;
        cache.llt.compute(corr_matrix(spec, w_in));
        if (cache.llt.info() != Eigen::Success)
          throw NumericalError("training correlation matrix is not positive definite");
        cache.alpha = cache.llt.solve(state.node(l, p));
        if (l > 0) cache.rinv = cache.llt.solve(Mat::Identity(w_in.rows(), w_in.rows()));
        impl_->exact[static_cast<size_t>(l)].push_back(std::move(cache));
      }
    }
  } else {
    impl_->trees.resize(static_cast<size_t>(arch.layer_count));
    for (int l = 0; l < arch.layer_count; ++l) {
      const Mat& w_in = impl_->layer_inputs[static_cast<size_t>(l)];
      for (int p = 0; p < arch.nodes_in(l); ++p) {
        const KernelSpec& spec = model.kernels[static_cast<size_t>(l)][static_cast<size_t>(p)];
        NeighborSearch tree(static_cast<int>(w_in.cols()));
        for (Eigen::Index i = 0; i < w_in.rows(); ++i)
          tree.insert(w_in.row(i).transpose().cwiseQuotient(spec.lengthscales));
        impl_->trees[static_cast<size_t>(l)].push_back(std::move(tree));
      }
    }
  }
}

LgpPredictor::~LgpPredictor() = default;
LgpPredictor::LgpPredictor(LgpPredictor&&) noexcept = default;
LgpPredictor& LgpPredictor::operator=(LgpPredictor&&) noexcept = default;

NodeMoments LgpPredictor::Impl::forward(const Vec& x0, PredictDiagnostics* diag) const {
  const Architecture& arch = model->arch;
  const LatentState& state = model->imputations[static_cast<size_t>(k)];
  if (x0.size() != model->train_inputs.cols())
    throw std::invalid_argument("test input dimension mismatch");

  const bool factored = model->vecchia.enabled;
  Vec mu_prev, var_prev;

  for (int l = 0; l < arch.layer_count; ++l) {
    const Mat& w_in = layer_inputs[static_cast<size_t>(l)];
    const int n = static_cast<int>(w_in.rows());
    const int nodes = arch.nodes_in(l);
    Vec mu(nodes), var(nodes);

    for (int p = 0; p < nodes; ++p) {
      const KernelSpec& spec = model->kernels[static_cast<size_t>(l)][static_cast<size_t>(p)];
      const double marginal = spec.amplitude * (1.0 + spec.nugget);

      if (!factored) {
        const ExactNodeCache& cache = exact[static_cast<size_t>(l)][static_cast<size_t>(p)];
        if (l == 0) {
          Mat q(1, x0.size());
          q.row(0) = x0.transpose();
          const Mat r = cross_correlation(spec, q, w_in);  // 1 x N
          mu[p] = (r * cache.alpha)(0);
          const double fit = (r * cache.llt.solve(r.transpose()))(0, 0);
          var[p] = clamp_variance(spec.amplitude * (1.0 + spec.nugget - fit), marginal,
                                  spec.amplitude * fit, diag);
        } else {
          Vec ivec(n);
          Mat jmat(n, n);
          for (Eigen::Index i = 0; i < n; ++i) {
            ivec[i] = xi_product(spec, mu_prev, var_prev, w_in, i);
            for (Eigen::Index j = i; j < n; ++j) {
              const double z = zeta_product(spec, mu_prev, var_prev, w_in, i, j);
              jmat(i, j) = z;
              jmat(j, i) = z;
            }
          }
          const double m = ivec.dot(cache.alpha);
          const double quad = cache.alpha.dot(jmat * cache.alpha);
          const double tr = cache.rinv.cwiseProduct(jmat).sum();
          mu[p] = m;
          var[p] = clamp_variance(quad - m * m + spec.amplitude * (1.0 + spec.nugget - tr),
                                  marginal, quad + m * m, diag);
        }
      } else {
        const NeighborSearch& tree = trees[static_cast<size_t>(l)][static_cast<size_t>(p)];
        const Vec query = l == 0 ? Vec(x0.cwiseQuotient(spec.lengthscales))
                                 : Vec(mu_prev.cwiseQuotient(spec.lengthscales));
        const std::vector<int> ids =
            tree.nearest(query, std::min(model->vecchia.m_pred, n));
        const int m_c = static_cast<int>(ids.size());
        Mat sub(m_c, w_in.cols());
        Vec w_c(m_c);
        const Vec& w_node = state.node(l, p);
        for (int i = 0; i < m_c; ++i) {
          sub.row(i) = w_in.row(ids[static_cast<size_t>(i)]);
          w_c[i] = w_node[ids[static_cast<size_t>(i)]];
        }
        Eigen::LLT<Mat> llt(corr_matrix(spec, sub));
        if (llt.info() != Eigen::Success)
          throw NumericalError("conditioning-set correlation matrix is not positive definite");
        const Vec alpha = llt.solve(w_c);
        if (l == 0) {
          Mat q(1, x0.size());
          q.row(0) = x0.transpose();
          const Mat r = cross_correlation(spec, q, sub);  // 1 x m_c
          mu[p] = (r * alpha)(0);
          const double fit = (r * llt.solve(r.transpose()))(0, 0);
          var[p] = clamp_variance(spec.amplitude * (1.0 + spec.nugget - fit), marginal,
                                  spec.amplitude * fit, diag);
        } else {
          Vec ivec(m_c);
          Mat jmat(m_c, m_c);
          for (Eigen::Index i = 0; i < m_c; ++i) {
            ivec[i] = xi_product(spec, mu_prev, var_prev, sub, i);
            for (Eigen::Index j = i; j < m_c; ++j) {
              const double z = zeta_product(spec, mu_prev, var_prev, sub, i, j);
              jmat(i, j) = z;
              jmat(j, i) = z;
            }
          }
          const double m = ivec.dot(alpha);
          const double quad = alpha.dot(jmat * alpha);
          const double tr = llt.solve(jmat).trace();
          mu[p] = m;
          var[p] = clamp_variance(quad - m * m + spec.amplitude * (1.0 + spec.nugget - tr),
                                  marginal, quad + m * m, diag);
        }
      }
    }
    mu_prev = std::move(mu);
    var_prev = std::move(var);
  }
  return NodeMoments{std::move(mu_prev), std::move(var_prev)};
}

NodeMoments LgpPredictor::forward(const Vec& x0_scaled, PredictDiagnostics* diag) const {
  return impl_->forward(x0_scaled, diag);
}

NodeMoments lgp_forward(const GdgpModel& model, const Vec& x0_scaled, int imputation,
                        PredictDiagnostics* diag) {
  return LgpPredictor(model, imputation).forward(x0_scaled, diag);
}

Prediction predict_moments(const GdgpModel& model, const Mat& x0_raw, PredictDiagnostics* diag) {
  model.validate();
  const LikelihoodSpec& lik = model.arch.likelihood;
  if (lik.id == LikelihoodId::Categorical)
    throw std::invalid_argument(
        "the categorical likelihood has no closed-form predictive moments; use predict_samples");
  const Mat xs = model.scaling.scale_inputs(x0_raw);
  const int n0 = static_cast<int>(xs.rows());
  const int imputations = static_cast<int>(model.imputations.size());

  Vec sum_mean = Vec::Zero(n0), sum_second = Vec::Zero(n0);
  for (int k = 0; k < imputations; ++k) {
    const LgpPredictor predictor(model, k);
    Vec mu_k(n0), var_k(n0);
    std::vector<long long> clamps(static_cast<size_t>(n0), 0);
    parallel_for(n0, [&](std::ptrdiff_t i) {
      PredictDiagnostics local;
      const NodeMoments nm = predictor.forward(xs.row(i).transpose(), &local);
      const auto moments = predictive_moments(lik, nm.mean, nm.var);
      mu_k[i] = moments->first;
      var_k[i] = moments->second;
      clamps[static_cast<size_t>(i)] = local.variance_clamps;
    });
    // Fixed-order reduction keeps the aggregation bitwise stable.
    for (int i = 0; i < n0; ++i) {
      sum_mean[i] += mu_k[i];
      sum_second[i] += mu_k[i] * mu_k[i] + var_k[i];
      if (diag) diag->variance_clamps += clamps[static_cast<size_t>(i)];
    }
  }

  Prediction out;
  out.mean = Vec(n0);
  out.variance = Vec(n0);
  const double scale = model.scaling.y_scale;
  for (int i = 0; i < n0; ++i) {
    const double m = sum_mean[i] / imputations;
    double v = sum_second[i] / imputations - m * m;
    v = clamp_variance(v, 1.0, sum_second[i] / imputations + m * m, diag);
    out.mean[i] = model.scaling.unscale_output(m);
    out.variance[i] = scale * scale * v;
  }
  return out;
}

SampleSet predict_samples(const GdgpModel& model, const Mat& x0_raw, const SampleOptions& opts,
                          PredictDiagnostics* diag) {
  model.validate();
  if (opts.draws_per_imputation < 1)
    throw std::invalid_argument("draws_per_imputation must be >= 1");
  const LikelihoodSpec& lik = model.arch.likelihood;
  const bool categorical = lik.id == LikelihoodId::Categorical;
  const Mat xs = model.scaling.scale_inputs(x0_raw);
  const int n0 = static_cast<int>(xs.rows());
  const int imputations = static_cast<int>(model.imputations.size());
  const int draws = opts.draws_per_imputation;

  SampleSet out;
  if (categorical)
    out.class_probs = Mat::Zero(n0, lik.classes);
  else
    out.draws = Mat(static_cast<Eigen::Index>(imputations) * draws, n0);

  for (int k = 0; k < imputations; ++k) {
    const LgpPredictor predictor(model, k);
    std::vector<long long> clamps(static_cast<size_t>(n0), 0);
    parallel_for(n0, [&](std::ptrdiff_t i) {
      PredictDiagnostics local;
      const NodeMoments nm = predictor.forward(xs.row(i).transpose(), &local);
      clamps[static_cast<size_t>(i)] = local.variance_clamps;
      const Vec sd = nm.var.cwiseMax(0.0).cwiseSqrt();
      Rng rng = Rng::stream(opts.seed, {kStreamComposition, static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(i)});
      Vec f0(nm.mean.size());
      for (int j = 0; j < draws; ++j) {
        for (Eigen::Index q = 0; q < f0.size(); ++q)
          f0[q] = nm.mean[q] + sd[q] * rng.normal();
        const Vec phi = inv_link(lik, f0);
        const double y = sample_y(lik, phi, rng);
        if (categorical)
          out.class_probs(i, static_cast<Eigen::Index>(y) - 1) += 1.0;
        else
          out.draws(static_cast<Eigen::Index>(k) * draws + j, i) =
              model.scaling.unscale_output(y);
      }
    });
    if (diag)
      for (long long c : clamps) diag->variance_clamps += c;
  }
  if (categorical) out.class_probs /= static_cast<double>(imputations) * draws;
  return out;
}

}  // namespace gdgp
