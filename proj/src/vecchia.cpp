#include "gdgp/vecchia.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gdgp/kdtree.hpp"
#include "gdgp/parallel.hpp"
#include "gdgp/rng.hpp"

namespace gdgp {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kRetryJitter = 1e-10;
constexpr int kBatch = 256;  // summands accumulated per task

std::vector<int> random_ordering(int n, std::uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int k = n - 1; k > 0; --k)
    std::swap(order[k], order[rng.uniform_int(static_cast<std::uint64_t>(k) + 1)]);
  return order;
}

Mat scale_by_lengthscale(const Mat& inputs, const Vec& lengthscales) {
  if (inputs.cols() != lengthscales.size())
    throw std::invalid_argument("lengthscale count must match input dimension");
  if (lengthscales.minCoeff() <= 0.0) throw std::invalid_argument("lengthscales must be positive");
  return inputs.array().rowwise() / lengthscales.transpose().array();
}

// One conditional Gaussian summand: variance factor c = 1 + eta - r^T R^-1 r
// on the correlation scale, weights b = R^-1 r, residual e = w_i - b^T w_g,
// and log-parameter derivatives of c and e.
struct Conditional {
  double c = 0.0;
  double e = 0.0;
  Vec b;
  Vec dc_dg, de_dg;
  double dc_de = 0.0, de_de = 0.0;
};

Conditional conditional_at(const KernelSpec& spec, const Mat& inputs,
                           const std::vector<int>& set, int i, const Vec* w,
                           bool want_grad, double extra_jitter) {
  const int m = static_cast<int>(set.size());
  const int dims = spec.dim();
  const double eta = spec.nugget;
  Conditional out;
  if (want_grad) {
    out.dc_dg = Vec::Zero(dims);
    out.de_dg = Vec::Zero(dims);
  }
  if (m == 0) {
    out.c = 1.0 + eta + extra_jitter;
    if (w) out.e = (*w)[i];
    out.dc_de = eta;
    return out;
  }

  std::vector<Mat> per_dim;
  if (want_grad) per_dim.assign(dims, Mat::Ones(m, m));
  Mat K = Mat::Ones(m, m);
  Vec r = Vec::Ones(m);
  for (int d = 0; d < dims; ++d) {
    const double g = spec.lengthscales[d];
    for (int a = 0; a < m; ++a) {
      r[a] *= kernel1d(spec.family, inputs(i, d), inputs(set[a], d), g);
      for (int bcol = a + 1; bcol < m; ++bcol) {
        const double k1 =
            kernel1d(spec.family, inputs(set[a], d), inputs(set[bcol], d), g);
        K(a, bcol) *= k1;
        K(bcol, a) = K(a, bcol);
        if (want_grad) {
          per_dim[d](a, bcol) = k1;
          per_dim[d](bcol, a) = k1;
        }
      }
    }
  }
  Mat R = K;
  R.diagonal().array() += eta + extra_jitter;
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalError("conditioning block is not positive definite");
  out.b = llt.solve(r);
  out.c = 1.0 + eta + extra_jitter - r.dot(out.b);

  Vec wg, u;
  if (w) {
    wg.resize(m);
    for (int a = 0; a < m; ++a) wg[a] = (*w)[set[a]];
    out.e = (*w)[i] - out.b.dot(wg);
    if (want_grad) u = llt.solve(wg);
  }
  if (want_grad) {
    Mat dR(m, m);
    Vec dr(m);
    for (int d = 0; d < dims; ++d) {
      const double g = spec.lengthscales[d];
      for (int a = 0; a < m; ++a) {
        const double kd = kernel1d(spec.family, inputs(i, d), inputs(set[a], d), g);
        dr[a] = kernel1d_dloggamma(spec.family, inputs(i, d), inputs(set[a], d), g) * r[a] / kd;
        dR(a, a) = 0.0;
        for (int bcol = a + 1; bcol < m; ++bcol) {
          const double v = kernel1d_dloggamma(spec.family, inputs(set[a], d),
                                              inputs(set[bcol], d), g) *
                           K(a, bcol) / per_dim[d](a, bcol);
          dR(a, bcol) = v;
          dR(bcol, a) = v;
        }
      }
      const Vec dRb = dR * out.b;
      out.dc_dg[d] = -2.0 * dr.dot(out.b) + out.b.dot(dRb);
      if (w) out.de_dg[d] = -dr.dot(u) + dRb.dot(u);
    }
    out.dc_de = eta * (1.0 + out.b.squaredNorm());
    if (w) out.de_de = eta * out.b.dot(u);
  }
  return out;
}

// A failed factorization is structural (non-PD block) and propagates; a
// roundoff-negative Schur complement gets one jittered retry, then fails.
Conditional conditional_with_retry(const KernelSpec& spec, const Mat& inputs,
                                   const std::vector<int>& set, int i, const Vec* w,
                                   bool want_grad) {
  Conditional c = conditional_at(spec, inputs, set, i, w, want_grad, 0.0);
  if (c.c > 0.0) return c;
  c = conditional_at(spec, inputs, set, i, w, want_grad, kRetryJitter);
  if (!(c.c > 0.0))
    throw NumericalError("conditional variance not positive at point " + std::to_string(i));
  return c;
}

}  // namespace

void VecchiaPlan::validate() const {
  const int n_pts = n();
  if (static_cast<int>(sets.size()) != n_pts)
    throw std::invalid_argument("plan sets/ordering size mismatch");
  std::vector<int> position(n_pts, -1);
  for (int k = 0; k < n_pts; ++k) {
    const int i = ordering[k];
    if (i < 0 || i >= n_pts || position[i] >= 0)
      throw std::invalid_argument("ordering is not a permutation");
    position[i] = k;
  }
  for (int k = 0; k < n_pts; ++k)
    for (int j : sets[k])
      if (position[j] >= k) throw std::invalid_argument("conditioning set must precede its point");
}

VecchiaPlan make_plan(const Mat& inputs, const Vec& lengthscales, int m_train,
                      std::uint64_t seed) {
  if (m_train < 1) throw std::invalid_argument("conditioning size must be at least 1");
  const int n = static_cast<int>(inputs.rows());
  const Mat scaled = scale_by_lengthscale(inputs, lengthscales);

  VecchiaPlan plan;
  plan.m = m_train;
  plan.exact = m_train >= n - 1;
  plan.ordering = random_ordering(n, seed);
  plan.sets.resize(n);
  NeighborSearch tree(static_cast<int>(inputs.cols()));
  for (int k = 0; k < n; ++k) {
    const Vec q = scaled.row(plan.ordering[k]).transpose();
    for (int id : tree.nearest(q, std::min(m_train, k)))
      plan.sets[k].push_back(plan.ordering[id]);
    tree.insert(q);
  }
  return plan;
}

VecchiaPlan exact_plan(int n) {
  VecchiaPlan plan;
  plan.exact = true;
  plan.m = n - 1;
  plan.ordering.resize(n);
  plan.sets.resize(n);
  for (int k = 0; k < n; ++k) {
    plan.ordering[k] = k;
    plan.sets[k].assign(plan.ordering.begin(), plan.ordering.begin() + k);
  }
  return plan;
}

VecchiaLoglik vecchia_loglik(const KernelSpec& spec, const Vec& w, const Mat& inputs,
                             const VecchiaPlan& plan, bool want_grad) {
  spec.validate();
  const int n = plan.n();
  if (w.size() != n || inputs.rows() != n)
    throw std::invalid_argument("plan built for a different point count");
  if (spec.dim() != inputs.cols()) throw std::invalid_argument("kernel dimension mismatch");
  const int dims = spec.dim();
  const double sigma2 = spec.amplitude;

  struct Partial {
    double logc = 0.0, e2c = 0.0;
    Vec dcc, mix;  // sum dc/c and sum (2e de/c - e^2 dc/c^2) per lengthscale
    double dcc_eta = 0.0, mix_eta = 0.0;
  };
  const int batches = (n + kBatch - 1) / kBatch;
  std::vector<Partial> parts(batches);
  parallel_for(batches, [&](ptrdiff_t bi) {
    Partial& p = parts[bi];
    p.dcc = Vec::Zero(dims);
    p.mix = Vec::Zero(dims);
    const int lo = static_cast<int>(bi) * kBatch;
    const int hi = std::min(n, lo + kBatch);
    for (int k = lo; k < hi; ++k) {
      const Conditional cond = conditional_with_retry(spec, inputs, plan.sets[k],
                                                      plan.ordering[k], &w, want_grad);
      p.logc += std::log(cond.c);
      p.e2c += cond.e * cond.e / cond.c;
      if (!want_grad) continue;
      const double c2 = cond.c * cond.c;
      p.dcc += cond.dc_dg / cond.c;
      p.mix += (2.0 * cond.e * cond.de_dg / cond.c).eval() -
               (cond.e * cond.e / c2) * cond.dc_dg;
      p.dcc_eta += cond.dc_de / cond.c;
      p.mix_eta += 2.0 * cond.e * cond.de_de / cond.c - cond.e * cond.e * cond.dc_de / c2;
    }
  });

  double s_logc = 0.0, s_e2c = 0.0;
  Vec dcc = Vec::Zero(dims), mix = Vec::Zero(dims);
  double dcc_eta = 0.0, mix_eta = 0.0;
  for (const Partial& p : parts) {
    s_logc += p.logc;
    s_e2c += p.e2c;
    if (want_grad) {
      dcc += p.dcc;
      mix += p.mix;
      dcc_eta += p.dcc_eta;
      mix_eta += p.mix_eta;
    }
  }

  VecchiaLoglik out;
  out.value = -0.5 * n * (kLogTwoPi + std::log(sigma2)) - 0.5 * s_logc -
              s_e2c / (2.0 * sigma2);
  out.sigma2_hat = s_e2c / n;
  if (want_grad) {
    out.grad_loggamma = -0.5 * dcc - mix / (2.0 * sigma2);
    out.grad_logeta = -0.5 * dcc_eta - mix_eta / (2.0 * sigma2);
    out.grad_logsigma2 = -0.5 * n + s_e2c / (2.0 * sigma2);
  } else {
    out.grad_loggamma = Vec::Zero(dims);
  }
  return out;
}

SparseU build_U(const KernelSpec& spec, const Mat& inputs, const VecchiaPlan& plan) {
  spec.validate();
  const int n = plan.n();
  if (inputs.rows() != n) throw std::invalid_argument("plan built for a different point count");
  if (spec.dim() != inputs.cols()) throw std::invalid_argument("kernel dimension mismatch");

  SparseU u;
  u.order = plan.ordering;
  u.diag.resize(n);
  u.off.resize(n);
  std::vector<int> position(n);
  for (int k = 0; k < n; ++k) position[plan.ordering[k]] = k;

  parallel_for(n, [&](ptrdiff_t k) {
    const std::vector<int>& set = plan.sets[k];
    const Conditional cond =
        conditional_with_retry(spec, inputs, set, plan.ordering[k], nullptr, false);
    const double d = spec.amplitude * cond.c;
    const double inv_sqrt = 1.0 / std::sqrt(d);
    u.diag[k] = inv_sqrt;
    u.off[k].reserve(set.size());
    for (size_t a = 0; a < set.size(); ++a)
      u.off[k].emplace_back(position[set[a]], -cond.b[a] * inv_sqrt);
  });
  return u;
}

Vec SparseU::multiply_transposed(const Vec& w) const {
  if (w.size() != n()) throw std::invalid_argument("vector length mismatch");
  Vec out(n());
  for (int k = 0; k < n(); ++k) {
    double acc = diag[k] * w[order[k]];
    for (const auto& [j, v] : off[k]) acc += v * w[order[j]];
    out[k] = acc;
  }
  return out;
}

Vec sample_via_U(const SparseU& u, const Vec& z) {
  const int n = u.n();
  if (z.size() != n) throw std::invalid_argument("vector length mismatch");
  Vec x(n), w(n);
  for (int k = 0; k < n; ++k) {
    if (u.diag[k] <= 0.0) throw NumericalError("factor diagonal must be positive");
    double acc = z[k];
    for (const auto& [j, v] : u.off[k]) acc -= v * x[j];
    x[k] = acc / u.diag[k];
    w[u.order[k]] = x[k];
  }
  return w;
}

double loglik_via_U(const SparseU& u, const Vec& w) {
  const Vec utw = u.multiply_transposed(w);
  double logdiag = 0.0;
  for (int k = 0; k < u.n(); ++k) logdiag += std::log(u.diag[k]);
  return -0.5 * u.n() * kLogTwoPi + logdiag - 0.5 * utw.squaredNorm();
}

JointFactor build_joint_U(const KernelSpec& spec, const Mat& inputs, const Vec& noise,
                          int m, std::uint64_t seed) {
  spec.validate();
  const int n = static_cast<int>(inputs.rows());
  const int dims = static_cast<int>(inputs.cols());
  if (spec.dim() != dims) throw std::invalid_argument("kernel dimension mismatch");
  if (noise.size() != n) throw std::invalid_argument("noise length mismatch");
  if (noise.minCoeff() <= 0.0) throw std::invalid_argument("noise variances must be positive");
  if (m < 1) throw std::invalid_argument("conditioning size must be at least 1");
  const double sigma2 = spec.amplitude;
  const double eta = spec.nugget;

  JointFactor jf;
  jf.order = random_ordering(n, seed);
  jf.diag.resize(n);
  jf.y_off.resize(n);
  jf.f_off.resize(n);
  std::vector<int> fpos(n);
  for (int k = 0; k < n; ++k) fpos[jf.order[k]] = k;

  const Mat scaled = scale_by_lengthscale(inputs, spec.lengthscales);
  NeighborSearch tree(dims);
  for (int k = 0; k < n; ++k) tree.insert(scaled.row(jf.order[k]).transpose());

  // Joint variable: a location plus which block it lives in.
  struct Var {
    int loc;
    bool is_f;
  };
  parallel_for(n, [&](ptrdiff_t k) {
    const int i = jf.order[k];
    const Vec q = scaled.row(i).transpose();
    // Every location offers its response; earlier-ordered locations also
    // offer their latent mean, preferred at a tied distance.
    std::vector<Var> set;
    for (int p : tree.nearest(q, std::min(n, m))) {
      const int loc = jf.order[p];
      if (loc != i && p < static_cast<int>(k)) {
        set.push_back({loc, true});
        if (static_cast<int>(set.size()) == m) break;
      }
      set.push_back({loc, false});
      if (static_cast<int>(set.size()) == m) break;
    }

    const int ms = static_cast<int>(set.size());
    Mat cov(ms, ms);
    Vec r(ms);
    for (int a = 0; a < ms; ++a) {
      const double k_cross =
          correlation(spec, inputs.row(i).transpose(), inputs.row(set[a].loc).transpose());
      r[a] = sigma2 * (k_cross + (set[a].loc == i ? eta : 0.0));
      for (int b = a; b < ms; ++b) {
        const double kv = correlation(spec, inputs.row(set[a].loc).transpose(),
                                      inputs.row(set[b].loc).transpose());
        double cv = sigma2 * (kv + (set[a].loc == set[b].loc ? eta : 0.0));
        if (a == b && !set[a].is_f) cv += noise[set[a].loc];
        cov(a, b) = cv;
        cov(b, a) = cv;
      }
    }

    Vec b_vec;
    double d = 0.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Mat c2 = cov;
      if (attempt == 1) c2.diagonal().array() += kRetryJitter * sigma2;
      Eigen::LLT<Mat> llt(c2);
      if (llt.info() != Eigen::Success)
        throw NumericalError("joint conditioning block is not positive definite at location " +
                             std::to_string(i));
      b_vec = llt.solve(r);
      d = sigma2 * (1.0 + eta) - r.dot(b_vec);
      if (d > 0.0) break;
    }
    if (!(d > 0.0))
      throw NumericalError("joint conditional variance not positive at location " +
                           std::to_string(i));
    const double inv_sqrt = 1.0 / std::sqrt(d);
    jf.diag[k] = inv_sqrt;
    for (int a = 0; a < ms; ++a) {
      const double v = -b_vec[a] * inv_sqrt;
      if (set[a].is_f)
        jf.f_off[k].emplace_back(fpos[set[a].loc], v);
      else
        jf.y_off[k].emplace_back(set[a].loc, v);
    }
  });
  return jf;
}

}  // namespace gdgp
