#include "gdgp/optim.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace gdgp {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 50;

double logistic(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

LbfgsResult minimize_box(const std::function<double(const Vec&, Vec&)>& f, const Vec& x0,
                         const Vec& lower, const Vec& upper, const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bound dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (!(lower[i] < upper[i])) throw std::invalid_argument("lower bound must be below upper");

  const Vec width = upper - lower;
  auto to_box = [&](const Vec& t) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = lower[i] + width[i] * logistic(t[i]);
    return x;
  };
  // dF/dt = df/dx * width * s(1-s)
  auto chain = [&](const Vec& t, const Vec& gx) {
    Vec gt(n);
    for (int i = 0; i < n; ++i) {
      const double s = logistic(t[i]);
      gt[i] = gx[i] * width[i] * s * (1.0 - s);
    }
    return gt;
  };

  Vec t(n);
  for (int i = 0; i < n; ++i) {
    // Start strictly inside the box.
    const double frac = std::min(std::max((x0[i] - lower[i]) / width[i], 1e-6), 1.0 - 1e-6);
    t[i] = std::log(frac / (1.0 - frac));
  }

  Vec gx(n);
  Vec x = to_box(t);
  double value = f(x, gx);
  if (!std::isfinite(value)) throw NumericalError("objective not finite at start point");
  Vec gt = chain(t, gx);

  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y) history
  LbfgsResult res;
  res.x = x;
  res.value = value;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (gt.cwiseAbs().maxCoeff() < opts.grad_tol * std::max(1.0, std::fabs(value))) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Vec q = gt;
    std::vector<double> alpha(pairs.size());
    for (int j = static_cast<int>(pairs.size()) - 1; j >= 0; --j) {
      const auto& [s, y] = pairs[j];
      alpha[j] = s.dot(q) / y.dot(s);
      q -= alpha[j] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (size_t j = 0; j < pairs.size(); ++j) {
      const auto& [s, y] = pairs[j];
      q += (alpha[j] - y.dot(q) / y.dot(s)) * s;
    }
    Vec dir = -q;
    if (dir.dot(gt) >= 0.0) dir = -gt;  // keep descent

    // Backtracking line search with the Armijo condition.
    const double slope = dir.dot(gt);
    double step = 1.0;
    bool accepted = false;
    Vec t_new, gx_new;
    double v_new = 0.0;
    for (int h = 0; h < kMaxHalvings; ++h) {
      t_new = t + step * dir;
      Vec x_new = to_box(t_new);
      Vec g_try(n);
      const double v_try = f(x_new, g_try);
      if (std::isfinite(v_try) && v_try <= value + kArmijo * step * slope) {
        v_new = v_try;
        gx_new = g_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vec s_vec = t_new - t;
    const Vec g_new = chain(t_new, gx_new);
    const Vec y_vec = g_new - gt;
    if (s_vec.dot(y_vec) > 1e-10 * s_vec.norm() * y_vec.norm()) {
      pairs.emplace_back(s_vec, y_vec);
      if (static_cast<int>(pairs.size()) > opts.history) pairs.pop_front();
    }
    t = t_new;
    value = v_new;
    gt = g_new;
    res.iterations = iter + 1;
    res.x = to_box(t);
    res.value = value;
    if (s_vec.norm() < opts.step_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

VecchiaLoglik gp_loglik_dense(const KernelSpec& spec, const Vec& w, const Mat& inputs,
                              bool want_grad) {
  spec.validate();
  const int n = static_cast<int>(w.size());
  if (inputs.rows() != n) throw std::invalid_argument("input/latent length mismatch");
  if (spec.dim() != inputs.cols()) throw std::invalid_argument("kernel dimension mismatch");
  const double sigma2 = spec.amplitude;
  const double eta = spec.nugget;

  const Mat R = corr_matrix(spec, inputs);
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalError("correlation matrix is not positive definite");
  const Vec alpha = llt.solve(w);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = w.dot(alpha);

  VecchiaLoglik out;
  out.value = -0.5 * n * (kLogTwoPi + std::log(sigma2)) - 0.5 * logdet - quad / (2.0 * sigma2);
  out.sigma2_hat = quad / n;
  out.grad_loggamma = Vec::Zero(spec.dim());
  if (!want_grad) return out;

  const Mat rinv = llt.solve(Mat::Identity(n, n));
  for (int d = 0; d < spec.dim(); ++d) {
    const Mat dR = corr_matrix_dloggamma(spec, inputs, d);
    out.grad_loggamma[d] =
        -0.5 * rinv.cwiseProduct(dR).sum() + alpha.dot(dR * alpha) / (2.0 * sigma2);
  }
  out.grad_logeta = -0.5 * eta * rinv.trace() + eta * alpha.squaredNorm() / (2.0 * sigma2);
  out.grad_logsigma2 = -0.5 * n + quad / (2.0 * sigma2);
  return out;
}

}  // namespace gdgp
