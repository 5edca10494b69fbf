#pragma once

#include <functional>

#include "gdgp/kernel.hpp"
#include "gdgp/types.hpp"
#include "gdgp/vecchia.hpp"

namespace gdgp {

struct LbfgsOptions {
  int max_iters = 100;
  int history = 8;
  double grad_tol = 1e-6;
  double step_tol = 1e-12;
};

struct LbfgsResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes f over the box [lower, upper].  The box is handled by a logistic
// reparameterization, so a solution pressed against a bound simply saturates
// instead of failing.  f receives a point in the box and must fill the
// gradient in that same space; objective values never increase across
// iterations.
LbfgsResult minimize_box(const std::function<double(const Vec&, Vec&)>& f, const Vec& x0,
                         const Vec& lower, const Vec& upper, const LbfgsOptions& opts = {});

// Dense log-likelihood of w ~ N(0, sigma^2 (K + eta I)) with the same
// log-parameter gradients and profile amplitude as the Vecchia form.
VecchiaLoglik gp_loglik_dense(const KernelSpec& spec, const Vec& w, const Mat& inputs,
                              bool want_grad = true);

}  // namespace gdgp
