#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdgp/likelihood.hpp"
#include "gdgp/rng.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

// Stochastic test simulators and the evaluation metrics used by the
// benchmark experiments and the validate subcommand. All simulators draw
// exclusively from the caller's Rng, so replications parallelize with
// per-replicate child streams and stay bit-reproducible.

// === Simulators ===

// Heteroskedastic step function on [0,1]: one draw of y ~ N(mu(x), sigma2(x))
//   mu(x)     = -1 for x < 0.5, +1 for x >= 0.5,
//   sigma2(x) = [sin(4x - 2) + 10 exp{-1200 (2x - 1)^2} + 1] / 600,
// a flat mean with a jump at 0.5 and a sharp noise spike around it.
// Throws std::invalid_argument outside [0,1].
double step1d(double x, Rng& rng);
double step1d_true_mean(double x);
double step1d_true_logvar(double x);

// Stochastic SIR epidemic over the unit 5-cube u = (s0, i0, beta, gamma,
// c_ext), tau-leaped in steps of 0.05 over a population of 1000 up to time
// 100; returns the cumulative attack proportion (initially plus ever
// infected, over the population) in [0,1]. Inputs map to:
//   initial infected   I0 = 1 + round(19 i0)            in [1, 20]
//   initial suscept.   S0 = round((0.5 + 0.5 s0)(1000 - I0))  (rest immune)
//   transmission rate  0.1 + 0.9 beta                   per unit time
//   recovery rate      0.05 + 0.45 gamma                per unit time
//   importation        rate 0.5 (c_ext - 0.5) when c_ext >= 0.5, else the
//                      population is isolated and no importation occurs.
// Throws std::invalid_argument outside the cube.
double sir5d(Eigen::Ref<const Vec> u, Rng& rng);

// Rosenzweig-MacArthur predator-prey model, simulated with the exact
// Gillespie algorithm from R0 = 50 prey and F0 = 5 predators; returns the
// prey count at time 100 (0 once extinction, which is absorbing, occurs).
// theta = (d_F, d_R, alpha, w) with boxes [0.1,2.0], [0.1,1.8], [0.01,0.02],
// [0,0.04]. Reactions and propensities (b = 1.0, K = 200):
//   prey birth       b R (1 - R/K)            R += 1   (0 when R >= K)
//   prey death       d_R R                    R -= 1
//   predation        alpha R F / (1 + alpha w R)   R -= 1
//   predator birth   0.5 x predation rate     F += 1   (conversion 0.5)
//   predator death   d_F F                    F -= 1
// Throws std::invalid_argument outside the boxes.
long predprey4d(Eigen::Ref<const Vec> theta, Rng& rng);

// Input box, horizon, and seed of one named simulator; evaluate() checks the
// box and dispatches to the functions above (predprey4d cast to double).
struct SimulatorSpec {
  std::string id;        // step1d | sir5d | predprey4d
  Mat bounds;            // dim x 2, lower and upper input bounds
  double horizon = 0.0;  // output time (0 for the direct-draw step function)
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(bounds.rows()); }
  // Throws std::invalid_argument for an unknown id, listing the valid ones.
  static SimulatorSpec from_name(const std::string& id);
  double evaluate(Eigen::Ref<const Vec> x, Rng& rng) const;
};

// === Designs ===

// Latin hypercube on [0,1]^dim: each dimension is an independent random
// permutation of n strata with a uniform draw inside each stratum.
Mat latin_hypercube(int n, int dim, Rng& rng);

// Uniformly spaced grid on [0,1]^dim including the endpoints; n must be a
// perfect dim-th power (k points per axis, k^dim rows). A single point per
// axis sits at 0.5. Throws std::invalid_argument otherwise.
Mat uniform_grid(int n, int dim);

// === Metrics ===
// Vector arguments must have matching lengths and positive variances;
// violations throw std::invalid_argument. Reductions run in index order.

// Root mean squared error of pred, normalized by the range of truth.
// A zero truth range throws std::invalid_argument.
double nrmse(Eigen::Ref<const Vec> truth, Eigen::Ref<const Vec> pred);

// Closed-form continuous ranked probability score of N(mean, var) against an
// observation (lower is better, 0 only for a point mass on y):
//   sigma [ z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi) ],  z = (y - mean)/sigma.
double crps_gaussian(double y, double mean, double var);

// Mean Gaussian CRPS of the predictions, normalized by the range of truth.
double ncrps(Eigen::Ref<const Vec> truth, Eigen::Ref<const Vec> means,
             Eigen::Ref<const Vec> vars);

// Gaussian predictive scoring rule (higher is better):
//   -(1/N) sum_i [ (y_i - mean_i)^2 / var_i + log var_i ].
// Pointwise it is maximized in var_i at var_i = (y_i - mean_i)^2.
double score(Eigen::Ref<const Vec> y, Eigen::Ref<const Vec> means,
             Eigen::Ref<const Vec> vars);

// Class-balanced accuracy in percent: classes are weighted equally, each
// contributing the fraction of its members whose argmax predicted
// probability (ties to the lowest class) is correct. labels are 1-based,
// probs rows lie on the simplex, and every class 1..probs.cols() must occur
// in labels.
double accuracy(const std::vector<int>& labels, Eigen::Ref<const Mat> probs);

// Class-balanced logloss: mean over classes of the within-class mean
// negative log predicted probability of the true class. Probabilities are
// floored at 1e-15 so empirical-frequency zeros stay finite. Always >= 0.
double logloss(const std::vector<int>& labels, Eigen::Ref<const Mat> probs);

// Mean negative log-likelihood of y under per-observation likelihood
// parameters (rows of params, natural parameter space).
double nll(const LikelihoodSpec& lik, Eigen::Ref<const Vec> y,
           Eigen::Ref<const Mat> params);

// === Baseline for the count benchmarks ===

// Poisson log-linear regression (intercept plus linear terms) fit by
// iteratively reweighted least squares; returns the (1 + cols) coefficient
// vector. Linear predictors are clamped to +-30 for stability.
Vec poisson_glm_fit(Eigen::Ref<const Mat> X, Eigen::Ref<const Vec> y,
                    int max_iter = 100, double tol = 1e-10);

// Fitted means exp(beta[0] + X beta[1..]) for coefficients from the fit.
Vec poisson_glm_mean(Eigen::Ref<const Mat> X, Eigen::Ref<const Vec> beta);

}  // namespace gdgp
