#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdgp/rng.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

enum class LikelihoodId {
  HeteroGaussian,
  Poisson,
  Exponential,
  Gamma,
  NegBinomial,
  Zip,
  Zinb,
  Categorical,
};

enum class LinkId { Identity, Log, Logit, Softmax };

// Parametric data layer fed by the final GP layer: Q latent functions mapped
// through per-parameter links. Parameterizations are mean/dispersion form:
//   hetgauss (mu, sigma^2), gamma/negbin (mu, sigma), zip (lambda, pi),
//   zinb (mu, sigma, pi), categorical C latents with softmax.
struct LikelihoodSpec {
  LikelihoodId id = LikelihoodId::HeteroGaussian;
  int classes = 0;  // categorical only

  int param_count() const;          // Q
  std::vector<LinkId> links() const;
  std::string name() const;
  // Accepts the CLI id strings: hetgauss, poisson, exponential, gamma,
  // negbin, zip, zinb, categorical.
  static LikelihoodSpec from_name(const std::string& name, int classes = 0);
  void validate() const;
  bool discrete() const;
};

// f -> phi. Exponent arguments are clamped to +-700, so log links saturate
// instead of overflowing; softmax is max-shifted and sums to 1 exactly.
Vec inv_link(const LikelihoodSpec& spec, Eigen::Ref<const Vec> f);

// Right inverse of inv_link on valid parameter domains (softmax uses log p).
Vec link(const LikelihoodSpec& spec, Eigen::Ref<const Vec> phi);

// log p(y | phi). Throws std::invalid_argument when y is outside the support.
double log_density(const LikelihoodSpec& spec, double y, Eigen::Ref<const Vec> phi);

// Predictive mean/variance of Y given independent latent Gaussians
// f_q ~ N(mu[q], var[q]) pushed through the likelihood; closed forms per
// family. Returns nullopt for categorical (sample-based path only).
std::optional<std::pair<double, double>> predictive_moments(
    const LikelihoodSpec& spec, Eigen::Ref<const Vec> mu, Eigen::Ref<const Vec> var);

// E[logit^{-1}(X)], X ~ N(mu, var), MacKay's plug-in approximation:
// logit^{-1}(mu / sqrt(1 + pi * var / 8)).
double mackay_probability(double mu, double var);

// One draw from p(y | phi). Categorical returns the 1-based class label.
double sample_y(const LikelihoodSpec& spec, Eigen::Ref<const Vec> phi, Rng& rng);

}  // namespace gdgp
