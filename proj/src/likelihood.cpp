#include "gdgp/likelihood.hpp"

#include <cmath>
#include <stdexcept>

namespace gdgp {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kExpClamp = 700.0;

double clamped_exp(double x) { return std::exp(std::min(std::max(x, -kExpClamp), kExpClamp)); }

double logistic(double x) {
  x = std::min(std::max(x, -kExpClamp), kExpClamp);
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// y must be a non-negative integer (count supports); returns the rounded value.
double check_count(double y, const char* who) {
  const double r = std::round(y);
  if (!(y >= 0.0) || std::fabs(y - r) > 1e-8)
    throw std::invalid_argument(std::string(who) + ": y must be a non-negative integer");
  return r;
}

double poisson_log_pmf(double y, double lambda) {
  return y * std::log(lambda) - lambda - std::lgamma(y + 1.0);
}

double negbin_log_pmf(double y, double mu, double sigma) {
  const double r = 1.0 / sigma;
  const double log1p_sm = std::log1p(sigma * mu);
  return std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) +
         y * (std::log(sigma * mu) - log1p_sm) - r * log1p_sm;
}

}  // namespace

int LikelihoodSpec::param_count() const {
  switch (id) {
    case LikelihoodId::Poisson:
    case LikelihoodId::Exponential:
      return 1;
    case LikelihoodId::HeteroGaussian:
    case LikelihoodId::Gamma:
    case LikelihoodId::NegBinomial:
    case LikelihoodId::Zip:
      return 2;
    case LikelihoodId::Zinb:
      return 3;
    case LikelihoodId::Categorical:
      return classes;
  }
  return 0;
}

std::vector<LinkId> LikelihoodSpec::links() const {
  switch (id) {
    case LikelihoodId::HeteroGaussian:
      return {LinkId::Identity, LinkId::Log};
    case LikelihoodId::Poisson:
    case LikelihoodId::Exponential:
      return {LinkId::Log};
    case LikelihoodId::Gamma:
    case LikelihoodId::NegBinomial:
      return {LinkId::Log, LinkId::Log};
    case LikelihoodId::Zip:
      return {LinkId::Log, LinkId::Logit};
    case LikelihoodId::Zinb:
      return {LinkId::Log, LinkId::Log, LinkId::Logit};
    case LikelihoodId::Categorical:
      return std::vector<LinkId>(classes, LinkId::Softmax);
  }
  return {};
}

std::string LikelihoodSpec::name() const {
  switch (id) {
    case LikelihoodId::HeteroGaussian: return "hetgauss";
    case LikelihoodId::Poisson: return "poisson";
    case LikelihoodId::Exponential: return "exponential";
    case LikelihoodId::Gamma: return "gamma";
    case LikelihoodId::NegBinomial: return "negbin";
    case LikelihoodId::Zip: return "zip";
    case LikelihoodId::Zinb: return "zinb";
    case LikelihoodId::Categorical: return "categorical";
  }
  return "?";
}

LikelihoodSpec LikelihoodSpec::from_name(const std::string& name, int classes) {
  LikelihoodSpec s;
  s.classes = classes;
  if (name == "hetgauss") s.id = LikelihoodId::HeteroGaussian;
  else if (name == "poisson") s.id = LikelihoodId::Poisson;
  else if (name == "exponential") s.id = LikelihoodId::Exponential;
  else if (name == "gamma") s.id = LikelihoodId::Gamma;
  else if (name == "negbin") s.id = LikelihoodId::NegBinomial;
  else if (name == "zip") s.id = LikelihoodId::Zip;
  else if (name == "zinb") s.id = LikelihoodId::Zinb;
  else if (name == "categorical") s.id = LikelihoodId::Categorical;
  else throw std::invalid_argument("unknown likelihood id: " + name);
  s.validate();
  return s;
}

void LikelihoodSpec::validate() const {
  if (id == LikelihoodId::Categorical && classes < 2)
    throw std::invalid_argument("categorical likelihood needs at least 2 classes");
  if (id != LikelihoodId::Categorical && classes != 0)
    throw std::invalid_argument("classes is only meaningful for the categorical likelihood");
}

bool LikelihoodSpec::discrete() const {
  switch (id) {
    case LikelihoodId::HeteroGaussian:
    case LikelihoodId::Exponential:
    case LikelihoodId::Gamma:
      return false;
    default:
      return true;
  }
}

Vec inv_link(const LikelihoodSpec& spec, Eigen::Ref<const Vec> f) {
  if (f.size() != spec.param_count())
    throw std::invalid_argument("inv_link: latent vector has wrong length");
  if (!f.allFinite()) throw std::invalid_argument("inv_link: non-finite latent values");
  if (spec.id == LikelihoodId::Categorical) {
    const double fmax = f.maxCoeff();
    Vec p = (f.array() - fmax).cwiseMax(-kExpClamp).exp();
    p /= p.sum();
    return p;
  }
  const auto links = spec.links();
  Vec phi(f.size());
  for (int q = 0; q < f.size(); ++q) {
    switch (links[q]) {
      case LinkId::Identity: phi[q] = f[q]; break;
      case LinkId::Log: phi[q] = clamped_exp(f[q]); break;
      case LinkId::Logit: phi[q] = logistic(f[q]); break;
      case LinkId::Softmax: throw std::logic_error("softmax outside categorical");
    }
  }
  return phi;
}

Vec link(const LikelihoodSpec& spec, Eigen::Ref<const Vec> phi) {
  if (phi.size() != spec.param_count())
    throw std::invalid_argument("link: parameter vector has wrong length");
  if (spec.id == LikelihoodId::Categorical) {
    if (!(phi.array() > 0.0).all())
      throw std::invalid_argument("link: class probabilities must be positive");
    return phi.array().log();
  }
  const auto links = spec.links();
  Vec f(phi.size());
  for (int q = 0; q < phi.size(); ++q) {
    switch (links[q]) {
      case LinkId::Identity:
        f[q] = phi[q];
        break;
      case LinkId::Log:
        if (!(phi[q] > 0.0)) throw std::invalid_argument("link: log-link parameter must be > 0");
        f[q] = std::log(phi[q]);
        break;
      case LinkId::Logit:
        if (!(phi[q] > 0.0 && phi[q] < 1.0))
          throw std::invalid_argument("link: logit-link parameter must be in (0,1)");
        f[q] = std::log(phi[q] / (1.0 - phi[q]));
        break;
      case LinkId::Softmax:
        throw std::logic_error("softmax outside categorical");
    }
  }
  return f;
}

double log_density(const LikelihoodSpec& spec, double y, Eigen::Ref<const Vec> phi) {
  if (phi.size() != spec.param_count())
    throw std::invalid_argument("log_density: parameter vector has wrong length");
  switch (spec.id) {
    case LikelihoodId::HeteroGaussian: {
      if (!std::isfinite(y)) throw std::invalid_argument("hetgauss: y must be finite");
      const double s2 = phi[1];
      if (!(s2 > 0.0)) throw std::invalid_argument("hetgauss: variance must be positive");
      const double d = y - phi[0];
      return -0.5 * (kLogTwoPi + std::log(s2)) - 0.5 * d * d / s2;
    }
    case LikelihoodId::Poisson:
      return poisson_log_pmf(check_count(y, "poisson"), phi[0]);
    case LikelihoodId::Exponential:
      if (!(y >= 0.0)) throw std::invalid_argument("exponential: y must be non-negative");
      return -std::log(phi[0]) - y / phi[0];
    case LikelihoodId::Gamma: {
      if (!(y > 0.0)) throw std::invalid_argument("gamma: y must be positive");
      const double shape = 1.0 / (phi[1] * phi[1]);
      const double scale = phi[0] * phi[1] * phi[1];
      return (shape - 1.0) * std::log(y) - y / scale - shape * std::log(scale) -
             std::lgamma(shape);
    }
    case LikelihoodId::NegBinomial:
      return negbin_log_pmf(check_count(y, "negbin"), phi[0], phi[1]);
    case LikelihoodId::Zip: {
      const double yc = check_count(y, "zip");
      const double lambda = phi[0], pi = phi[1];
      if (yc == 0.0) return std::log(pi + (1.0 - pi) * std::exp(-lambda));
      return std::log1p(-pi) + poisson_log_pmf(yc, lambda);
    }
    case LikelihoodId::Zinb: {
      const double yc = check_count(y, "zinb");
      const double mu = phi[0], sigma = phi[1], pi = phi[2];
      if (yc == 0.0)
        return std::log(pi + (1.0 - pi) * std::exp(-std::log1p(sigma * mu) / sigma));
      return std::log1p(-pi) + negbin_log_pmf(yc, mu, sigma);
    }
    case LikelihoodId::Categorical: {
      const double yc = std::round(y);
      if (std::fabs(y - yc) > 1e-8 || yc < 1.0 || yc > spec.classes)
        throw std::invalid_argument("categorical: y must be a class label in 1..C");
      return std::log(phi[static_cast<int>(yc) - 1]);
    }
  }
  throw std::logic_error("log_density: unreachable");
}

std::optional<std::pair<double, double>> predictive_moments(
    const LikelihoodSpec& spec, Eigen::Ref<const Vec> mu, Eigen::Ref<const Vec> var) {
  if (mu.size() != spec.param_count() || var.size() != spec.param_count())
    throw std::invalid_argument("predictive_moments: latent moment vectors have wrong length");
  if (!(var.array() >= 0.0).all())
    throw std::invalid_argument("predictive_moments: negative latent variance");
  const double m1 = mu.size() > 0 ? mu[0] : 0.0;
  const double v1 = var.size() > 0 ? var[0] : 0.0;
  switch (spec.id) {
    case LikelihoodId::HeteroGaussian:
      return {{m1, std::exp(mu[1] + 0.5 * var[1]) + v1}};
    case LikelihoodId::Poisson: {
      const double mean = std::exp(m1 + 0.5 * v1);
      return {{mean, mean + (std::exp(v1) - 1.0) * std::exp(2.0 * m1 + v1)}};
    }
    case LikelihoodId::Exponential: {
      const double mean = std::exp(m1 + 0.5 * v1);
      return {{mean, (2.0 * std::exp(v1) - 1.0) * std::exp(2.0 * m1 + v1)}};
    }
    case LikelihoodId::Gamma: {
      const double mean = std::exp(m1 + 0.5 * v1);
      const double v = (std::exp(v1) + std::exp(v1 + 2.0 * mu[1] + 2.0 * var[1]) - 1.0) *
                       std::exp(2.0 * m1 + v1);
      return {{mean, v}};
    }
    case LikelihoodId::NegBinomial: {
      const double mean = std::exp(m1 + 0.5 * v1);
      const double v = (std::exp(v1) - 1.0) * std::exp(2.0 * m1 + v1) + mean +
                       std::exp(mu[1] + 0.5 * var[1] + 2.0 * m1 + 2.0 * v1);
      return {{mean, v}};
    }
    case LikelihoodId::Zip: {
      const double pibar = mackay_probability(mu[1], var[1]);
      const double e1 = std::exp(m1 + 0.5 * v1);
      const double e2 = std::exp(2.0 * m1 + v1);
      const double mean = (1.0 - pibar) * e1;
      const double v = (1.0 - pibar) * (e1 + (std::exp(v1) - 1.0) * e2) +
                       pibar * (1.0 - pibar) * e2;
      return {{mean, v}};
    }
    case LikelihoodId::Zinb: {
      const double pibar = mackay_probability(mu[2], var[2]);
      const double e1 = std::exp(m1 + 0.5 * v1);
      const double e2 = std::exp(2.0 * m1 + v1);
      const double mean = (1.0 - pibar) * e1;
      const double v =
          (1.0 - pibar) * (e1 + std::exp(2.0 * m1 + 2.0 * v1 + mu[1] + 0.5 * var[1]) +
                           (std::exp(v1) - 1.0) * e2) +
          pibar * (1.0 - pibar) * e2;
      return {{mean, v}};
    }
    case LikelihoodId::Categorical:
      return std::nullopt;
  }
  throw std::logic_error("predictive_moments: unreachable");
}

double mackay_probability(double mu, double var) {
  if (!(var >= 0.0)) throw std::invalid_argument("mackay_probability: variance must be >= 0");
  return logistic(mu / std::sqrt(1.0 + M_PI * var / 8.0));
}

double sample_y(const LikelihoodSpec& spec, Eigen::Ref<const Vec> phi, Rng& rng) {
  if (phi.size() != spec.param_count())
    throw std::invalid_argument("sample_y: parameter vector has wrong length");
  switch (spec.id) {
    case LikelihoodId::HeteroGaussian:
      return phi[0] + std::sqrt(phi[1]) * rng.normal();
    case LikelihoodId::Poisson:
      return static_cast<double>(rng.poisson(phi[0]));
    case LikelihoodId::Exponential:
      return phi[0] * rng.exponential();
    case LikelihoodId::Gamma:
      return phi[0] * phi[1] * phi[1] * rng.gamma(1.0 / (phi[1] * phi[1]));
    case LikelihoodId::NegBinomial:
      // Gamma-Poisson mixture: lambda ~ Gamma(1/sigma, scale sigma*mu).
      return static_cast<double>(rng.poisson(phi[1] * phi[0] * rng.gamma(1.0 / phi[1])));
    case LikelihoodId::Zip: {
      const double u = rng.uniform();
      if (u < phi[1]) return 0.0;
      return static_cast<double>(rng.poisson(phi[0]));
    }
    case LikelihoodId::Zinb: {
      const double u = rng.uniform();
      if (u < phi[2]) return 0.0;
      return static_cast<double>(rng.poisson(phi[1] * phi[0] * rng.gamma(1.0 / phi[1])));
    }
    case LikelihoodId::Categorical: {
      const double u = rng.uniform();
      double acc = 0.0;
      for (int c = 0; c < spec.classes; ++c) {
        acc += phi[c];
        if (u < acc) return c + 1.0;
      }
      return static_cast<double>(spec.classes);
    }
  }
  throw std::logic_error("sample_y: unreachable");
}

}  // namespace gdgp
