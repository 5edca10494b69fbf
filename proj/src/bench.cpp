#include "gdgp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gdgp {
namespace {

constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kSqrtTwoPi = 2.5066282746310005024157652848110;

// SIR internals: documented constants (the source experiment is described
// only qualitatively, so these are fixed here and acceptance is relative).
constexpr long kSirPopulation = 1000;
constexpr double kSirTau = 0.05;
constexpr double kSirHorizon = 100.0;

// Predator-prey propensity constants chosen to give oscillatory and
// extinction regimes over the documented input boxes.
constexpr double kPreyBirthRate = 1.0;
constexpr double kPreyCapacity = 200.0;
constexpr double kConversionEfficiency = 0.5;
constexpr double kPredPreyHorizon = 100.0;

void check_box(Eigen::Ref<const Vec> x, const Mat& bounds, const char* who) {
  if (x.size() != bounds.rows())
    throw std::invalid_argument(std::string(who) + ": input has wrong dimension");
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (!(x[d] >= bounds(d, 0) && x[d] <= bounds(d, 1)))
      throw std::invalid_argument(std::string(who) + ": input coordinate " +
                                  std::to_string(d + 1) + " is outside its bounds");
  }
}

Mat unit_box(int dim) {
  Mat b(dim, 2);
  b.col(0).setZero();
  b.col(1).setOnes();
  return b;
}

Mat predprey_box() {
  Mat b(4, 2);
  b << 0.1, 2.0,   // d_F
      0.1, 1.8,    // d_R
      0.01, 0.02,  // alpha
      0.0, 0.04;   // w
  return b;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double truth_range(Eigen::Ref<const Vec> truth, const char* who) {
  const double range = truth.maxCoeff() - truth.minCoeff();
  if (!(range > 0.0))
    throw std::invalid_argument(std::string(who) + ": truth values have zero range");
  return range;
}

void check_lengths(Eigen::Index a, Eigen::Index b, const char* who) {
  if (a != b) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

// Shared validation for the classification metrics: labels 1-based within
// the class count, rows on the simplex, every class represented (the
// class-balanced forms are undefined otherwise).
void check_classification(const std::vector<int>& labels, Eigen::Ref<const Mat> probs,
                          const char* who) {
  const int classes = static_cast<int>(probs.cols());
  if (classes < 2) throw std::invalid_argument(std::string(who) + ": need >= 2 classes");
  check_lengths(static_cast<Eigen::Index>(labels.size()), probs.rows(), who);
  std::vector<long> count(static_cast<std::size_t>(classes), 0);
  for (int y : labels) {
    if (y < 1 || y > classes)
      throw std::invalid_argument(std::string(who) + ": label outside 1..classes");
    ++count[static_cast<std::size_t>(y - 1)];
  }
  for (int c = 0; c < classes; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0)
      throw std::invalid_argument(std::string(who) + ": class " + std::to_string(c + 1) +
                                  " does not occur in labels");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (!(probs.row(i).minCoeff() >= 0.0) ||
        std::fabs(probs.row(i).sum() - 1.0) > 1e-6)
      throw std::invalid_argument(std::string(who) + ": probability row " +
                                  std::to_string(i + 1) + " is not on the simplex");
  }
}

}  // namespace

double step1d_true_mean(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument("step1d: x must lie in [0,1]");
  return x < 0.5 ? -1.0 : 1.0;
}

double step1d_true_logvar(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument("step1d: x must lie in [0,1]");
  const double bump = 2.0 * x - 1.0;
  const double s2 =
      (std::sin(4.0 * x - 2.0) + 10.0 * std::exp(-1200.0 * bump * bump) + 1.0) / 600.0;
  return std::log(s2);
}

double step1d(double x, Rng& rng) {
  const double mu = step1d_true_mean(x);
  return mu + std::exp(0.5 * step1d_true_logvar(x)) * rng.normal();
}

double sir5d(Eigen::Ref<const Vec> u, Rng& rng) {
  check_box(u, unit_box(5), "sir5d");
  const long initial_infected = 1 + std::lround(19.0 * u[1]);
  long susceptible =
      std::lround((0.5 + 0.5 * u[0]) * static_cast<double>(kSirPopulation - initial_infected));
  long infected = initial_infected;
  const double transmission = 0.1 + 0.9 * u[2];
  const double recovery = 0.05 + 0.45 * u[3];
  const double importation = u[4] >= 0.5 ? 0.5 * (u[4] - 0.5) : 0.0;

  long ever_infected = initial_infected;
  const long steps = std::lround(kSirHorizon / kSirTau);
  for (long s = 0; s < steps; ++s) {
    if (infected == 0 && importation == 0.0) break;  // nothing can change any more
    const double infection_rate =
        transmission * static_cast<double>(susceptible) *
        static_cast<double>(infected) / static_cast<double>(kSirPopulation);
    long new_infections = rng.poisson(infection_rate * kSirTau);
    if (importation > 0.0) new_infections += rng.poisson(importation * kSirTau);
    new_infections = std::min(new_infections, susceptible);
    const long new_recoveries = std::min(rng.poisson(recovery * infected * kSirTau), infected);
    susceptible -= new_infections;
    infected += new_infections - new_recoveries;
    ever_infected += new_infections;
  }
  return static_cast<double>(ever_infected) / static_cast<double>(kSirPopulation);
}

long predprey4d(Eigen::Ref<const Vec> theta, Rng& rng) {
  check_box(theta, predprey_box(), "predprey4d");
  const double death_f = theta[0];
  const double death_r = theta[1];
  const double alpha = theta[2];
  const double w = theta[3];

  long prey = 50;
  long pred = 5;
  double t = 0.0;
  for (;;) {
    const double r = static_cast<double>(prey);
    const double f = static_cast<double>(pred);
    const double birth = std::max(0.0, kPreyBirthRate * r * (1.0 - r / kPreyCapacity));
    const double prey_death = death_r * r;
    const double predation = alpha * r * f / (1.0 + alpha * w * r);
    const double pred_birth = kConversionEfficiency * predation;
    const double pred_death = death_f * f;
    const double total = birth + prey_death + predation + pred_birth + pred_death;
    if (total <= 0.0) break;  // absorbing (both populations extinct)
    t += rng.exponential() / total;
    if (t > kPredPreyHorizon) break;
    double pick = rng.uniform() * total;
    if ((pick -= birth) < 0.0) {
      ++prey;
    } else if ((pick -= prey_death) < 0.0) {
      --prey;
    } else if ((pick -= predation) < 0.0) {
      --prey;
    } else if ((pick -= pred_birth) < 0.0) {
      ++pred;
    } else {
      --pred;
    }
  }
  return prey;
}

SimulatorSpec SimulatorSpec::from_name(const std::string& id) {
  SimulatorSpec spec;
  spec.id = id;
  if (id == "step1d") {
    spec.bounds = unit_box(1);
    spec.horizon = 0.0;
  } else if (id == "sir5d") {
    spec.bounds = unit_box(5);
    spec.horizon = kSirHorizon;
  } else if (id == "predprey4d") {
    spec.bounds = predprey_box();
    spec.horizon = kPredPreyHorizon;
  } else {
    throw std::invalid_argument("unknown simulator '" + id +
                                "' (valid: step1d, sir5d, predprey4d)");
  }
  return spec;
}

double SimulatorSpec::evaluate(Eigen::Ref<const Vec> x, Rng& rng) const {
  check_box(x, bounds, id.c_str());
  if (id == "step1d") return step1d(x[0], rng);
  if (id == "sir5d") return sir5d(x, rng);
  if (id == "predprey4d") return static_cast<double>(predprey4d(x, rng));
  throw std::invalid_argument("unknown simulator '" + id + "'");
}

Mat latin_hypercube(int n, int dim, Rng& rng) {
  if (n < 1 || dim < 1)
    throw std::invalid_argument("latin_hypercube: n and dim must be positive");
  Mat design(n, dim);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < n; ++i) strata[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {  // Fisher-Yates on the stratum order
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(strata[static_cast<std::size_t>(i)], strata[j]);
    }
    for (int i = 0; i < n; ++i)
      design(i, d) = (static_cast<double>(strata[static_cast<std::size_t>(i)]) + rng.uniform()) /
                     static_cast<double>(n);
  }
  return design;
}

Mat uniform_grid(int n, int dim) {
  if (n < 1 || dim < 1)
    throw std::invalid_argument("uniform_grid: n and dim must be positive");
  const int per_axis = static_cast<int>(std::lround(std::pow(static_cast<double>(n), 1.0 / dim)));
  auto pow_int = [](int base, int exp) {
    long long out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
  };
  if (pow_int(per_axis, dim) != n)
    throw std::invalid_argument("uniform_grid: n must be a perfect dim-th power");
  Vec axis(per_axis);
  if (per_axis == 1) {
    axis[0] = 0.5;
  } else {
    for (int i = 0; i < per_axis; ++i)
      axis[i] = static_cast<double>(i) / static_cast<double>(per_axis - 1);
  }
  Mat design(n, dim);
  for (int i = 0; i < n; ++i) {
    int rest = i;
    for (int d = 0; d < dim; ++d) {  // mixed-radix unrolling, first axis fastest
      design(i, d) = axis[rest % per_axis];
      rest /= per_axis;
    }
  }
  return design;
}

double nrmse(Eigen::Ref<const Vec> truth, Eigen::Ref<const Vec> pred) {
  check_lengths(truth.size(), pred.size(), "nrmse");
  const double range = truth_range(truth, "nrmse");
  const double mse = (pred - truth).squaredNorm() / static_cast<double>(truth.size());
  return std::sqrt(mse) / range;
}

double crps_gaussian(double y, double mean, double var) {
  if (!(var > 0.0)) throw std::invalid_argument("crps_gaussian: variance must be positive");
  const double sigma = std::sqrt(var);
  const double z = (y - mean) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / kSqrtTwoPi;
  return sigma * (z * (2.0 * standard_normal_cdf(z) - 1.0) + 2.0 * pdf - 1.0 / kSqrtPi);
}

double ncrps(Eigen::Ref<const Vec> truth, Eigen::Ref<const Vec> means,
             Eigen::Ref<const Vec> vars) {
  check_lengths(truth.size(), means.size(), "ncrps");
  check_lengths(truth.size(), vars.size(), "ncrps");
  const double range = truth_range(truth, "ncrps");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    sum += crps_gaussian(truth[i], means[i], vars[i]);
  return sum / (static_cast<double>(truth.size()) * range);
}

double score(Eigen::Ref<const Vec> y, Eigen::Ref<const Vec> means,
             Eigen::Ref<const Vec> vars) {
  check_lengths(y.size(), means.size(), "score");
  check_lengths(y.size(), vars.size(), "score");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(vars[i] > 0.0)) throw std::invalid_argument("score: variances must be positive");
    const double resid = y[i] - means[i];
    sum += resid * resid / vars[i] + std::log(vars[i]);
  }
  return -sum / static_cast<double>(y.size());
}

double accuracy(const std::vector<int>& labels, Eigen::Ref<const Mat> probs) {
  check_classification(labels, probs, "accuracy");
  const int classes = static_cast<int>(probs.cols());
  std::vector<double> hits(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> count(static_cast<std::size_t>(classes), 0.0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index predicted = 0;
    probs.row(i).maxCoeff(&predicted);  // first maximum wins ties
    const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1);
    count[c] += 1.0;
    if (predicted == static_cast<Eigen::Index>(c)) hits[c] += 1.0;
  }
  double sum = 0.0;
  for (int c = 0; c < classes; ++c)
    sum += hits[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
  return 100.0 * sum / static_cast<double>(classes);
}

double logloss(const std::vector<int>& labels, Eigen::Ref<const Mat> probs) {
  check_classification(labels, probs, "logloss");
  const int classes = static_cast<int>(probs.cols());
  std::vector<double> loss(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> count(static_cast<std::size_t>(classes), 0.0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1);
    count[c] += 1.0;
    loss[c] -= std::log(std::max(probs(i, static_cast<Eigen::Index>(c)), 1e-15));
  }
  double sum = 0.0;
  for (int c = 0; c < classes; ++c)
    sum += loss[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
  return sum / static_cast<double>(classes);
}

double nll(const LikelihoodSpec& lik, Eigen::Ref<const Vec> y,
           Eigen::Ref<const Mat> params) {
  check_lengths(y.size(), params.rows(), "nll");
  if (params.cols() != lik.param_count())
    throw std::invalid_argument("nll: params has wrong column count for the likelihood");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    sum += log_density(lik, y[i], params.row(i).transpose());
  return -sum / static_cast<double>(y.size());
}

Vec poisson_glm_fit(Eigen::Ref<const Mat> X, Eigen::Ref<const Vec> y,
                    int max_iter, double tol) {
  check_lengths(X.rows(), y.size(), "poisson_glm_fit");
  if (y.minCoeff() < 0.0)
    throw std::invalid_argument("poisson_glm_fit: counts must be non-negative");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols() + 1;
  Mat design(n, p);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;

  Vec beta = Vec::Zero(p);
  beta[0] = std::log(std::max(y.mean(), 1e-8));  // intercept-only start
  for (int it = 0; it < max_iter; ++it) {
    const Vec eta = (design * beta).cwiseMax(-30.0).cwiseMin(30.0);
    const Vec mu = eta.array().exp().matrix();
    // Weighted least squares on the working response eta + (y - mu)/mu,
    // weights mu; a tiny ridge keeps degenerate designs solvable.
    Mat xtwx = design.transpose() * mu.asDiagonal() * design;
    xtwx.diagonal().array() += 1e-10;
    const Vec rhs = design.transpose() * (mu.asDiagonal() * eta + (y - mu));
    const Vec next = xtwx.ldlt().solve(rhs);
    const double step = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (step < tol) break;
  }
  if (!beta.allFinite()) throw NumericalError("poisson_glm_fit: coefficients diverged");
  return beta;
}

Vec poisson_glm_mean(Eigen::Ref<const Mat> X, Eigen::Ref<const Vec> beta) {
  if (beta.size() != X.cols() + 1)
    throw std::invalid_argument("poisson_glm_mean: coefficient length mismatch");
  const Vec eta =
      ((X * beta.tail(X.cols())).array() + beta[0]).cwiseMax(-30.0).cwiseMin(30.0);
  return eta.array().exp().matrix();
}

}  // namespace gdgp
