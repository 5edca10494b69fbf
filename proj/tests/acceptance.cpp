// Acceptance suite: twelve end-to-end criteria for the emulator, printed as
// one pass/fail line each with the measured quantities and pinned tolerances.
// Run with no arguments for the full suite, or pass criterion numbers to run
// a subset (e.g. "acceptance 1 4 12").  The exit code is the failure count.
//
// Statistical gates that compare closed forms against Monte Carlo at k
// standard errors are applied per comparison; with hundreds to thousands of
// comparisons a correct implementation still produces the calibrated share
// of ~0.3% marginal exceedances, so those criteria pass when at least 99% of
// comparisons sit inside 3 SE and none sits outside 6 SE (a real formula
// error shows up at tens to hundreds of SE at these sample sizes).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gdgp/bench.hpp"
#include "gdgp/inference.hpp"
#include "gdgp/io.hpp"
#include "gdgp/kernel.hpp"
#include "gdgp/likelihood.hpp"
#include "gdgp/model.hpp"
#include "gdgp/optim.hpp"
#include "gdgp/predict.hpp"
#include "gdgp/rng.hpp"
#include "gdgp/vecchia.hpp"
#include "support/quadrature.hpp"
#include "support/stats.hpp"

namespace {

using namespace gdgp;

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Vec normal_vec(int n, Rng& rng) {
  Vec z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

Vec chol_draw(const Mat& cov, Rng& rng) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("acceptance: covariance not SPD");
  return llt.matrixL() * normal_vec(static_cast<int>(cov.rows()), rng);
}

Mat grid1d(int n, double lo = 0.0, double hi = 1.0) {
  Mat x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = lo + (hi - lo) * i / (n - 1.0);
  return x;
}

double logsumexp(const Vec& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

// Tracks a batch of "within k SE" comparisons with the calibrated-exceedance
// gate described at the top of the file.
struct SeGate {
  long total = 0;
  long outside = 0;
  double worst_z = 0.0;

  void check(double closed, double estimate, double se, double guard = 1e-9) {
    const double dev = std::fabs(closed - estimate);
    const double z = dev / std::max(se, 1e-300);
    ++total;
    if (dev > 3.0 * se + guard) ++outside;
    worst_z = std::max(worst_z, z);
  }
  bool pass() const { return outside * 100 <= total && worst_z <= 6.0; }
};

// ---------------------------------------------------------------------------
// 1. Factored Gaussian log-likelihood is exact at full conditioning, and its
//    conditional-sum and triangular-factor forms are the same number.
// ---------------------------------------------------------------------------
bool criterion1(std::string& detail) {
  Rng master = Rng::stream(9101, {1});
  double worst_dense = 0.0, worst_forms = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 8 + static_cast<int>(master.uniform_int(57));  // 8..64
    const int d = 1 + static_cast<int>(master.uniform_int(3));
    const KernelFamily fam =
        (rep % 2 == 0) ? KernelFamily::SquaredExponential : KernelFamily::Matern25;
    Mat x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = master.uniform();
    KernelSpec spec = KernelSpec::isotropic(fam, d, 1.0, 0.3 + 2.0 * master.uniform(),
                                            1e-6 + 0.05 * master.uniform());
    for (int j = 0; j < d; ++j) spec.lengthscales[j] = 0.2 + 1.3 * master.uniform();
    const Mat cov = spec.amplitude * corr_matrix(spec, x);
    const Vec w = chol_draw(cov, master);

    // Independent dense oracle straight from the normal density.
    Eigen::LLT<Mat> llt(cov);
    double logdet = 0.0;
    const Mat l = llt.matrixL();
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
    const double oracle =
        -0.5 * (n * std::log(2.0 * M_PI) + logdet + w.dot(llt.solve(w)));

    const double full = vecchia_loglik(spec, w, x, exact_plan(n), false).value;
    worst_dense =
        std::max(worst_dense, std::fabs(full - oracle) / std::max(1.0, std::fabs(oracle)));

    const VecchiaPlan plans[2] = {exact_plan(n),
                                  make_plan(x, spec.lengthscales, 10, 7000 + rep)};
    for (const VecchiaPlan& plan : plans) {
      const double a = vecchia_loglik(spec, w, x, plan, false).value;
      const double b = loglik_via_U(build_U(spec, x, plan), w);
      worst_forms =
          std::max(worst_forms, std::fabs(a - b) / std::max(1.0, std::fabs(a)));
    }
  }
  detail = fmt("50 problems: dense rel err %.1e (<=1e-8), form gap %.1e (<=1e-10)",
               worst_dense, worst_forms);
  return worst_dense <= 1e-8 && worst_forms <= 1e-10;
}

// ---------------------------------------------------------------------------
// 2. Closed-form kernel moments against a plain 64-node Gauss-Hermite rule.
//    The tuple distribution keeps v <= 0.03 gamma^2: a fixed 64-node rule
//    only resolves kernels at least a few nodes wide, and the unit suite
//    already covers the broad-v regime with a kink-split oracle at 1e-13.
// ---------------------------------------------------------------------------
bool criterion2(std::string& detail) {
  double worst = 0.0;
  for (KernelFamily fam : {KernelFamily::SquaredExponential, KernelFamily::Matern25}) {
    Rng rng = Rng::stream(9102, {static_cast<std::uint64_t>(fam) + 1});
    for (int t = 0; t < 1000; ++t) {
      const double gamma = 0.5 + 1.5 * rng.uniform();
      const double v = 1e-8 + 0.03 * gamma * gamma * rng.uniform();
      const double m = -2.0 + 4.0 * rng.uniform();
      const double w = -2.0 + 4.0 * rng.uniform();
      const double wj = -2.0 + 4.0 * rng.uniform();
      const double xi_gh = testsupport::gh_expect(
          [&](double x) { return kernel1d(fam, x, w, gamma); }, m, v, 64);
      const double ze_gh = testsupport::gh_expect(
          [&](double x) { return kernel1d(fam, x, w, gamma) * kernel1d(fam, x, wj, gamma); },
          m, v, 64);
      worst = std::max(worst, std::fabs(xi_moment(fam, gamma, m, v, w) - xi_gh));
      worst = std::max(worst, std::fabs(zeta_moment(fam, gamma, m, v, w, wj) - ze_gh));
    }
  }
  detail = fmt("2000 tuples/family: worst |closed - GH64| %.1e (<=1e-8)", worst);
  return worst <= 1e-8;
}

// ---------------------------------------------------------------------------
// 3. The web of mean-channel posteriors: grouped == dense-on-expanded-data,
//    factored == dense at full conditioning, grouped factored == grouped
//    dense, single-replicate grouped == ungrouped exactly, and the pseudo
//    data are exactly the replicate means.
// ---------------------------------------------------------------------------
Mat factor_covariance(const JointFactor& jf) {
  const int n = jf.n();
  Mat uff = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    uff(k, k) = jf.diag[k];
    for (const auto& [j, v] : jf.f_off[static_cast<size_t>(k)]) uff(j, k) = v;
  }
  const Mat cov_pos = (uff * uff.transpose()).inverse();
  Mat cov(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      cov(jf.order[static_cast<size_t>(a)], jf.order[static_cast<size_t>(b)]) =
          cov_pos(a, b);
  return cov;
}

bool criterion3(std::string& detail) {
  Rng rng = Rng::stream(9103, {1});
  double worst_expand = 0.0, worst_factored = 0.0, worst_exact = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 15 + static_cast<int>(rng.uniform_int(11));
    const int d = 1 + static_cast<int>(rng.uniform_int(2));
    Mat x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = rng.uniform();
    KernelSpec spec =
        KernelSpec::isotropic(KernelFamily::Matern25, d, 0.4, 0.8 + rng.uniform(),
                              1e-4 + 1e-2 * rng.uniform());
    for (int j = 0; j < d; ++j) spec.lengthscales[j] = 0.3 + 0.6 * rng.uniform();
    const Mat sigma = spec.amplitude * corr_matrix(spec, x);

    Vec sig2(n);
    Mat raw_x(0, d);
    std::vector<double> raw_y;
    std::vector<int> first(n);
    for (int i = 0; i < n; ++i) {
      sig2[i] = 0.05 + 0.45 * rng.uniform();
      const int s = 1 + static_cast<int>(rng.uniform_int(4));
      first[i] = static_cast<int>(raw_y.size());
      for (int r = 0; r < s; ++r) {
        raw_x.conservativeResize(raw_x.rows() + 1, d);
        raw_x.row(raw_x.rows() - 1) = x.row(i);
        raw_y.push_back(0.2 * i + std::sqrt(sig2[i]) * rng.normal());
      }
    }
    const Dataset data = ingest(raw_x, Eigen::Map<const Vec>(raw_y.data(),
                                                             static_cast<long>(raw_y.size())));
    const Vec y_flat = data.flat_outputs();
    const long total = data.total_obs();

    // Replicate folding (grouped) against the same posterior on expanded data.
    const GaussianPosterior grouped =
        posterior_mu_grouped(sigma, data.replication_map, sig2, y_flat);
    Mat sigma_exp(total, total);
    Vec noise_exp(total);
    for (long r = 0; r < total; ++r) {
      noise_exp[r] = sig2[data.replication_map[static_cast<size_t>(r)]];
      for (long c = 0; c < total; ++c)
        sigma_exp(r, c) = sigma(data.replication_map[static_cast<size_t>(r)],
                                data.replication_map[static_cast<size_t>(c)]);
    }
    const GaussianPosterior dense_exp = posterior_mu_dense(sigma_exp, noise_exp, y_flat);
    for (int i = 0; i < n; ++i) {
      worst_expand =
          std::max(worst_expand, std::fabs(grouped.mean[i] - dense_exp.mean[first[i]]));
      for (int j = 0; j < n; ++j)
        worst_expand = std::max(
            worst_expand, std::fabs(grouped.cov(i, j) - dense_exp.cov(first[i], first[j])));
    }

    // Factored single-observation posterior against the dense one.
    const Vec y1 = data.replicate_means();
    const JointFactor jf = build_joint_U(spec, x, sig2, 2 * n, 9200 + rep);
    const VecchiaPosterior vp = posterior_mu_vecchia(jf, y1);
    const GaussianPosterior dense1 = posterior_mu_dense(sigma, sig2, y1);
    worst_factored =
        std::max(worst_factored, (vp.mean - dense1.mean).cwiseAbs().maxCoeff());
    worst_factored = std::max(worst_factored,
                              (factor_covariance(jf) - dense1.cov).cwiseAbs().maxCoeff());

    // Factored grouped posterior against the dense grouped one.
    Vec pseudo(n);
    for (int i = 0; i < n; ++i) pseudo[i] = sig2[i] / data.group_size(i);
    const JointFactor jfr = build_joint_U(spec, x, pseudo, 2 * n, 9300 + rep);
    const VecchiaPosterior vg = posterior_mu_vecchia_grouped(jfr, y1);
    worst_factored =
        std::max(worst_factored, (vg.mean - grouped.mean).cwiseAbs().maxCoeff());
    worst_factored = std::max(
        worst_factored, (factor_covariance(jfr) - grouped.cov).cwiseAbs().maxCoeff());

    // With one replicate everywhere the grouped form is the plain form,
    // identically; and the pseudo data are exactly the replicate means.
    const JointFactor jf1 = build_joint_U(spec, x, sig2, 2 * n, 9400 + rep);
    const Vec ya = posterior_mu_vecchia(jf1, y1).mean;
    const Vec yb = posterior_mu_vecchia_grouped(jf1, y1).mean;
    worst_exact = std::max(worst_exact, (ya - yb).cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (double vr : data.outputs[static_cast<size_t>(i)]) s += vr;
      worst_exact =
          std::max(worst_exact, std::fabs(y1[i] - s / data.group_size(i)));
    }
  }
  detail = fmt("expand gap %.1e (<=1e-8), factored gap %.1e (<=1e-6), exact gap %.1e (=0)",
               worst_expand, worst_factored, worst_exact);
  return worst_expand <= 1e-8 && worst_factored <= 1e-6 && worst_exact == 0.0;
}

// ---------------------------------------------------------------------------
// 4. The layered closed-form forward pass against a 10^6-sample push-through.
// ---------------------------------------------------------------------------
GdgpModel random_layered_model(int d, int n, std::uint64_t seed) {
  const LikelihoodSpec het = LikelihoodSpec::from_name("hetgauss");
  GdgpModel m;
  m.arch = build_default(d, het);
  Rng r = Rng::stream(seed, {1});
  m.train_inputs = latin_hypercube(n, d, r);
  m.scaling.x_min = Vec::Zero(d);
  m.scaling.x_range = Vec::Ones(d);
  m.scaling.y_mean = 0.0;
  m.scaling.y_scale = 1.0;
  m.kernels.resize(2);
  for (int p = 0; p < d; ++p)
    m.kernels[0].push_back(KernelSpec::isotropic(KernelFamily::Matern25, d,
                                                 0.35 + 0.3 * r.uniform(), 1.0, 1e-6));
  const int q = m.arch.nodes_in(1);
  for (int j = 0; j < q; ++j)
    m.kernels[1].push_back(KernelSpec::isotropic(KernelFamily::Matern25, d,
                                                 0.5 + 0.5 * r.uniform(),
                                                 j == 0 ? 1.2 : 0.4, 1e-4));
  LatentState st;
  st.layers.resize(2);
  Mat wmat(n, d);
  for (int p = 0; p < d; ++p) {
    const Vec w =
        chol_draw(m.kernels[0][static_cast<size_t>(p)].amplitude *
                      corr_matrix(m.kernels[0][static_cast<size_t>(p)], m.train_inputs),
                  r);
    st.layers[0].push_back(w);
    wmat.col(p) = w;
  }
  for (int j = 0; j < q; ++j) {
    const KernelSpec& spec = m.kernels[1][static_cast<size_t>(j)];
    Vec f = chol_draw(spec.amplitude * corr_matrix(spec, wmat), r);
    if (j == 1) f = 0.4 * f + Vec::Constant(n, -2.0);
    st.layers[1].push_back(f);
  }
  m.imputations.push_back(st);
  m.validate();
  return m;
}

bool criterion4(std::string& detail) {
  constexpr int kDraws = 1000000;
  constexpr int kBatch = 20000;
  SeGate gate;
  const int dims[5] = {1, 2, 1, 2, 1};
  for (int mi = 0; mi < 5; ++mi) {
    const int d = dims[mi];
    const int n = 15;
    const GdgpModel model = random_layered_model(d, n, 9400 + static_cast<std::uint64_t>(mi));
    const LatentState& st = model.imputations[0];
    Mat wmat(n, d);
    for (int p = 0; p < d; ++p) wmat.col(p) = st.node(0, p);

    // Training-side solves for the oracle.
    std::vector<Eigen::LLT<Mat>> llt1(static_cast<size_t>(d));
    std::vector<Vec> alpha1(static_cast<size_t>(d));
    for (int p = 0; p < d; ++p) {
      llt1[static_cast<size_t>(p)].compute(
          corr_matrix(model.kernels[0][static_cast<size_t>(p)], model.train_inputs));
      alpha1[static_cast<size_t>(p)] = llt1[static_cast<size_t>(p)].solve(st.node(0, p));
    }
    const int q = model.arch.nodes_in(1);
    std::vector<Vec> alpha2(static_cast<size_t>(q));
    std::vector<Mat> rinv2(static_cast<size_t>(q));
    for (int j = 0; j < q; ++j) {
      Eigen::LLT<Mat> llt(corr_matrix(model.kernels[1][static_cast<size_t>(j)], wmat));
      alpha2[static_cast<size_t>(j)] = llt.solve(st.node(1, j));
      rinv2[static_cast<size_t>(j)] = llt.solve(Mat::Identity(n, n));
    }

    const LgpPredictor predictor(model, 0);
    Rng mc = Rng::stream(9500 + static_cast<std::uint64_t>(mi), {1});
    Rng tp = Rng::stream(9600 + static_cast<std::uint64_t>(mi), {1});
    const Mat x_test = latin_hypercube(20, d, tp);
    Vec a(kDraws), b(kDraws);
    for (int t = 0; t < x_test.rows(); ++t) {
      const Vec x0 = x_test.row(t).transpose();
      Vec m1(d), v1(d);
      for (int p = 0; p < d; ++p) {
        const KernelSpec& hid = model.kernels[0][static_cast<size_t>(p)];
        const Mat r0 = cross_correlation(hid, x0.transpose(), model.train_inputs);
        m1[p] = (r0 * alpha1[static_cast<size_t>(p)])(0);
        v1[p] = hid.amplitude *
                (1.0 + hid.nugget -
                 (r0 * llt1[static_cast<size_t>(p)].solve(r0.transpose()))(0, 0));
        if (!(v1[p] > 0.0)) return false;
      }
      const NodeMoments nm = predictor.forward(x0);
      for (int j = 0; j < q; ++j) {
        const KernelSpec& spec = model.kernels[1][static_cast<size_t>(j)];
        Rng draw = Rng::stream(9700, {static_cast<std::uint64_t>(mi),
                                      static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(j)});
        for (int start = 0; start < kDraws; start += kBatch) {
          Mat u(kBatch, d);
          for (int s = 0; s < kBatch; ++s)
            for (int p = 0; p < d; ++p)
              u(s, p) = m1[p] + std::sqrt(v1[p]) * draw.normal();
          const Mat ru = cross_correlation(spec, u, wmat);
          a.segment(start, kBatch) = ru * alpha2[static_cast<size_t>(j)];
          const Vec fit =
              (ru * rinv2[static_cast<size_t>(j)]).cwiseProduct(ru).rowwise().sum();
          b.segment(start, kBatch) =
              spec.amplitude * (1.0 + spec.nugget - fit.array()).matrix();
        }
        const double mc_mean = a.mean();
        const Vec centered = a.array() - mc_mean;
        const double mc_var = centered.squaredNorm() / kDraws + b.mean();
        const double se_mean = std::sqrt(centered.squaredNorm()) / kDraws;
        const Vec g = (centered.array().square() + b.array()).matrix();
        const double se_var =
            std::sqrt((g.array() - g.mean()).square().sum()) / kDraws;
        gate.check(nm.mean[j], mc_mean, se_mean, 1e-8);
        gate.check(nm.var[j], mc_var, se_var, 1e-8);
      }
      (void)mc;
    }
  }
  detail = fmt("%ld moment comparisons: %ld outside 3 SE (<=1%%), worst %.1f SE (<=6)",
               gate.total, gate.outside, gate.worst_z);
  return gate.pass();
}

// ---------------------------------------------------------------------------
// 5. Closed-form predictive response moments per likelihood against a
//    10^7-draw latent push-through; the zero-inflated families are compared
//    against the same plug-in structure their closed forms use, and the
//    plug-in probability itself is held within 0.01 of exact quadrature.
// ---------------------------------------------------------------------------
struct McResult {
  double mean = 0.0, var = 0.0, se_mean = 0.0, se_var = 0.0;
};

template <class Fill>
McResult mc_latent_push(const std::vector<std::pair<double, double>>& chans,
                        const Fill& fill, Rng& rng) {
  constexpr int kBatches = 100;
  constexpr int kBatch = 100000;
  const int q = static_cast<int>(chans.size());
  std::vector<Vec> f(static_cast<size_t>(q), Vec(kBatch));
  Vec a(kBatch), b(kBatch), bm(kBatches), bv(kBatches);
  double sa = 0.0, saa = 0.0, sb = 0.0;
  for (int j = 0; j < kBatches; ++j) {
    for (int c = 0; c < q; ++c) {
      const double m = chans[static_cast<size_t>(c)].first;
      const double s = std::sqrt(chans[static_cast<size_t>(c)].second);
      Vec& fc = f[static_cast<size_t>(c)];
      for (int i = 0; i < kBatch; ++i) fc[i] = m + s * rng.normal();
    }
    fill(f, a, b);
    const double am = a.mean();
    bm[j] = am;
    bv[j] = b.mean() + a.squaredNorm() / kBatch - am * am;
    sa += a.sum();
    saa += a.squaredNorm();
    sb += b.sum();
  }
  const double n = static_cast<double>(kBatches) * kBatch;
  McResult r;
  r.mean = sa / n;
  r.var = sb / n + saa / n - r.mean * r.mean;
  r.se_mean =
      std::sqrt((bm.array() - bm.mean()).square().sum() / (kBatches - 1.0) / kBatches);
  r.se_var =
      std::sqrt((bv.array() - bv.mean()).square().sum() / (kBatches - 1.0) / kBatches);
  return r;
}

bool criterion5(std::string& detail) {
  Rng rng = Rng::stream(9105, {1});
  SeGate gate;
  double worst_mackay = 0.0;
  const auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const auto compare = [&](const LikelihoodSpec& spec, const Vec& mu, const Vec& va,
                           const McResult& mc) {
    const auto closed = predictive_moments(spec, mu, va);
    gate.check(closed->first, mc.mean, mc.se_mean);
    gate.check(closed->second, mc.var, mc.se_var);
  };

  for (int t = 0; t < 100; ++t) {
    // Shared channel draws for this tuple index.
    const double m_id = -2.0 + 4.0 * rng.uniform();   // identity-link channel
    const double v_id = 0.01 + 0.99 * rng.uniform();
    const double m_log = -1.0 + 3.0 * rng.uniform();  // log-link mean channel
    const double v_log = 0.01 + 0.99 * rng.uniform();
    const double m_lv = -2.0 + 3.0 * rng.uniform();   // log-link variance channel
    const double v_lv = 0.01 + 0.99 * rng.uniform();
    const double m_disp = -1.5 + 2.0 * rng.uniform();  // log-link dispersion channel
    const double v_disp = 0.01 + 0.49 * rng.uniform();
    const double m_pi = -2.0 + 4.0 * rng.uniform();   // logit-link channel
    const double v_pi = 0.01 + 2.99 * rng.uniform();

    {  // observation mean plus log-variance
      const LikelihoodSpec spec = LikelihoodSpec::from_name("hetgauss");
      Vec mu(2), va(2);
      mu << m_id, m_lv;
      va << v_id, v_lv;
      compare(spec, mu, va,
              mc_latent_push({{m_id, v_id}, {m_lv, v_lv}},
                             [](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               a = f[0];
                               b = f[1].array().exp();
                             },
                             rng));
    }
    {  // counts with a log rate
      const LikelihoodSpec spec = LikelihoodSpec::from_name("poisson");
      Vec mu(1), va(1);
      mu << m_log;
      va << v_log;
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}},
                             [](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               a = f[0].array().exp();
                               b = a;
                             },
                             rng));
    }
    {  // positive continuous, mean-parameterized
      const LikelihoodSpec spec = LikelihoodSpec::from_name("exponential");
      Vec mu(1), va(1);
      mu << m_log;
      va << v_log;
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}},
                             [](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               a = f[0].array().exp();
                               b = a.array().square();
                             },
                             rng));
    }
    {  // gamma with mean/dispersion: Var(Y|mu,s) = (s mu)^2
      const LikelihoodSpec spec = LikelihoodSpec::from_name("gamma");
      Vec mu(2), va(2);
      mu << m_log, m_disp;
      va << v_log, v_disp;
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}, {m_disp, v_disp}},
                             [](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               a = f[0].array().exp();
                               b = (f[1].array().exp() * a.array()).square();
                             },
                             rng));
    }
    {  // negative binomial: Var(Y|mu,s) = mu + s mu^2
      const LikelihoodSpec spec = LikelihoodSpec::from_name("negbin");
      Vec mu(2), va(2);
      mu << m_log, m_disp;
      va << v_log, v_disp;
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}, {m_disp, v_disp}},
                             [](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               a = f[0].array().exp();
                               b = a.array() +
                                   f[1].array().exp() * a.array().square();
                             },
                             rng));
    }
    {  // zero-inflated counts: plug-in inflation probability
      const LikelihoodSpec spec = LikelihoodSpec::from_name("zip");
      Vec mu(2), va(2);
      mu << m_log, m_pi;
      va << v_log, v_pi;
      const double pibar = mackay_probability(m_pi, v_pi);
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}},
                             [pibar](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               const auto lam = f[0].array().exp();
                               a = (1.0 - pibar) * lam;
                               b = (1.0 - pibar) * lam * (1.0 + pibar * lam);
                             },
                             rng));
      worst_mackay = std::max(
          worst_mackay, std::fabs(pibar - testsupport::gh_expect(logistic, m_pi, v_pi, 64)));
    }
    {  // zero-inflated negative binomial
      const LikelihoodSpec spec = LikelihoodSpec::from_name("zinb");
      Vec mu(3), va(3);
      mu << m_log, m_disp, m_pi;
      va << v_log, v_disp, v_pi;
      const double pibar = mackay_probability(m_pi, v_pi);
      compare(spec, mu, va,
              mc_latent_push({{m_log, v_log}, {m_disp, v_disp}},
                             [pibar](const std::vector<Vec>& f, Vec& a, Vec& b) {
                               const auto mval = f[0].array().exp();
                               const auto s = f[1].array().exp();
                               a = (1.0 - pibar) * mval;
                               b = (1.0 - pibar) * (mval + s * mval.square()) +
                                   pibar * (1.0 - pibar) * mval.square();
                             },
                             rng));
      worst_mackay = std::max(
          worst_mackay, std::fabs(pibar - testsupport::gh_expect(logistic, m_pi, v_pi, 64)));
    }
  }
  detail = fmt("%ld comparisons: %ld outside 3 SE (<=1%%), worst %.1f SE; plug-in prob err "
               "%.4f (<=0.01)",
               gate.total, gate.outside, gate.worst_z, worst_mackay);
  return gate.pass() && worst_mackay <= 0.01;
}

// ---------------------------------------------------------------------------
// 6. Elliptical slice sampling reproduces a conjugate 5-d Gaussian posterior.
// ---------------------------------------------------------------------------
bool criterion6(std::string& detail) {
  Rng rng = Rng::stream(42, {1});
  const int d = 5;
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  const Mat sigma = a * a.transpose() / d + Mat::Identity(d, d);
  Vec noise(d), y(d);
  for (int i = 0; i < d; ++i) {
    noise[i] = 0.5 + 1.5 * rng.uniform();
    y[i] = 2.0 * rng.normal();
  }
  const Mat post_cov =
      (sigma.inverse() + Mat(noise.cwiseInverse().asDiagonal())).inverse();
  const Vec post_mean = post_cov * noise.cwiseInverse().asDiagonal() * y;

  Eigen::LLT<Mat> prior_chol(sigma);
  auto prior = [&] { return Vec(prior_chol.matrixL() * normal_vec(d, rng)); };
  auto lik = [&](const Vec& v) {
    return -0.5 * ((y - v).array().square() / noise.array()).sum();
  };

  Vec w = post_mean;
  const int steps = 200000;
  std::vector<std::vector<double>> chains(d), sq(d);
  for (int t = 0; t < steps; ++t) {
    w = ess_step(w, prior, lik, rng);
    for (int i = 0; i < d; ++i) {
      chains[static_cast<size_t>(i)].push_back(w[i]);
      const double c = w[i] - post_mean[i];
      sq[static_cast<size_t>(i)].push_back(c * c);
    }
  }
  double worst_z = 0.0;
  for (int i = 0; i < d; ++i) {
    const double m = testsupport::mean_of(chains[static_cast<size_t>(i)]);
    const double se = testsupport::batch_means_se(chains[static_cast<size_t>(i)], 200);
    worst_z = std::max(worst_z, std::fabs(m - post_mean[i]) / se);
    const double v = testsupport::mean_of(sq[static_cast<size_t>(i)]);
    const double se_v = testsupport::batch_means_se(sq[static_cast<size_t>(i)], 200);
    worst_z = std::max(worst_z, std::fabs(v - post_cov(i, i)) / se_v);
  }
  detail = fmt("2e5 steps, 5 coordinates: worst moment deviation %.2f SE (<=3)", worst_z);
  return worst_z <= 3.0;
}

// ---------------------------------------------------------------------------
// 7. Training recovers a single-GP surface: effective lengthscale within a
//    factor of two and held-out NRMSE <= 0.1, in at least 18 of 20 seeds.
//    The top-layer lengthscale lives on the warped hidden coordinate, so it
//    is mapped back through the (near-linear) warp by the sd ratio.
// ---------------------------------------------------------------------------
bool criterion7(std::string& detail) {
  const int n_train = 100, n_test = 200;
  const double gamma_truth = 0.3;
  int wins = 0;
  double worst_nrmse = 0.0;
  for (int s = 0; s < 20; ++s) {
    Rng gen = Rng::stream(9700 + static_cast<std::uint64_t>(s), {1});
    const Mat x_train = grid1d(n_train);
    const Mat x_test = grid1d(n_test, 0.002, 0.998);
    Mat x_all(n_train + n_test, 1);
    x_all << x_train, x_test;
    const KernelSpec truth =
        KernelSpec::isotropic(KernelFamily::Matern25, 1, gamma_truth, 1.0, 1e-8);
    const Vec f_all = chol_draw(corr_matrix(truth, x_all), gen);
    const Vec f_test = f_all.tail(n_test);
    Vec y(n_train);
    for (int i = 0; i < n_train; ++i) y[i] = f_all[i] + 0.05 * gen.normal();

    const Architecture arch = build_default(1, LikelihoodSpec::from_name("hetgauss"));
    Dataset data = ingest(x_train, y);
    SemConfig cfg;
    cfg.T = 20;
    cfg.B = 10;
    cfg.C = 3;
    cfg.K = 6;
    cfg.thinning = 2;
    cfg.seed = 20260800 + static_cast<std::uint64_t>(s);
    const GdgpModel model = sem_train(data, arch, cfg);

    // The hidden warp is identified only up to sign and scale, so the
    // recovered lengthscale is read off per imputation (sd is sign-free) and
    // mapped back to input units through the near-linear warp's sd ratio.
    std::vector<double> sds;
    for (const LatentState& imp : model.imputations) {
      const Vec& w = imp.node(0, 0);
      sds.push_back(std::sqrt((w.array() - w.mean()).square().mean()));
    }
    std::nth_element(sds.begin(), sds.begin() + sds.size() / 2, sds.end());
    const double sd_w = sds[sds.size() / 2];
    const Mat& xs = model.train_inputs;
    const double sd_x = std::sqrt((xs.col(0).array() - xs.col(0).mean()).square().mean());
    const double gamma_eff = model.kernels[1][0].lengthscales[0] * sd_x / sd_w;

    const Prediction pred = predict_moments(model, x_test);
    const double nr = nrmse(f_test, pred.mean);
    worst_nrmse = std::max(worst_nrmse, nr);
    if (gamma_eff >= 0.5 * gamma_truth && gamma_eff <= 2.0 * gamma_truth && nr <= 0.1)
      ++wins;
  }
  detail = fmt("%d/20 seeds recovered (need >=18); worst NRMSE %.3f", wins, worst_nrmse);
  return wins >= 18;
}

// ---------------------------------------------------------------------------
// 8. Step-mean / variance-spike data: the heteroskedastic two-layer model
//    beats a homoskedastic stationary GP on mean NRMSE in >=18 of 20 seeds.
// ---------------------------------------------------------------------------
bool criterion8(std::string& detail) {
  const int n_loc = 100, reps = 20, n_test = 300;
  const Mat x = grid1d(n_loc);
  const Mat x_test = grid1d(n_test);
  Vec truth_mean(n_test);
  for (int i = 0; i < n_test; ++i) truth_mean[i] = step1d_true_mean(x_test(i, 0));

  int wins = 0;
  double sum_gdgp = 0.0, sum_base = 0.0;
  for (int s = 0; s < 20; ++s) {
    Mat raw(n_loc * reps, 1);
    Vec y(n_loc * reps);
    for (int i = 0; i < n_loc; ++i)
      for (int r = 0; r < reps; ++r) {
        Rng draw = Rng::stream(9800 + static_cast<std::uint64_t>(s),
                               {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r)});
        raw(i * reps + r, 0) = x(i, 0);
        y[i * reps + r] = step1d(x(i, 0), draw);
      }
    const Dataset data = ingest(raw, y);

    SemConfig cfg;
    cfg.T = 25;
    cfg.B = 12;
    cfg.C = 4;
    cfg.K = 8;
    cfg.thinning = 2;
    cfg.seed = 20260810 + static_cast<std::uint64_t>(s);
    const GdgpModel model =
        sem_train(data, build_default(1, LikelihoodSpec::from_name("hetgauss")), cfg);
    const double nr_gdgp = nrmse(truth_mean, predict_moments(model, x_test).mean);

    // Homoskedastic stationary baseline: one GP over the replicate means with
    // a free nugget (profile amplitude), the usual collapse of a constant-
    // noise GP on the raw rows at equal replication.
    const Vec means = data.replicate_means();
    const double ym = means.mean();
    const double ys = std::sqrt((means.array() - ym).square().mean());
    const Vec z = (means.array() - ym) / ys;
    NodeOptions opts;
    opts.eta_free = true;
    opts.restarts = 3;
    Rng orng = Rng::stream(9900 + static_cast<std::uint64_t>(s), {1});
    const KernelSpec k0 = KernelSpec::isotropic(KernelFamily::Matern25, 1, 0.3, 1.0, 0.05);
    const KernelSpec k = optimize_node(k0, x, z, nullptr, opts, orng);
    Eigen::LLT<Mat> llt(corr_matrix(k, x));
    const Vec alpha = llt.solve(z);
    const Vec base_mean =
        (cross_correlation(k, x_test, x) * alpha).array() * ys + ym;
    const double nr_base = nrmse(truth_mean, base_mean);

    sum_gdgp += nr_gdgp;
    sum_base += nr_base;
    if (nr_gdgp < nr_base) ++wins;
  }
  detail = fmt("%d/20 seeds better (need >=18); mean NRMSE %.3f vs baseline %.3f",
               wins, sum_gdgp / 20.0, sum_base / 20.0);
  return wins >= 18;
}

// ---------------------------------------------------------------------------
// 9. Nearest-neighbor training quality is monotone in the conditioning-set
//    size on a fixed 5-d epidemic-simulator problem, and the largest set is
//    within 0.1 Score units of full training.
// ---------------------------------------------------------------------------
bool criterion9(std::string& detail) {
  const int n_loc = 200, reps = 5, n_test = 300;
  Rng drng = Rng::stream(9910, {1});
  const Mat u = latin_hypercube(n_loc, 5, drng);
  Mat raw(n_loc * reps, 5);
  Vec y(n_loc * reps);
  for (int i = 0; i < n_loc; ++i)
    for (int r = 0; r < reps; ++r) {
      Rng e = Rng::stream(9910, {2, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r)});
      raw.row(i * reps + r) = u.row(i);
      y[i * reps + r] = sir5d(u.row(i).transpose(), e);
    }
  const Dataset data = ingest(raw, y);
  Rng trng = Rng::stream(9910, {3});
  const Mat u_test = latin_hypercube(n_test, 5, trng);
  Vec y_test(n_test);
  for (int i = 0; i < n_test; ++i) {
    Rng e = Rng::stream(9910, {4, static_cast<std::uint64_t>(i)});
    y_test[i] = sir5d(u_test.row(i).transpose(), e);
  }

  const Architecture arch = build_default(5, LikelihoodSpec::from_name("hetgauss"));
  const int m_values[4] = {5, 15, 25, 50};
  double avg[5] = {0, 0, 0, 0, 0};  // four conditioning sizes plus full
  const int n_seeds = 10;
  for (int s = 0; s < n_seeds; ++s) {
    for (int c = 0; c < 5; ++c) {
      VecchiaConfig vc;
      if (c < 4) {
        vc.enabled = true;
        vc.m_train = m_values[c];
        vc.m_pred = 200;
        vc.mu_dense_threshold = 0;
      }
      SemConfig cfg;
      cfg.T = 12;
      cfg.B = 6;
      cfg.C = 3;
      cfg.K = 5;
      cfg.thinning = 2;
      cfg.seed = 20260820 + static_cast<std::uint64_t>(s);
      const GdgpModel model = sem_train(data, arch, cfg, vc);
      const Prediction pred = predict_moments(model, u_test);
      avg[c] += score(y_test, pred.mean, pred.variance) / n_seeds;
    }
  }
  const bool monotone = avg[0] <= avg[1] && avg[1] <= avg[2] && avg[2] <= avg[3];
  const double gap = std::fabs(avg[3] - avg[4]);
  detail = fmt("mean Score m=5:%.3f 15:%.3f 25:%.3f 50:%.3f full:%.3f; gap %.3f (<=0.1)",
               avg[0], avg[1], avg[2], avg[3], avg[4], gap);
  return monotone && gap <= 0.1;
}

// ---------------------------------------------------------------------------
// 10. Three-class flower classification: mean balanced accuracy >= 90% and
//     mean logloss <= 0.3 over 5 stratified 90/10 splits.
// ---------------------------------------------------------------------------
bool criterion10(std::string& detail) {
  const CsvTable table = read_csv(GDGP_IRIS_PATH);
  Mat x;
  Vec yv;
  split_xy(table, &x, &yv);
  const int n = static_cast<int>(x.rows());
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<int>(yv[i]);

  double acc_sum = 0.0, ll_sum = 0.0;
  for (int split = 0; split < 5; ++split) {
    // Stratified 10% test set: five held-out instances per class, so both
    // class-balanced metrics are defined on every split.
    Rng srng = Rng::stream(9920, {static_cast<std::uint64_t>(split)});
    std::vector<int> test_idx;
    for (int c = 1; c <= 3; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (labels[static_cast<size_t>(i)] == c) members.push_back(i);
      for (size_t i = members.size(); i > 1; --i)
        std::swap(members[i - 1], members[srng.uniform_int(i)]);
      test_idx.insert(test_idx.end(), members.begin(), members.begin() + 5);
    }
    std::vector<bool> is_test(static_cast<size_t>(n), false);
    for (int i : test_idx) is_test[static_cast<size_t>(i)] = true;

    Mat x_train(n - 15, 4), x_test(15, 4);
    Vec y_train(n - 15);
    std::vector<int> y_test;
    int a = 0, b = 0;
    for (int i = 0; i < n; ++i) {
      if (is_test[static_cast<size_t>(i)]) {
        x_test.row(b++) = x.row(i);
        y_test.push_back(labels[static_cast<size_t>(i)]);
      } else {
        x_train.row(a) = x.row(i);
        y_train[a++] = yv[i];
      }
    }

    const LikelihoodSpec cat = LikelihoodSpec::from_name("categorical", 3);
    SemConfig cfg;
    cfg.T = 20;
    cfg.B = 10;
    cfg.C = 3;
    cfg.K = 8;
    cfg.thinning = 2;
    cfg.seed = 20260830 + static_cast<std::uint64_t>(split);
    const GdgpModel model = sem_train(ingest(x_train, y_train), build_default(4, cat), cfg);

    SampleOptions opts;
    opts.seed = 20260840 + static_cast<std::uint64_t>(split);
    const SampleSet samples = predict_samples(model, x_test, opts);
    acc_sum += accuracy(y_test, samples.class_probs);
    ll_sum += logloss(y_test, samples.class_probs);
  }
  const double acc = acc_sum / 5.0, ll = ll_sum / 5.0;
  detail = fmt("mean balanced accuracy %.2f%% (>=90), mean logloss %.3f (<=0.3)", acc, ll);
  return acc >= 90.0 && ll <= 0.3;
}

// ---------------------------------------------------------------------------
// 11. Count data from the predator-prey simulator: the Poisson emulator
//     beats a Poisson GLM on test NLL in >=8 of 10 seeds, and the
//     zero-inflated negative binomial emulator is at least as good as the
//     Poisson one in >=8 of 10 seeds.
// ---------------------------------------------------------------------------
double mixture_nll(const GdgpModel& model, const Mat& x_raw, const Vec& y) {
  const Mat xs = model.scaling.scale_inputs(x_raw);
  const int k_imp = static_cast<int>(model.imputations.size());
  Mat logp(y.size(), k_imp);
  for (int k = 0; k < k_imp; ++k) {
    const LgpPredictor predictor(model, k);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const NodeMoments nm = predictor.forward(xs.row(i).transpose());
      const Vec phi = inv_link(model.arch.likelihood, nm.mean);
      logp(i, k) = log_density(model.arch.likelihood, y[i], phi);
    }
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += -(logsumexp(logp.row(i).transpose()) - std::log(static_cast<double>(k_imp)));
  return acc / static_cast<double>(y.size());
}

bool criterion11(std::string& detail) {
  const SimulatorSpec sim = SimulatorSpec::from_name("predprey4d");
  const int n_loc = 100, n_test = 200;
  int wins_glm = 0, wins_zinb = 0;
  double sum_pois = 0.0, sum_glm = 0.0, sum_zinb = 0.0;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t base = 9930 + static_cast<std::uint64_t>(s);
    Rng drng = Rng::stream(base, {1});
    Mat design = latin_hypercube(n_loc, 4, drng);
    for (int d = 0; d < 4; ++d)
      design.col(d) =
          (design.col(d).array() * (sim.bounds(d, 1) - sim.bounds(d, 0)) + sim.bounds(d, 0))
              .matrix();
    std::vector<double> ys;
    std::vector<int> row_of;
    for (int i = 0; i < n_loc; ++i) {
      Rng c = Rng::stream(base, {2, static_cast<std::uint64_t>(i)});
      const int reps = 1 + static_cast<int>(c.uniform_int(10));  // <= 10 replicates
      for (int r = 0; r < reps; ++r) {
        Rng e = Rng::stream(base, {3, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(r)});
        ys.push_back(static_cast<double>(predprey4d(design.row(i).transpose(), e)));
        row_of.push_back(i);
      }
    }
    Mat raw(static_cast<long>(ys.size()), 4);
    Vec y(static_cast<long>(ys.size()));
    for (size_t r = 0; r < ys.size(); ++r) {
      raw.row(static_cast<long>(r)) = design.row(row_of[r]);
      y[static_cast<long>(r)] = ys[r];
    }
    const Dataset data = ingest(raw, y);

    Rng trng = Rng::stream(base, {4});
    Mat x_test = latin_hypercube(n_test, 4, trng);
    for (int d = 0; d < 4; ++d)
      x_test.col(d) =
          (x_test.col(d).array() * (sim.bounds(d, 1) - sim.bounds(d, 0)) + sim.bounds(d, 0))
              .matrix();
    Vec y_test(n_test);
    for (int i = 0; i < n_test; ++i) {
      Rng e = Rng::stream(base, {5, static_cast<std::uint64_t>(i)});
      y_test[i] = static_cast<double>(predprey4d(x_test.row(i).transpose(), e));
    }

    SemConfig cfg;
    cfg.T = 15;
    cfg.B = 7;
    cfg.C = 3;
    cfg.K = 5;
    cfg.thinning = 2;
    cfg.seed = 20260850 + static_cast<std::uint64_t>(s);
    const GdgpModel pois =
        sem_train(data, build_default(4, LikelihoodSpec::from_name("poisson")), cfg);
    const GdgpModel zinb =
        sem_train(data, build_default(4, LikelihoodSpec::from_name("zinb")), cfg);
    const double nll_pois = mixture_nll(pois, x_test, y_test);
    const double nll_zinb = mixture_nll(zinb, x_test, y_test);

    const Vec beta = poisson_glm_fit(raw, y);
    const Vec lam = poisson_glm_mean(x_test, beta);
    const double nll_glm =
        nll(LikelihoodSpec::from_name("poisson"), y_test, Mat(lam));

    sum_pois += nll_pois;
    sum_glm += nll_glm;
    sum_zinb += nll_zinb;
    if (nll_pois < nll_glm) ++wins_glm;
    if (nll_zinb <= nll_pois) ++wins_zinb;
    const double zero_frac = (y.array() == 0.0).count() / static_cast<double>(y.size());
    std::fprintf(stderr,
                 "C11-SEED %d pois %.3f zinb %.3f glm %.3f zero%% %.2f ytrain-mean %.1f "
                 "ytrain-var/mean %.1f ytest-zero%% %.2f\n",
                 s, nll_pois, nll_zinb, nll_glm, zero_frac, y.mean(),
                 (y.array() - y.mean()).square().mean() / y.mean(),
                 (y_test.array() == 0.0).count() / static_cast<double>(n_test));
  }
  detail = fmt("poisson<glm %d/10, zinb<=poisson %d/10 (need >=8); mean NLL %.2f/%.2f/%.2f",
               wins_glm, wins_zinb, sum_pois / 10.0, sum_glm / 10.0, sum_zinb / 10.0);
  return wins_glm >= 8 && wins_zinb >= 8;
}

// ---------------------------------------------------------------------------
// 12. The command-line pipeline is bytewise deterministic under a fixed seed.
// ---------------------------------------------------------------------------
int run_cli(const std::string& args) {
  const std::string cmd = "env -u GDGP_SEED \"" GDGP_CLI_PATH "\" " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

bool criterion12(std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gdgp_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data.csv").string();
  const std::string test = (dir / "test.csv").string();
  if (run_cli("simulate --simulator step1d --design grid --n 20 --reps 3 --seed 9 --out \"" +
              data + "\"") != 0)
    return false;
  write_text_file(test, "x1\n0.1\n0.3\n0.5\n0.7\n0.9\n");

  std::string model[2], pred[2];
  for (int pass = 0; pass < 2; ++pass) {
    const std::string tag = pass == 0 ? "a" : "b";
    model[pass] = (dir / ("model_" + tag + ".json")).string();
    pred[pass] = (dir / ("pred_" + tag + ".csv")).string();
    if (run_cli("train --data \"" + data + "\" --out \"" + model[pass] +
                "\" --sem-iters 3 --burnin 1 --ess-steps 2 --imputations 2 --thin 1 "
                "--seed 31") != 0)
      return false;
    if (run_cli("predict --model \"" + model[pass] + "\" --data \"" + test +
                "\" --out \"" + pred[pass] + "\"") != 0)
      return false;
  }
  const bool same_model = read_text_file(model[0]) == read_text_file(model[1]);
  const bool same_pred = read_text_file(pred[0]) == read_text_file(pred[1]);
  detail = fmt("archive bytes %s, prediction bytes %s",
               same_model ? "identical" : "DIFFER", same_pred ? "identical" : "DIFFER");
  return same_model && same_pred;
}

struct Criterion {
  int id;
  const char* name;
  bool (*run)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "factored log-likelihood exactness", criterion1},
    {2, "kernel moment closed forms vs quadrature", criterion2},
    {3, "mean-channel posterior equivalences", criterion3},
    {4, "layered forward pass vs push-through MC", criterion4},
    {5, "predictive response moments vs latent MC", criterion5},
    {6, "elliptical slice conjugate calibration", criterion6},
    {7, "training recovery of a single-GP surface", criterion7},
    {8, "step data: heteroskedastic vs stationary GP", criterion8},
    {9, "conditioning-set size quality trend", criterion9},
    {10, "three-class flower classification", criterion10},
    {11, "count emulators vs GLM on predator-prey", criterion11},
    {12, "pipeline byte determinism", criterion12},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> want;
  for (int i = 1; i < argc; ++i) want.push_back(std::atoi(argv[i]));
  int failures = 0, ran = 0;
  for (const Criterion& c : kCriteria) {
    if (!want.empty() && std::find(want.begin(), want.end(), c.id) == want.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string info;
    bool ok = false;
    try {
      ok = c.run(info);
    } catch (const std::exception& e) {
      info = fmt("exception: %s", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%2d] %s  %-46s %s  (%.1fs)\n", c.id, ok ? "PASS" : "FAIL", c.name,
                info.c_str(), secs);
    std::fflush(stdout);
    ++ran;
    failures += ok ? 0 : 1;
  }
  std::printf("acceptance: %d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
