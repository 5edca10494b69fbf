#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gdgp/model.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

struct PredictDiagnostics {
  // Propagated variances that round-off pushed slightly below zero and that
  // were clamped back to zero.
  long long variance_clamps = 0;
};

// Per-node predictive moments of one imputation at one test point: the
// normal approximation of each final-layer latent f^(q)(x0).
struct NodeMoments {
  Vec mean;  // Q entries
  Vec var;   // Q entries, >= 0 after clamping
};

// Aggregated prediction per test point, on the original output scale.
// Scalar likelihoods fill mean/variance; the categorical likelihood fills
// class_probs with rows summing to 1.
struct Prediction {
  Vec mean;
  Vec variance;
  Mat class_probs;  // n0 x classes, categorical only
};

// Forward pass through the layered recursion for a single stored imputation.
// Construction precomputes the training-side factorizations (or, in factored
// mode, the lengthscale-scaled neighbor indexes), so repeated forward() calls
// cost O(N^2) dense or O(M_pred^3) factored per test point.  The model is
// read-only throughout.
class LgpPredictor {
 public:
  LgpPredictor(const GdgpModel& model, int imputation);
  ~LgpPredictor();
  LgpPredictor(LgpPredictor&&) noexcept;
  LgpPredictor& operator=(LgpPredictor&&) noexcept;

  // x0_scaled lives on the training input scale ([0,1]^D coordinates).
  NodeMoments forward(const Vec& x0_scaled, PredictDiagnostics* diag = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Single-point convenience wrapper; builds the per-imputation caches each
// call, so prefer LgpPredictor when sweeping many test points.
NodeMoments lgp_forward(const GdgpModel& model, const Vec& x0_scaled, int imputation,
                        PredictDiagnostics* diag = nullptr);

// Closed-form predictive mean/variance per test point: per-imputation
// likelihood moments combined by the mean-of-means / mean-of-second-moments
// rule, accumulated in fixed imputation order.  Inputs and outputs are on
// the original (unscaled) axes.  Throws std::invalid_argument for the
// categorical likelihood, which has no closed form: use predict_samples.
Prediction predict_moments(const GdgpModel& model, const Mat& x0_raw,
                           PredictDiagnostics* diag = nullptr);

struct SampleOptions {
  int draws_per_imputation = 256;
  std::uint64_t seed = 0;
};

// Method-of-composition draws: per imputation and test point, sample the
// final-layer latents from their node normals, map through the inverse
// links, and draw y.  Scalar likelihoods return the draws (original scale,
// rows = imputations * draws_per_imputation, columns = test points);
// the categorical likelihood returns empirical class frequencies.
struct SampleSet {
  Mat draws;
  Mat class_probs;  // n0 x classes, categorical only
};

SampleSet predict_samples(const GdgpModel& model, const Mat& x0_raw, const SampleOptions& opts,
                          PredictDiagnostics* diag = nullptr);

}  // namespace gdgp
