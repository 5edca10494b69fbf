#pragma once

#include <vector>

#include "gdgp/kernel.hpp"
#include "gdgp/likelihood.hpp"
#include "gdgp/rng.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

// Layer/node layout of the deep GP.  The last layer has one node per
// likelihood parameter; every node carries its own kernel.
struct Architecture {
  int layer_count = 0;
  std::vector<int> nodes_per_layer;
  LikelihoodSpec likelihood;
  KernelFamily kernel_family = KernelFamily::Matern25;

  int nodes_in(int layer) const { return nodes_per_layer.at(layer); }
  void validate() const;
};

// Two hidden-layer nodes per input dimension is the default: L=2, P_1=D,
// P_2=Q, isotropic Matern-2.5 kernels.
Architecture build_default(int input_dim, const LikelihoodSpec& likelihood);

// Observations grouped by unique design point.  outputs[i] holds the S_i
// replicate values of location i; replication_map sends each raw row to its
// unique-input index in first-seen order.
struct Dataset {
  Mat inputs;                                // N x D, pairwise-distinct rows
  std::vector<std::vector<double>> outputs;  // group i -> S_i >= 1 values
  std::vector<int> replication_map;          // length sum S_i

  int n() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  int total_obs() const { return static_cast<int>(replication_map.size()); }
  int group_size(int i) const { return static_cast<int>(outputs.at(i).size()); }
  Vec replicate_means() const;
  Vec flat_outputs() const;  // raw rows in replication_map order
  void validate(const LikelihoodSpec& likelihood) const;
};

// Groups rows sharing an identical input vector (exact equality, no fuzzy
// matching); unique inputs keep first-seen order.
Dataset ingest(const Mat& raw_inputs, const Vec& raw_outputs);

// Affine maps recorded with the model: inputs to [0,1] per dimension, the
// Gaussian-mean output channel to zero mean / unit variance.  Count, class,
// and positive-continuous outputs pass through unchanged.
struct ScalingInfo {
  Vec x_min, x_range;  // degenerate dimensions get range 1 and centre 0.5
  double y_mean = 0.0;
  double y_scale = 1.0;

  static ScalingInfo fit(const Dataset& data, const LikelihoodSpec& likelihood);
  Mat scale_inputs(const Mat& x) const;
  double scale_output(double y) const { return (y - y_mean) / y_scale; }
  double unscale_output(double y) const { return y_mean + y_scale * y; }
};

// Returns a copy of data with inputs in [0,1]^D and outputs on the
// training scale.
Dataset apply_scaling(const Dataset& data, const ScalingInfo& scaling);

// One imputation of every latent vector: node(l,p) has length N (unique
// locations, not sum S_i) for all replicate profiles.
struct LatentState {
  std::vector<std::vector<Vec>> layers;

  Vec& node(int layer, int p) { return layers.at(layer).at(p); }
  const Vec& node(int layer, int p) const { return layers.at(layer).at(p); }
  int layer_count() const { return static_cast<int>(layers.size()); }
  Mat layer_matrix(int layer) const;  // N x P_layer, nodes as columns
  void validate(const Architecture& arch, int n) const;
};

// Hidden layers start at the scaled input coordinates; the last layer starts
// at link-transformed per-location empirical estimates.  Everything gets a
// small seeded jitter.  Expects a dataset already passed through
// apply_scaling.
LatentState init_latent(const Dataset& scaled_data, const Architecture& arch, Rng& rng);

struct VecchiaConfig {
  bool enabled = false;
  int m_train = 50;
  int m_pred = 200;
  // Below this many unique locations the exact heteroskedastic-mean posterior
  // is used even in Vecchia mode.
  int mu_dense_threshold = 500;
};

// A fitted emulator: kernels hold the point estimates, imputations the K
// retained latent draws at those estimates.
struct GdgpModel {
  Architecture arch;
  std::vector<std::vector<KernelSpec>> kernels;  // [layer][node]
  std::vector<LatentState> imputations;          // K >= 1 after fitting
  Mat train_inputs;                              // scaled, N x D
  ScalingInfo scaling;
  VecchiaConfig vecchia;

  int n() const { return static_cast<int>(train_inputs.rows()); }
  void validate() const;
};

}  // namespace gdgp
