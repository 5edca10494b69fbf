#include "gdgp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

namespace gdgp {
namespace {

constexpr double kVarFloor = 1e-6;   // floor for empirical initial variances
constexpr double kInitJitter = 1e-4;

double logit(double p) { return std::log(p / (1.0 - p)); }

// Per-location summaries of a replicate group.
struct GroupStats {
  double mean = 0.0;
  double var = 0.0;  // sample variance, 0 when S_i = 1
  double zero_frac = 0.0;
};

GroupStats group_stats(const std::vector<double>& ys) {
  GroupStats g;
  for (double y : ys) {
    g.mean += y;
    if (y == 0.0) g.zero_frac += 1.0;
  }
  const double s = static_cast<double>(ys.size());
  g.mean /= s;
  g.zero_frac /= s;
  if (ys.size() > 1) {
    double acc = 0.0;
    for (double y : ys) acc += (y - g.mean) * (y - g.mean);
    g.var = acc / (s - 1.0);
  }
  return g;
}

// Hash on the byte representation of a row; -0.0 normalized so that equal
// doubles hash equally.
struct RowKey {
  std::vector<double> v;
  bool operator==(const RowKey& o) const { return v == o.v; }
};

struct RowKeyHash {
  size_t operator()(const RowKey& k) const {
    size_t h = 0xcbf29ce484222325ull;
    for (double d : k.v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      h = (h ^ bits) * 0x100000001b3ull;
    }
    return h;
  }
};

}  // namespace

void Architecture::validate() const {
  if (layer_count < 2) throw std::invalid_argument("architecture needs at least 2 layers");
  if (static_cast<int>(nodes_per_layer.size()) != layer_count)
    throw std::invalid_argument("nodes_per_layer size must equal layer_count");
  for (int p : nodes_per_layer)
    if (p < 1) throw std::invalid_argument("every layer needs at least one node");
  likelihood.validate();
  if (nodes_per_layer.back() != likelihood.param_count())
    throw std::invalid_argument("last layer must have one node per likelihood parameter");
}

Architecture build_default(int input_dim, const LikelihoodSpec& likelihood) {
  if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
  likelihood.validate();
  Architecture arch;
  arch.layer_count = 2;
  arch.nodes_per_layer = {input_dim, likelihood.param_count()};
  arch.likelihood = likelihood;
  arch.kernel_family = KernelFamily::Matern25;
  arch.validate();
  return arch;
}

Vec Dataset::replicate_means() const {
  Vec m(n());
  for (int i = 0; i < n(); ++i) {
    double acc = 0.0;
    for (double y : outputs[i]) acc += y;
    m[i] = acc / outputs[i].size();
  }
  return m;
}

Vec Dataset::flat_outputs() const {
  Vec y(total_obs());
  std::vector<int> next(n(), 0);
  for (int r = 0; r < total_obs(); ++r) {
    const int i = replication_map[r];
    y[r] = outputs[i][next[i]++];
  }
  return y;
}

void Dataset::validate(const LikelihoodSpec& likelihood) const {
  if (n() == 0) throw std::invalid_argument("dataset is empty");
  if (static_cast<int>(outputs.size()) != n())
    throw std::invalid_argument("output group count must match input rows");
  std::vector<int> counts(n(), 0);
  for (int i : replication_map) {
    if (i < 0 || i >= n()) throw std::invalid_argument("replication_map index out of range");
    ++counts[i];
  }
  for (int i = 0; i < n(); ++i) {
    if (outputs[i].empty()) throw std::invalid_argument("every location needs a replicate");
    if (counts[i] != group_size(i))
      throw std::invalid_argument("replication_map inconsistent with group sizes");
  }
  if (!inputs.allFinite()) throw std::invalid_argument("non-finite input");
  for (const auto& group : outputs)
    for (double y : group) {
      if (!std::isfinite(y)) throw std::invalid_argument("non-finite output");
      if (likelihood.id == LikelihoodId::Categorical) {
        if (y != std::floor(y) || y < 1.0 || y > likelihood.classes)
          throw std::invalid_argument("class labels must be integers in 1..classes");
      } else if (likelihood.discrete() && (y != std::floor(y) || y < 0.0)) {
        throw std::invalid_argument("count outputs must be non-negative integers");
      }
    }
}

Dataset ingest(const Mat& raw_inputs, const Vec& raw_outputs) {
  const int rows = static_cast<int>(raw_inputs.rows());
  const int dim = static_cast<int>(raw_inputs.cols());
  if (rows == 0 || dim == 0) throw std::invalid_argument("ingest needs at least one row");
  if (raw_outputs.size() != rows)
    throw std::invalid_argument("input and output row counts differ");
  if (!raw_inputs.allFinite()) throw std::invalid_argument("non-finite input value");

  Dataset data;
  data.replication_map.resize(rows);
  std::unordered_map<RowKey, int, RowKeyHash> seen;
  std::vector<int> order;  // first-seen unique row indices into raw_inputs
  for (int r = 0; r < rows; ++r) {
    RowKey key;
    key.v.resize(dim);
    for (int d = 0; d < dim; ++d) key.v[d] = raw_inputs(r, d) + 0.0;  // -0 -> +0
    auto [it, fresh] = seen.emplace(std::move(key), static_cast<int>(order.size()));
    if (fresh) {
      order.push_back(r);
      data.outputs.emplace_back();
    }
    data.replication_map[r] = it->second;
    data.outputs[it->second].push_back(raw_outputs[r]);
  }
  data.inputs.resize(static_cast<int>(order.size()), dim);
  for (size_t i = 0; i < order.size(); ++i) data.inputs.row(i) = raw_inputs.row(order[i]);
  return data;
}

ScalingInfo ScalingInfo::fit(const Dataset& data, const LikelihoodSpec& likelihood) {
  ScalingInfo s;
  s.x_min = data.inputs.colwise().minCoeff();
  Vec x_max = data.inputs.colwise().maxCoeff();
  s.x_range = x_max - s.x_min;
  for (int d = 0; d < s.x_range.size(); ++d) {
    if (s.x_range[d] <= 0.0) {
      s.x_range[d] = 1.0;
      s.x_min[d] = x_max[d] - 0.5;  // constant dimension maps to 0.5
    }
  }
  if (likelihood.id == LikelihoodId::HeteroGaussian) {
    const Vec y = data.flat_outputs();
    s.y_mean = y.mean();
    const double ss = (y.array() - s.y_mean).square().sum();
    s.y_scale = y.size() > 1 ? std::sqrt(ss / (y.size() - 1.0)) : 0.0;
    if (s.y_scale <= 0.0) s.y_scale = 1.0;
  }
  return s;
}

Mat ScalingInfo::scale_inputs(const Mat& x) const {
  if (x.cols() != x_min.size()) throw std::invalid_argument("input dimension mismatch");
  return (x.rowwise() - x_min.transpose()).array().rowwise() /
         x_range.transpose().array();
}

Dataset apply_scaling(const Dataset& data, const ScalingInfo& scaling) {
  Dataset out = data;
  out.inputs = scaling.scale_inputs(data.inputs);
  if (scaling.y_mean != 0.0 || scaling.y_scale != 1.0)
    for (auto& group : out.outputs)
      for (double& y : group) y = scaling.scale_output(y);
  return out;
}

Mat LatentState::layer_matrix(int layer) const {
  const auto& nodes = layers.at(layer);
  if (nodes.empty()) throw std::invalid_argument("layer has no nodes");
  Mat m(nodes.front().size(), static_cast<Eigen::Index>(nodes.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) = nodes[j];
  return m;
}

void LatentState::validate(const Architecture& arch, int n) const {
  if (layer_count() != arch.layer_count)
    throw std::invalid_argument("latent state layer count mismatch");
  for (int l = 0; l < layer_count(); ++l) {
    if (static_cast<int>(layers[l].size()) != arch.nodes_in(l))
      throw std::invalid_argument("latent state node count mismatch");
    for (const Vec& w : layers[l]) {
      if (w.size() != n) throw std::invalid_argument("latent vector length must be N");
      if (!w.allFinite()) throw std::invalid_argument("non-finite latent value");
    }
  }
}

LatentState init_latent(const Dataset& scaled_data, const Architecture& arch, Rng& rng) {
  arch.validate();
  scaled_data.validate(arch.likelihood);
  const int n = scaled_data.n();
  const int dim = scaled_data.dim();
  const int L = arch.layer_count;

  std::vector<GroupStats> stats(n);
  for (int i = 0; i < n; ++i) stats[i] = group_stats(scaled_data.outputs[i]);

  LatentState state;
  state.layers.resize(L);
  for (int l = 0; l + 1 < L; ++l) {
    state.layers[l].resize(arch.nodes_in(l));
    for (int p = 0; p < arch.nodes_in(l); ++p)
      state.layers[l][p] = scaled_data.inputs.col(p % dim);
  }

  auto& top = state.layers[L - 1];
  top.assign(arch.nodes_in(L - 1), Vec(n));
  const LikelihoodSpec& lik = arch.likelihood;
  for (int i = 0; i < n; ++i) {
    const GroupStats& g = stats[i];
    switch (lik.id) {
      case LikelihoodId::HeteroGaussian:
        top[0][i] = g.mean;
        top[1][i] = std::log(std::max(g.var, kVarFloor));
        break;
      case LikelihoodId::Poisson:
        top[0][i] = std::log(g.mean + 0.5);
        break;
      case LikelihoodId::Exponential:
        top[0][i] = std::log(std::max(g.mean, kVarFloor));
        break;
      case LikelihoodId::Gamma: {
        const double mean = std::max(g.mean, kVarFloor);
        top[0][i] = std::log(mean);
        // Dispersion is the coefficient of variation under this
        // parameterization (var = mu^2 sigma^2).
        top[1][i] = 0.5 * std::log(std::max(g.var, kVarFloor) / (mean * mean));
        break;
      }
      case LikelihoodId::NegBinomial: {
        top[0][i] = std::log(g.mean + 0.5);
        const double mu = g.mean + 0.5;
        const double excess = std::max(g.var - mu, kVarFloor);
        top[1][i] = std::log(std::clamp(excess / (mu * mu), 1e-3, 1e3));
        break;
      }
      case LikelihoodId::Zip:
        top[0][i] = std::log(g.mean + 0.5);
        top[1][i] = logit(std::clamp(g.zero_frac, 0.02, 0.98));
        break;
      case LikelihoodId::Zinb: {
        top[0][i] = std::log(g.mean + 0.5);
        const double mu = g.mean + 0.5;
        const double excess = std::max(g.var - mu, kVarFloor);
        top[1][i] = std::log(std::clamp(excess / (mu * mu), 1e-3, 1e3));
        top[2][i] = logit(std::clamp(g.zero_frac, 0.02, 0.98));
        break;
      }
      case LikelihoodId::Categorical: {
        // Smoothed per-location class frequencies.
        const auto& ys = scaled_data.outputs[i];
        const double alpha = 0.5;
        for (int c = 0; c < lik.classes; ++c) {
          double count = 0.0;
          for (double y : ys)
            if (static_cast<int>(y) == c + 1) count += 1.0;
          top[c][i] = std::log((count + alpha) / (ys.size() + alpha * lik.classes));
        }
        break;
      }
    }
  }

  for (auto& layer : state.layers)
    for (Vec& w : layer)
      for (int i = 0; i < n; ++i) w[i] += kInitJitter * rng.normal();
  state.validate(arch, n);
  return state;
}

void GdgpModel::validate() const {
  arch.validate();
  if (static_cast<int>(kernels.size()) != arch.layer_count)
    throw std::invalid_argument("kernel layer count mismatch");
  for (int l = 0; l < arch.layer_count; ++l) {
    if (static_cast<int>(kernels[l].size()) != arch.nodes_in(l))
      throw std::invalid_argument("kernel node count mismatch");
    const int in_dim = l == 0 ? static_cast<int>(train_inputs.cols()) : arch.nodes_in(l - 1);
    for (const KernelSpec& k : kernels[l]) {
      k.validate();
      if (k.dim() != in_dim) throw std::invalid_argument("kernel input dimension mismatch");
    }
  }
  if (imputations.empty()) throw std::invalid_argument("fitted model needs an imputation");
  for (const LatentState& s : imputations) s.validate(arch, n());
}

}  // namespace gdgp
