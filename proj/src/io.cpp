#include "gdgp/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace gdgp {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string at_line(const std::string& origin, long line) {
  return origin + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(const std::string& field, const std::string& origin, long line,
                    const std::string& column) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError(at_line(origin, line) + "field '" + column + "' is not a number: '" +
                    field + "'");
  return v;
}

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= len; i += 3) {
    const unsigned v = (unsigned{data[i]} << 16) | (unsigned{data[i + 1]} << 8) | data[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
  }
  if (i + 1 == len) {
    const unsigned v = unsigned{data[i]} << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (i + 2 == len) {
    const unsigned v = (unsigned{data[i]} << 16) | (unsigned{data[i + 1]} << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0) throw DataError("invalid base64 payload length");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        // Padding may only fill the last one or two slots of the final group.
        if (i + 4 != text.size() || k < 2) throw DataError("invalid base64 padding");
        vals[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw DataError("invalid base64 padding");
        vals[k] = table[static_cast<unsigned char>(c)];
        if (vals[k] < 0) throw DataError("invalid base64 character");
      }
    }
    const unsigned v = (static_cast<unsigned>(vals[0]) << 18) |
                       (static_cast<unsigned>(vals[1]) << 12) |
                       (static_cast<unsigned>(vals[2]) << 6) | static_cast<unsigned>(vals[3]);
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
  }
  return out;
}

std::string encode_doubles(const double* data, Eigen::Index n) {
  std::vector<unsigned char> bytes(static_cast<std::size_t>(n) * 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, data + i, 8);
    for (int b = 0; b < 8; ++b)
      bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>(bits >> (8 * b));
  }
  return base64_encode(bytes.data(), bytes.size());
}

Vec decode_doubles(const std::string& text) {
  const std::vector<unsigned char> bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw DataError("numeric payload is not a multiple of 8 bytes");
  Vec out(static_cast<Eigen::Index>(bytes.size() / 8));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(
                  bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)])
              << (8 * b);
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

const char* family_name(KernelFamily f) {
  return f == KernelFamily::SquaredExponential ? "se" : "matern25";
}

KernelFamily family_from_name(const std::string& name, const std::string& origin) {
  if (name == "matern25") return KernelFamily::Matern25;
  if (name == "se") return KernelFamily::SquaredExponential;
  throw DataError(origin + ": unknown kernel family '" + name + "' (valid: matern25, se)");
}

void require_field(bool ok, const std::string& origin, const std::string& field,
                   const char* what) {
  if (!ok) throw DataError(origin + ": field '" + field + "' " + what);
}

}  // namespace

int CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require(const std::string& name) const {
  const int i = find(name);
  if (i < 0) throw DataError("missing required column '" + name + "'");
  return i;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::vector<double> cells;
  long rows = 0;
  long line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string line =
        text.substr(pos, (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (pos >= text.size()) break;  // single trailing blank line
      throw DataError(at_line(origin, line_no) + "blank line inside the table");
    }
    const std::vector<std::string> fields = split_fields(line);
    if (line_no == 1) {
      for (const std::string& name : fields) {
        if (name.empty())
          throw DataError(at_line(origin, 1) + "empty column name in header");
        if (std::find(table.columns.begin(), table.columns.end(), name) !=
            table.columns.end())
          throw DataError(at_line(origin, 1) + "duplicate column name '" + name + "'");
        table.columns.push_back(name);
      }
      continue;
    }
    if (fields.size() != table.columns.size())
      throw DataError(at_line(origin, line_no) + "expected " +
                      std::to_string(table.columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c)
      cells.push_back(parse_number(fields[c], origin, line_no, table.columns[c]));
    ++rows;
  }
  if (table.columns.empty())
    throw DataError(origin + ": empty file (a header row is required)");
  table.values.resize(rows, static_cast<Eigen::Index>(table.columns.size()));
  for (long r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < table.values.cols(); ++c)
      table.values(r, c) = cells[static_cast<std::size_t>(r) *
                                     static_cast<std::size_t>(table.values.cols()) +
                                 static_cast<std::size_t>(c)];
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

std::string format_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("failed to format a double");
  return std::string(buf, ptr);
}

std::string format_csv(const std::vector<std::string>& columns, const Mat& values) {
  if (values.size() > 0 && values.cols() != static_cast<Eigen::Index>(columns.size()))
    throw std::invalid_argument("format_csv: column count mismatch");
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out.push_back(',');
    out += columns[c];
  }
  out.push_back('\n');
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += format_double(values(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Mat& values) {
  write_text_file(path, format_csv(columns, values));
}

namespace {

// Columns x1..xD in index order; any other column besides y is rejected.
Mat collect_inputs(const CsvTable& table) {
  std::vector<int> x_cols;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const std::string& name = table.columns[c];
    if (name == "y") continue;
    bool numeric_suffix = name.size() > 1 && name[0] == 'x';
    for (std::size_t i = 1; i < name.size() && numeric_suffix; ++i)
      numeric_suffix = name[i] >= '0' && name[i] <= '9';
    if (!numeric_suffix)
      throw DataError("unexpected column '" + name + "' (expected x1..xD and y)");
    long index = 0;
    std::from_chars(name.data() + 1, name.data() + name.size(), index);
    if (index < 1 || static_cast<std::size_t>(index) > table.columns.size())
      throw DataError("input column '" + name + "' is outside x1..xD");
    x_cols.resize(std::max(x_cols.size(), static_cast<std::size_t>(index)), -1);
    if (x_cols[static_cast<std::size_t>(index - 1)] != -1)
      throw DataError("duplicate input column '" + name + "'");
    x_cols[static_cast<std::size_t>(index - 1)] = static_cast<int>(c);
  }
  if (x_cols.empty()) throw DataError("missing required columns x1..xD");
  for (std::size_t d = 0; d < x_cols.size(); ++d)
    if (x_cols[d] == -1)
      throw DataError("missing input column 'x" + std::to_string(d + 1) + "'");
  Mat x(table.values.rows(), static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t d = 0; d < x_cols.size(); ++d)
    x.col(static_cast<Eigen::Index>(d)) = table.values.col(x_cols[d]);
  return x;
}

}  // namespace

void split_xy(const CsvTable& table, Mat* x, Vec* y) {
  const int y_col = table.require("y");
  *x = collect_inputs(table);
  *y = table.values.col(y_col);
}

Mat input_matrix(const CsvTable& table) { return collect_inputs(table); }

std::string encode_vec(Eigen::Ref<const Vec> v) { return encode_doubles(v.data(), v.size()); }

Vec decode_vec(const std::string& text) { return decode_doubles(text); }

std::string encode_mat(const Mat& m) { return encode_doubles(m.data(), m.size()); }

Mat decode_mat(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
  const Vec flat = decode_doubles(text);
  if (flat.size() != rows * cols)
    throw DataError("matrix payload holds " + std::to_string(flat.size()) +
                    " values, expected " + std::to_string(rows * cols));
  return Eigen::Map<const Mat>(flat.data(), rows, cols);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
  return from_json_text_over(text, origin, RunConfig());
}

RunConfig RunConfig::from_json_text_over(const std::string& text, const std::string& origin,
                                         const RunConfig& base) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(origin + ": config must be a JSON object");

  RunConfig cfg = base;
  for (const auto& [key, value] : j.items()) {
    const auto read_int = [&](int& out) {
      require_field(value.is_number_integer(), origin, key, "must be an integer");
      out = value.template get<int>();
    };
    if (key == "likelihood") {
      require_field(value.is_string(), origin, key, "must be a string");
      cfg.likelihood = value.template get<std::string>();
    } else if (key == "kernel") {
      require_field(value.is_string(), origin, key, "must be a string");
      cfg.kernel = value.template get<std::string>();
    } else if (key == "classes") {
      read_int(cfg.classes);
    } else if (key == "hidden_nodes") {
      read_int(cfg.hidden_nodes);
    } else if (key == "sem_iters") {
      read_int(cfg.sem_iters);
    } else if (key == "burnin") {
      read_int(cfg.burnin);
    } else if (key == "ess_steps") {
      read_int(cfg.ess_steps);
    } else if (key == "imputations") {
      read_int(cfg.imputations);
    } else if (key == "thin") {
      read_int(cfg.thin);
    } else if (key == "seed") {
      // number_unsigned covers the full 64-bit range; a signed value must be
      // non-negative (negative literals are the only way to get that type).
      const bool ok = value.is_number_unsigned() ||
                      (value.is_number_integer() && value.template get<long long>() >= 0);
      require_field(ok, origin, key, "must be a non-negative integer");
      cfg.seed = value.template get<std::uint64_t>();
    } else if (key == "vecchia") {
      require_field(value.is_boolean(), origin, key, "must be a boolean");
      cfg.vecchia = value.template get<bool>();
    } else if (key == "m_train") {
      read_int(cfg.m_train);
    } else if (key == "m_pred") {
      read_int(cfg.m_pred);
    } else if (key == "mu_dense_threshold") {
      read_int(cfg.mu_dense_threshold);
    } else if (key == "threads") {
      read_int(cfg.threads);
    } else {
      throw DataError(origin + ": unknown config field '" + key + "'");
    }
  }
  return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  return from_json_text(read_text_file(path), path);
}

RunConfig RunConfig::from_json_file_over(const std::string& path, const RunConfig& base) {
  return from_json_text_over(read_text_file(path), path, base);
}

std::string RunConfig::to_json_text() const {
  ordered_json j;
  j["likelihood"] = likelihood;
  j["classes"] = classes;
  j["hidden_nodes"] = hidden_nodes;
  j["kernel"] = kernel;
  j["sem_iters"] = sem_iters;
  j["burnin"] = burnin;
  j["ess_steps"] = ess_steps;
  j["imputations"] = imputations;
  j["thin"] = thin;
  j["seed"] = seed;
  j["vecchia"] = vecchia;
  j["m_train"] = m_train;
  j["m_pred"] = m_pred;
  j["mu_dense_threshold"] = mu_dense_threshold;
  j["threads"] = threads;
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& field, const char* what) {
    throw DataError("config field '" + field + "' " + what);
  };
  try {
    (void)LikelihoodSpec::from_name(likelihood, classes);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config field 'likelihood': ") + e.what());
  }
  if (kernel != "matern25" && kernel != "se")
    fail("kernel", "must be 'matern25' or 'se'");
  if (hidden_nodes < 0) fail("hidden_nodes", "must be >= 0 (0 = input dimension)");
  if (sem_iters < 1) fail("sem_iters", "must be >= 1");
  if (burnin < 0 || burnin >= sem_iters) fail("burnin", "must satisfy 0 <= burnin < sem_iters");
  if (ess_steps < 1) fail("ess_steps", "must be >= 1");
  if (imputations < 1) fail("imputations", "must be >= 1");
  if (thin < 1) fail("thin", "must be >= 1");
  if (m_train < 1) fail("m_train", "must be >= 1");
  if (m_pred < 1) fail("m_pred", "must be >= 1");
  if (mu_dense_threshold < 0) fail("mu_dense_threshold", "must be >= 0");
  if (threads < 0) fail("threads", "must be >= 0 (0 = hardware default)");
}

Architecture RunConfig::architecture(int input_dim) const {
  const LikelihoodSpec lik = LikelihoodSpec::from_name(likelihood, classes);
  Architecture arch = build_default(input_dim, lik);
  if (hidden_nodes > 0) arch.nodes_per_layer[0] = hidden_nodes;
  arch.kernel_family = family_from_name(kernel, "config");
  return arch;
}

SemConfig RunConfig::sem() const {
  SemConfig cfg;
  cfg.T = sem_iters;
  cfg.B = burnin;
  cfg.C = ess_steps;
  cfg.K = imputations;
  cfg.thinning = thin;
  cfg.seed = seed;
  return cfg;
}

VecchiaConfig RunConfig::vecchia_config() const {
  VecchiaConfig cfg;
  cfg.enabled = vecchia;
  cfg.m_train = m_train;
  cfg.m_pred = m_pred;
  cfg.mu_dense_threshold = mu_dense_threshold;
  return cfg;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = cfg.to_json_text();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::string save_model_text(const GdgpModel& model, const RunConfig& cfg) {
  model.validate();
  ordered_json j;
  j["schema"] = kArchiveSchema;
  j["kind"] = "gdgp-model";
  j["seed"] = cfg.seed;
  j["config"] = ordered_json::parse(cfg.to_json_text());
  j["config_hash"] = config_hash(cfg);

  ordered_json arch;
  arch["nodes_per_layer"] = model.arch.nodes_per_layer;
  arch["likelihood"] = model.arch.likelihood.name();
  arch["classes"] = model.arch.likelihood.classes;
  arch["kernel_family"] = family_name(model.arch.kernel_family);
  j["architecture"] = arch;

  ordered_json scaling;
  scaling["x_min"] = encode_vec(model.scaling.x_min);
  scaling["x_range"] = encode_vec(model.scaling.x_range);
  scaling["y_mean"] = model.scaling.y_mean;
  scaling["y_scale"] = model.scaling.y_scale;
  j["scaling"] = scaling;

  ordered_json vecchia;
  vecchia["enabled"] = model.vecchia.enabled;
  vecchia["m_train"] = model.vecchia.m_train;
  vecchia["m_pred"] = model.vecchia.m_pred;
  vecchia["mu_dense_threshold"] = model.vecchia.mu_dense_threshold;
  j["vecchia"] = vecchia;

  ordered_json kernels = ordered_json::array();
  for (const auto& layer : model.kernels) {
    ordered_json row = ordered_json::array();
    for (const KernelSpec& k : layer) {
      ordered_json spec;
      spec["lengthscales"] = encode_vec(k.lengthscales);
      spec["amplitude"] = k.amplitude;
      spec["nugget"] = k.nugget;
      row.push_back(std::move(spec));
    }
    kernels.push_back(std::move(row));
  }
  j["kernels"] = kernels;

  ordered_json inputs;
  inputs["rows"] = model.train_inputs.rows();
  inputs["cols"] = model.train_inputs.cols();
  inputs["values"] = encode_mat(model.train_inputs);
  j["train_inputs"] = inputs;

  ordered_json imputations = ordered_json::array();
  for (const LatentState& state : model.imputations) {
    ordered_json layers = ordered_json::array();
    for (const auto& layer : state.layers) {
      ordered_json nodes = ordered_json::array();
      for (const Vec& node : layer) nodes.push_back(encode_vec(node));
      layers.push_back(std::move(nodes));
    }
    imputations.push_back(std::move(layers));
  }
  j["imputations"] = imputations;

  return j.dump(2) + "\n";
}

namespace {

const ordered_json& archive_field(const ordered_json& j, const char* key,
                                  const std::string& origin) {
  const auto it = j.find(key);
  if (it == j.end())
    throw DataError(origin + ": archive is missing field '" + key + "'");
  return *it;
}

}  // namespace

GdgpModel load_model_text(const std::string& text, const std::string& origin,
                          RunConfig* cfg, std::string* hash) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(origin + ": archive must be a JSON object");
  if (!j.contains("kind") || j["kind"] != "gdgp-model")
    throw DataError(origin + ": not a gdgp model archive");
  const int schema = archive_field(j, "schema", origin).template get<int>();
  if (schema != kArchiveSchema)
    throw DataError(origin + ": unsupported archive schema version " +
                    std::to_string(schema) + " (this build reads version " +
                    std::to_string(kArchiveSchema) + ")");

  try {
    GdgpModel model;
    const ordered_json& arch = archive_field(j, "architecture", origin);
    model.arch.nodes_per_layer =
        archive_field(arch, "nodes_per_layer", origin).template get<std::vector<int>>();
    model.arch.layer_count = static_cast<int>(model.arch.nodes_per_layer.size());
    model.arch.likelihood = LikelihoodSpec::from_name(
        archive_field(arch, "likelihood", origin).template get<std::string>(),
        archive_field(arch, "classes", origin).template get<int>());
    model.arch.kernel_family = family_from_name(
        archive_field(arch, "kernel_family", origin).template get<std::string>(), origin);

    const ordered_json& scaling = archive_field(j, "scaling", origin);
    model.scaling.x_min =
        decode_vec(archive_field(scaling, "x_min", origin).template get<std::string>());
    model.scaling.x_range =
        decode_vec(archive_field(scaling, "x_range", origin).template get<std::string>());
    model.scaling.y_mean = archive_field(scaling, "y_mean", origin).template get<double>();
    model.scaling.y_scale = archive_field(scaling, "y_scale", origin).template get<double>();

    const ordered_json& vecchia = archive_field(j, "vecchia", origin);
    model.vecchia.enabled = archive_field(vecchia, "enabled", origin).template get<bool>();
    model.vecchia.m_train = archive_field(vecchia, "m_train", origin).template get<int>();
    model.vecchia.m_pred = archive_field(vecchia, "m_pred", origin).template get<int>();
    model.vecchia.mu_dense_threshold =
        archive_field(vecchia, "mu_dense_threshold", origin).template get<int>();

    for (const ordered_json& layer : archive_field(j, "kernels", origin)) {
      std::vector<KernelSpec> row;
      for (const ordered_json& spec : layer) {
        KernelSpec k;
        k.family = model.arch.kernel_family;
        k.lengthscales =
            decode_vec(archive_field(spec, "lengthscales", origin).template get<std::string>());
        k.amplitude = archive_field(spec, "amplitude", origin).template get<double>();
        k.nugget = archive_field(spec, "nugget", origin).template get<double>();
        row.push_back(std::move(k));
      }
      model.kernels.push_back(std::move(row));
    }

    const ordered_json& inputs = archive_field(j, "train_inputs", origin);
    model.train_inputs =
        decode_mat(archive_field(inputs, "values", origin).template get<std::string>(),
                   archive_field(inputs, "rows", origin).template get<Eigen::Index>(),
                   archive_field(inputs, "cols", origin).template get<Eigen::Index>());

    for (const ordered_json& layers : archive_field(j, "imputations", origin)) {
      LatentState state;
      for (const ordered_json& nodes : layers) {
        std::vector<Vec> layer;
        for (const ordered_json& node : nodes)
          layer.push_back(decode_vec(node.template get<std::string>()));
        state.layers.push_back(std::move(layer));
      }
      model.imputations.push_back(std::move(state));
    }

    model.validate();

    if (cfg) {
      *cfg = RunConfig::from_json_text(archive_field(j, "config", origin).dump(),
                                       origin + " (embedded config)");
    }
    if (hash) *hash = archive_field(j, "config_hash", origin).template get<std::string>();
    return model;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(origin + ": invalid archive: " + e.what());
  }
}

void save_model(const std::string& path, const GdgpModel& model, const RunConfig& cfg) {
  write_text_file(path, save_model_text(model, cfg));
}

GdgpModel load_model(const std::string& path, RunConfig* cfg, std::string* hash) {
  return load_model_text(read_text_file(path), path, cfg, hash);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError("failed while reading file '" + path + "'");
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw DataError("failed while writing file '" + path + "'");
}

}  // namespace gdgp
