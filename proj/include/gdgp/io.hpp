#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdgp/inference.hpp"
#include "gdgp/model.hpp"
#include "gdgp/types.hpp"

namespace gdgp {

// File formats shared by the subcommands: numeric CSV tables, the JSON run
// configuration, and the versioned model archive. Malformed content throws
// DataError with the file and line (or field) in the message.

// === CSV ===
// Dialect: comma separated, header row required, '.' decimal point, UTF-8,
// every cell numeric. CRLF line endings are accepted.
struct CsvTable {
  std::vector<std::string> columns;
  Mat values;

  long rows() const { return values.rows(); }
  int find(const std::string& name) const;     // -1 when absent
  int require(const std::string& name) const;  // DataError naming the column
};

CsvTable parse_csv(const std::string& text, const std::string& origin);
CsvTable read_csv(const std::string& path);

// Doubles are written with the shortest digit string that parses back to the
// identical bits, so emitted files are stable under rewrite.
std::string format_double(double v);
std::string format_csv(const std::vector<std::string>& columns, const Mat& values);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Mat& values);

// Splits a training table into inputs and outputs: the columns must be
// exactly x1..xD (any order) plus y.
void split_xy(const CsvTable& table, Mat* x, Vec* y);

// Input columns x1..xD of a test table; a y column, when present, is
// ignored so truth files double as prediction inputs.
Mat input_matrix(const CsvTable& table);

// === base64 payloads (numeric blocks inside archives) ===
// Doubles are serialized as little-endian 8-byte words regardless of host
// order. Matrices travel column major with their shape stored alongside.
std::string encode_vec(Eigen::Ref<const Vec> v);
Vec decode_vec(const std::string& text);
std::string encode_mat(const Mat& m);
Mat decode_mat(const std::string& text, Eigen::Index rows, Eigen::Index cols);

// === Run configuration ===
// Flat JSON object; every key is optional and overridable by a command-line
// flag. Unknown keys and out-of-range values throw DataError naming the
// field. The canonical dump of the effective configuration is hashed into
// the archive for provenance.
struct RunConfig {
  std::string likelihood = "hetgauss";
  int classes = 0;      // categorical only
  int hidden_nodes = 0;  // 0 = one hidden node per input dimension
  std::string kernel = "matern25";  // or "se"
  int sem_iters = 500;
  int burnin = 250;
  int ess_steps = 10;
  int imputations = 50;
  int thin = 10;
  std::uint64_t seed = 0;
  bool vecchia = false;
  int m_train = 50;
  int m_pred = 200;
  int mu_dense_threshold = 500;
  int threads = 0;  // 0 keeps the hardware default

  // The _over variants leave fields absent from the JSON at their values in
  // `base`, so defaults, environment, file, and flags layer in a fixed
  // precedence.
  static RunConfig from_json_text(const std::string& text, const std::string& origin);
  static RunConfig from_json_text_over(const std::string& text, const std::string& origin,
                                       const RunConfig& base);
  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_file_over(const std::string& path, const RunConfig& base);
  std::string to_json_text() const;  // canonical member order
  void validate() const;

  // Derived module settings (validate() first).
  Architecture architecture(int input_dim) const;
  SemConfig sem() const;
  VecchiaConfig vecchia_config() const;
};

// FNV-1a over the canonical JSON dump, as a 16-digit hex string.
std::string config_hash(const RunConfig& cfg);

// === Model archive ===
// JSON metadata plus base64 numeric payloads; load(save(m)) restores the
// model bit for bit, so predictions from a reloaded archive are identical.
// Unknown schema versions or kinds are rejected, never misread.
inline constexpr int kArchiveSchema = 1;

std::string save_model_text(const GdgpModel& model, const RunConfig& cfg);
GdgpModel load_model_text(const std::string& text, const std::string& origin,
                          RunConfig* cfg = nullptr, std::string* hash = nullptr);
void save_model(const std::string& path, const GdgpModel& model, const RunConfig& cfg);
GdgpModel load_model(const std::string& path, RunConfig* cfg = nullptr,
                     std::string* hash = nullptr);

// Whole-file helpers used by the subcommands.
std::string read_text_file(const std::string& path);   // DataError when unreadable
void write_text_file(const std::string& path, const std::string& text);

}  // namespace gdgp
