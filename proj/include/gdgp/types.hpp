#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace gdgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Linear algebra degenerated beyond repair (maps to CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user data (maps to CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gdgp
