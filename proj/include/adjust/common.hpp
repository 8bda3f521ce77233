#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace adjust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for contract violations: shape mismatches, non-finite input,
/// out-of-range parameters and malformed files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void require_shape(const Eigen::Ref<const Matrix>& m, Index rows, Index cols,
                          const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(std::string(what) + ": expected " + shape_str(rows, cols) + ", got " +
                shape_str(m.rows(), m.cols()));
  }
}

}  // namespace adjust
