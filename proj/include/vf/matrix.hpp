#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vf/error.hpp"
#include "vf/rng.hpp"

namespace vf {

// Dense row-major double matrix. This is the feature container every layer
// operates on; Eigen supplies the multiply kernels behind it.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[std::size_t(i) * cols + j]; }
  double operator()(int i, int j) const {
    return data[std::size_t(i) * cols + j];
  }

  double* row_ptr(int i) { return data.data() + std::size_t(i) * cols; }
  const double* row_ptr(int i) const {
    return data.data() + std::size_t(i) * cols;
  }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

namespace detail {
using EigenMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using EigenCMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

inline EigenCMap map(const Matrix& m) {
  return EigenCMap(m.data.data(), m.rows, m.cols);
}
inline EigenMap map(Matrix& m) { return EigenMap(m.data.data(), m.rows, m.cols); }
}  // namespace detail

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw ValidationError("matmul: inner dimensions mismatch (" +
                          std::to_string(a.cols) + " vs " +
                          std::to_string(b.rows) + ")");
  Matrix c(a.rows, b.cols);
  detail::map(c).noalias() = detail::map(a) * detail::map(b);
  return c;
}

// C = A^T * B
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows)
    throw ValidationError("matmul_at: row counts mismatch");
  Matrix c(a.cols, b.cols);
  detail::map(c).noalias() = detail::map(a).transpose() * detail::map(b);
  return c;
}

// C = A * B^T
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols)
    throw ValidationError("matmul_bt: column counts mismatch");
  Matrix c(a.rows, b.rows);
  detail::map(c).noalias() = detail::map(a) * detail::map(b).transpose();
  return c;
}

// Named parameter tensor with its gradient accumulator and the Adam moment
// buffers, all shape-matched by construction.
struct ParameterBlock {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m1;  // Adam first moment
  Matrix m2;  // Adam second moment

  ParameterBlock() = default;
  ParameterBlock(std::string n, int r, int c)
      : name(std::move(n)), value(r, c), grad(r, c), m1(r, c), m2(r, c) {}

  std::size_t count() const { return value.size(); }

  void glorot_init(Rng& rng) {
    // fan_in = rows, fan_out = cols for a weight used as y = x W.
    const double limit = std::sqrt(6.0 / (value.rows + value.cols));
    for (double& v : value.data) v = rng.uniform(-limit, limit);
  }
};

}  // namespace vf
