#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/rng.hpp"

namespace mmba {

// Dense row-major matrix of doubles. Row vectors are 1xN matrices.
class Mat {
 public:
  Mat() = default;

  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw ShapeError("Mat: negative dimension");
  }

  static Mat eye(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from(int rows, int cols, std::initializer_list<double> vals) {
    Mat m(rows, cols);
    if (vals.size() != m.size())
      throw ShapeError("Mat::from: " + std::to_string(vals.size()) + " values for " +
                       m.shape_str());
    std::size_t i = 0;
    for (double v : vals) m.v_[i++] = v;
    return m;
  }

  static Mat uniform(int rows, int cols, double lo, double hi, Rng& rng) {
    Mat m(rows, cols);
    for (auto& x : m.v_) x = rng.uniform(lo, hi);
    return m;
  }

  static Mat gaussian(int rows, int cols, double stddev, Rng& rng) {
    Mat m(rows, cols);
    for (auto& x : m.v_) x = stddev * rng.normal();
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  // dst += scale * src, shapes must match.
  void axpy(double scale, const Mat& src) {
    if (!same_shape(src))
      throw ShapeError("axpy: " + shape_str() + " vs " + src.shape_str());
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += scale * src.v_[i];
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

inline void check_same_shape(const char* op, const Mat& a, const Mat& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

// C = A * B
inline Mat mul_nn(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " * " +
                     b.shape_str());
  Mat c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

// C = A * B^T
inline Mat mul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: inner dimensions differ, " + a.shape_str() + " * " +
                     b.shape_str() + "^T");
  Mat c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
  return c;
}

// C = A^T * B
inline Mat mul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: inner dimensions differ, " + a.shape_str() + "^T * " +
                     b.shape_str());
  Mat c(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k) {
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  }
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace mmba
