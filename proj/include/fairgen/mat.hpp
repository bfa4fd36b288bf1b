#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairgen/rng.hpp"

namespace fairgen {

// Dense row-major matrix of doubles. The only tensor type in the project:
// vectors are 1 x n matrices, scalars are 1 x 1.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }

  static Mat full(int r, int c, double v) {
    Mat m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
  }

  // Gaussian init, used for weight matrices at model construction.
  static Mat randn(int r, int c, double stddev, Rng& rng) {
    Mat m(r, c);
    for (double& x : m.data) x = stddev * rng.normal();
    return m;
  }

  static Mat row_vector(std::vector<double> values) {
    Mat m;
    m.rows = 1;
    m.cols = static_cast<int>(values.size());
    m.data = std::move(values);
    return m;
  }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// Internal shape check. Shape mismatches are programming errors, not user
// errors, but we keep the check active in release builds: it runs once per
// op, which is negligible next to the op itself.
inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("shape mismatch: " + what);
}

// c += a * b  (naive ikj loop; cache-friendly enough at d <= 256)
inline void matmul_accum(const Mat& a, const Mat& b, Mat& c) {
  check_shape(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "matmul_accum");
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  matmul_accum(a, b, c);
  return c;
}

// c += a * b^T
inline void matmul_nt_accum(const Mat& a, const Mat& b, Mat& c) {
  check_shape(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "matmul_nt_accum");
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

inline Mat matmul_nt(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.rows);
  matmul_nt_accum(a, b, c);
  return c;
}

// c += a^T * b
inline void matmul_tn_accum(const Mat& a, const Mat& b, Mat& c) {
  check_shape(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "matmul_tn_accum");
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row_ptr(k);
    const double* brow = b.row_ptr(k);
    for (int i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const double* a, int n) { return std::sqrt(dot(a, a, n)); }

}  // namespace fairgen
