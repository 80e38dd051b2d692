#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "binembed/errors.hpp"

namespace binembed {

// Dense row-major matrix of doubles. This is the only numeric container in
// the library; vectors are 1xN or Nx1 matrices.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, double fill)
      : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}
  Mat(int r, int c, std::vector<double> data)
      : rows(r), cols(c), a(std::move(data)) {
    if (a.size() != static_cast<size_t>(r) * c)
      throw ContractError("Mat: data size does not match shape");
  }

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row_ptr(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const {
    return a.data() + static_cast<size_t>(r) * cols;
  }

  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline Mat zeros_like(const Mat& m) { return Mat(m.rows, m.cols); }

// C += A * B
inline void matmul_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.rows || C.rows != A.rows || C.cols != B.cols)
    throw ContractError("matmul: shape mismatch");
  const int n = A.rows, k = A.cols, m = B.cols;
  for (int i = 0; i < n; ++i) {
    const double* ai = A.row_ptr(i);
    double* ci = C.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = B.row_ptr(p);
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

inline Mat matmul(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.cols);
  matmul_acc(A, B, C);
  return C;
}

// C += A * B^T
inline void matmul_nt_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.cols || C.rows != A.rows || C.cols != B.rows)
    throw ContractError("matmul_nt: shape mismatch");
  const int n = A.rows, k = A.cols, m = B.rows;
  for (int i = 0; i < n; ++i) {
    const double* ai = A.row_ptr(i);
    double* ci = C.row_ptr(i);
    for (int j = 0; j < m; ++j) {
      const double* bj = B.row_ptr(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

inline Mat matmul_nt(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.rows);
  matmul_nt_acc(A, B, C);
  return C;
}

// C += A^T * B
inline void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.rows != B.rows || C.rows != A.cols || C.cols != B.cols)
    throw ContractError("matmul_tn: shape mismatch");
  const int n = A.cols, k = A.rows, m = B.cols;
  for (int p = 0; p < k; ++p) {
    const double* ap = A.row_ptr(p);
    const double* bp = B.row_ptr(p);
    for (int i = 0; i < n; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = C.row_ptr(i);
      for (int j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
}

inline Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T.at(j, i) = A.at(i, j);
  return T;
}

inline double dot(const Mat& A, const Mat& B) {
  if (!A.same_shape(B)) throw ContractError("dot: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < A.a.size(); ++i) s += A.a[i] * B.a[i];
  return s;
}

inline double frobenius_norm(const Mat& A) { return std::sqrt(dot(A, A)); }

}  // namespace binembed
