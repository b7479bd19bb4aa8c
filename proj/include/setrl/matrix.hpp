#pragma once

// Dense row-major matrix of doubles plus the l_{p,q} norm family used by the
// bound calculators. Kept deliberately small: exactly the operation set the
// networks and bounds layers need, nothing speculative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace setrl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major, size rows*cols

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative shape");
  }
  Matrix(int r, int c, std::initializer_list<double> init) : Matrix(r, c) {
    if (static_cast<int>(init.size()) != r * c)
      throw std::invalid_argument("Matrix: initializer size mismatch");
    std::copy(init.begin(), init.end(), a.begin());
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
  int size() const { return rows * cols; }
  bool empty() const { return rows == 0 || cols == 0; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<size_t>(r) * c, 0.0);  // reuses capacity when possible
  }
  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix ones(int r, int c) {
    Matrix m(r, c);
    m.fill(1.0);
    return m;
  }
};

inline bool all_finite(const Matrix& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void ensure_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

// ---- shape-checked arithmetic -----------------------------------------------

inline void matmul_into(Matrix& dst, const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
  dst.resize(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    double* out = dst.row(i);
    const double* xi = x.row(i);
    for (int k = 0; k < x.cols; ++k) {
      const double v = xi[k];
      if (v == 0.0) continue;
      const double* yk = y.row(k);
      for (int j = 0; j < y.cols; ++j) out[j] += v * yk[j];
    }
  }
}

// dst = x * y^T
inline void matmul_nt_into(Matrix& dst, const Matrix& x, const Matrix& y) {
  if (x.cols != y.cols) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  dst.resize(x.rows, y.rows);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* out = dst.row(i);
    for (int j = 0; j < y.rows; ++j) {
      const double* yj = y.row(j);
      double s = 0.0;
      for (int k = 0; k < x.cols; ++k) s += xi[k] * yj[k];
      out[j] = s;
    }
  }
}

// dst = x^T * y
inline void matmul_tn_into(Matrix& dst, const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows) throw std::invalid_argument("matmul_tn: inner dimension mismatch");
  dst.resize(x.cols, y.cols);
  for (int k = 0; k < x.rows; ++k) {
    const double* xk = x.row(k);
    const double* yk = y.row(k);
    for (int i = 0; i < x.cols; ++i) {
      const double v = xk[i];
      if (v == 0.0) continue;
      double* out = dst.row(i);
      for (int j = 0; j < y.cols; ++j) out[j] += v * yk[j];
    }
  }
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  Matrix d;
  matmul_into(d, x, y);
  ensure_finite(d, "matmul");
  return d;
}

inline Matrix transpose(const Matrix& x) {
  Matrix t(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) t(j, i) = x(i, j);
  return t;
}

inline Matrix add(const Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("add: shape mismatch");
  Matrix d = x;
  for (int i = 0; i < d.size(); ++i) d.a[i] += y.a[i];
  return d;
}

inline Matrix sub(const Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("sub: shape mismatch");
  Matrix d = x;
  for (int i = 0; i < d.size(); ++i) d.a[i] -= y.a[i];
  return d;
}

inline Matrix scale(const Matrix& x, double c) {
  Matrix d = x;
  for (double& v : d.a) v *= c;
  return d;
}

// ---- the paper's pointwise nonlinearities -----------------------------------

inline void relu_into(Matrix& dst, const Matrix& x) {
  dst.resize(x.rows, x.cols);
  for (int i = 0; i < x.size(); ++i) dst.a[i] = x.a[i] > 0.0 ? x.a[i] : 0.0;
}

inline Matrix relu(const Matrix& x) {
  Matrix d;
  relu_into(d, x);
  return d;
}

// Row-wise softmax with per-row max subtraction for overflow safety.
inline void row_softmax_into(Matrix& dst, const Matrix& x) {
  dst.resize(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* oi = dst.row(i);
    double mx = -kInf;
    for (int j = 0; j < x.cols; ++j) mx = std::max(mx, xi[j]);
    double z = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      oi[j] = std::exp(xi[j] - mx);
      z += oi[j];
    }
    for (int j = 0; j < x.cols; ++j) oi[j] /= z;
  }
}

inline Matrix row_softmax(const Matrix& x) {
  Matrix d;
  row_softmax_into(d, x);
  ensure_finite(d, "row_softmax");
  return d;
}

// ---- vector and matrix norms -------------------------------------------------

inline double lp_norm(const double* v, int n, double p) {
  if (p < 1.0) throw std::domain_error("lp_norm: p < 1");
  if (p == kInf) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::fabs(v[i]));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::fabs(v[i]);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::pow(std::fabs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double lp_norm(const std::vector<double>& v, double p) {
  return lp_norm(v.data(), static_cast<int>(v.size()), p);
}

inline double row_lp_norm(const Matrix& x, int i, double p) { return lp_norm(x.row(i), x.cols, p); }

// ||X^T||_{p,inf}: columns of X^T are the rows of X, so this is the max row p-norm.
inline double norm_pinf_T(const Matrix& x, double p) {
  double m = 0.0;
  for (int i = 0; i < x.rows; ++i) m = std::max(m, row_lp_norm(x, i, p));
  return m;
}

// ||W^T||_{p,q}: q-norm over the rows of W of each row's p-norm.
inline double norm_pq_T(const Matrix& w, double p, double q) {
  if (q == kInf) return norm_pinf_T(w, p);
  if (q < 1.0) throw std::domain_error("norm_pq_T: q < 1");
  double s = 0.0;
  for (int i = 0; i < w.rows; ++i) s += std::pow(row_lp_norm(w, i, p), q);
  return std::pow(s, 1.0 / q);
}

inline double frobenius(const Matrix& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (int i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x.a[i] - y.a[i]));
  return m;
}

// ---- projections --------------------------------------------------------------

// Radial scaling of each row into the unit l_p ball: row / max(1, ||row||_p).
// Radial (not metric) projection by design: it is simple, differentiable off the
// boundary, and lands in the ball, which is all the layer definition requires.
//
// Rows whose norm is within kProjGuard of 1 are left untouched so that the map
// is bitwise idempotent: a rescaled row recomputes to a norm of 1 +- a few ulp,
// and must not be rescaled a second time.
inline constexpr double kProjGuard = 1e-12;

inline void row_project_lp_into(Matrix& dst, const Matrix& x, double p) {
  if (p < 1.0) throw std::domain_error("row_project_lp: p < 1");
  dst.resize(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double nrm = row_lp_norm(x, i, p);
    const double s = nrm > 1.0 + kProjGuard ? 1.0 / nrm : 1.0;
    const double* xi = x.row(i);
    double* oi = dst.row(i);
    for (int j = 0; j < x.cols; ++j) oi[j] = xi[j] * s;
  }
}

inline Matrix row_project_lp(const Matrix& x, double p) {
  Matrix d;
  row_project_lp_into(d, x, p);
  ensure_finite(d, "row_project_lp");
  return d;
}

inline double clip_scalar(double x, double v) {
  if (v <= 0.0) throw std::domain_error("clip_scalar: v <= 0");
  if (x > v) return v;
  if (x < -v) return -v;
  return x;
}

}  // namespace setrl
