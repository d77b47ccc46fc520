#pragma once
// Exact integer-lattice linear algebra for flat-torus computations: rounding
// guards, and kernel lattices via unimodular column reduction. Everything is
// int64; matrices here are tiny (torus rank <= 8 or so), but entries are
// guarded against overflow anyway.

#include <cmath>
#include <cstdint>
#include <cstdlib>

#include <Eigen/Dense>

#include "chart.hpp"
#include "errors.hpp"

namespace birkhoff::detail {

using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

inline IMat to_integer(const Mat& M, double tol = 1e-9) {
  IMat out(M.rows(), M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) {
      double r = std::round(M(i, j));
      if (std::abs(M(i, j) - r) > tol)
        throw usage_error("matrix entry is not an integer");
      out(i, j) = static_cast<long long>(r);
    }
  return out;
}

inline Mat from_integer(const IMat& M) {
  Mat out(M.rows(), M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) out(i, j) = static_cast<double>(M(i, j));
  return out;
}

inline void check_magnitude(const IMat& M) {
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (std::llabs(M(i, j)) > (1LL << 40))
        throw numeric_error("integer lattice reduction overflow");
}

// Saturated basis of {z in Z^n : M z = 0}: unimodular column operations
// bring M to column echelon form; the columns of the accumulated unimodular
// matrix that map to zero columns span the kernel lattice exactly (and the
// basis is automatically saturated, i.e. it generates span(K) ∩ Z^n).
inline IMat integer_kernel(const IMat& M) {
  const int rows = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  IMat W = M;
  IMat U = IMat::Identity(n, n);
  int c = 0;
  for (int r = 0; r < rows && c < n; ++r) {
    while (true) {
      int piv = -1;
      for (int j = c; j < n; ++j)
        if (W(r, j) != 0 &&
            (piv < 0 || std::llabs(W(r, j)) < std::llabs(W(r, piv))))
          piv = j;
      if (piv < 0) break;  // row r is zero on the active columns
      if (piv != c) {
        W.col(piv).swap(W.col(c));
        U.col(piv).swap(U.col(c));
      }
      bool clean = true;
      for (int j = c + 1; j < n; ++j) {
        if (W(r, j) == 0) continue;
        long long q = W(r, j) / W(r, c);
        W.col(j) -= q * W.col(c);
        U.col(j) -= q * U.col(c);
        if (W(r, j) != 0) clean = false;  // euclidean remainder: iterate
      }
      check_magnitude(W);
      check_magnitude(U);
      if (clean) {
        if (W(r, c) < 0) {
          W.col(c) = -W.col(c);
          U.col(c) = -U.col(c);
        }
        ++c;
        break;
      }
    }
  }
  return U.rightCols(n - c);
}

// Exact solve of B x = w for integer x when B has full column rank and the
// system is consistent; verified by an exact integer residual.
inline bool solve_integer_columns(const IMat& B, const IVec& w, IVec& x) {
  Mat Bd = from_integer(B);
  Eigen::VectorXd wd(w.size());
  for (int i = 0; i < w.size(); ++i) wd[i] = static_cast<double>(w[i]);
  Eigen::VectorXd y = Bd.colPivHouseholderQr().solve(wd);
  x.resize(B.cols());
  for (int i = 0; i < y.size(); ++i) {
    double r = std::round(y[i]);
    if (std::abs(y[i] - r) > 1e-6) return false;
    x[i] = static_cast<long long>(r);
  }
  return (B * x - w).cwiseAbs().maxCoeff() == 0;
}

}  // namespace birkhoff::detail
