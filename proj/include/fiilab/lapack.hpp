#pragma once

// Thin LAPACKE wrappers for the dense symmetric kernels we need.

#include <lapacke.h>

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fiilab/error.hpp"

namespace fiilab::lapack {

// All eigenpairs of a symmetric matrix (lower triangle read), ascending.
// dsyevr (MRRR) is used rather than the divide-and-conquer driver: the
// latter returned inaccurate eigenvectors for 0/1 matrices with the
// OpenBLAS build we test against.
inline void syevr(const Eigen::MatrixXd& a, Eigen::VectorXd& w,
                  Eigen::MatrixXd& z) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  w.resize(n);
  z.resize(n, n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0, 0.0,
      &found, w.data(), z.data(), n, isuppz.data());
  if (info != 0)
    throw ConvergenceError("dsyevr failed with info " + std::to_string(info),
                           static_cast<double>(info));
}

// Eigenvalues only, ascending.
inline Eigen::VectorXd syevr_values(const Eigen::MatrixXd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd w(n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  double dummy = 0.0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'N', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0, 0.0,
      &found, w.data(), &dummy, 1, isuppz.data());
  if (info != 0)
    throw ConvergenceError("dsyevr failed with info " + std::to_string(info),
                           static_cast<double>(info));
  return w;
}

// Householder reduction Q^T A Q = T from the lower triangle (A is
// overwritten). With uplo = 'L' the first reflector acts on rows 2..N, so
// Q e_1 = e_1: the spectral measure of T at index 0 equals that of A.
inline void sytrd_lower(Eigen::MatrixXd& a, std::vector<double>& diag,
                        std::vector<double>& offdiag) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  diag.resize(n);
  offdiag.assign(n, 0.0);
  std::vector<double> tau(n > 1 ? n - 1 : 1);
  const lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, a.data(), n,
                                         diag.data(), offdiag.data(), tau.data());
  if (info != 0)
    throw Error("dsytrd failed with info " + std::to_string(info));
  offdiag[n - 1] = 0.0;
}

}  // namespace fiilab::lapack
