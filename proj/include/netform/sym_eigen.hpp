#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace netform {

// Spectral decomposition M = vectors * diag(values) * vectors' of a small
// real symmetric matrix.  Values are sorted descending, each eigenvector is
// signed so that its largest-magnitude entry is positive, and eigenvalues
// with |lambda| <= zero_tol * max|lambda| are flagged as zero.
template <typename Scalar>
struct SymEigen {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  VectorType values;
  MatrixType vectors;
  std::vector<bool> zero;
  int sweeps = 0;

  MatrixType reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

// Cyclic Jacobi rotations.  T is tiny in this library, so the O(T^3) sweep
// cost is irrelevant and the method's accuracy on clustered spectra wins.
template <typename Derived>
SymEigen<typename Derived::Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived>& input,
                                                typename Derived::Scalar symmetry_tol = 1e-12,
                                                typename Derived::Scalar zero_tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  using MatrixType = typename SymEigen<Scalar>::MatrixType;
  using std::abs;
  using std::sqrt;

  if (input.rows() != input.cols()) throw std::invalid_argument("jacobi_eigen: matrix is not square");
  const Eigen::Index T = input.rows();
  MatrixType a = input;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");
  a = (a + a.transpose()) / Scalar(2);

  MatrixType q = MatrixType::Identity(T, T);
  int sweep = 0;
  for (; sweep < 100; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < T; ++p)
      for (Eigen::Index r = p + 1; r < T; ++r) off += a(p, r) * a(p, r);
    if (off <= std::numeric_limits<Scalar>::min()) break;
    Scalar scale = a.cwiseAbs2().sum();
    if (off <= scale * Scalar(1e-34)) break;

    for (Eigen::Index p = 0; p < T; ++p) {
      for (Eigen::Index r = p + 1; r < T; ++r) {
        if (a(p, r) == Scalar(0)) continue;
        // rotation annihilating a(p, r)
        Scalar theta = (a(r, r) - a(p, p)) / (Scalar(2) * a(p, r));
        Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        Scalar s = t * c;
        for (Eigen::Index k = 0; k < T; ++k) {
          Scalar akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (Eigen::Index k = 0; k < T; ++k) {
          Scalar apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        for (Eigen::Index k = 0; k < T; ++k) {
          Scalar qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(T));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  SymEigen<Scalar> out;
  out.sweeps = sweep;
  out.values.resize(T);
  out.vectors.resize(T, T);
  for (Eigen::Index k = 0; k < T; ++k) {
    out.values(k) = a(order[k], order[k]);
    auto col = q.col(order[k]);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    out.vectors.col(k) = col(big) < Scalar(0) ? MatrixType(-col) : MatrixType(col);
  }
  Scalar largest = T > 0 ? out.values.cwiseAbs().maxCoeff() : Scalar(0);
  out.zero.resize(static_cast<std::size_t>(T));
  for (Eigen::Index k = 0; k < T; ++k) out.zero[k] = abs(out.values(k)) <= zero_tol * largest;
  return out;
}

}  // namespace netform
