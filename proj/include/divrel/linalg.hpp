#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "divrel/errors.hpp"

namespace divrel {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// eigenvalues descending, eigenvectors as matching columns
template <class Scalar>
struct Spectrum {
  Vec<Scalar> eigenvalues;
  Mat<Scalar> eigenvectors;
};

// subtract column means; rows are samples, columns are features
template <class Derived>
Mat<typename Derived::Scalar> center_columns(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  if (x.rows() < 1 || x.cols() < 1)
    throw InvalidData("center_columns: matrix must be at least 1x1");
  if (!x.allFinite())
    throw InvalidData("center_columns: non-finite entry");
  Mat<S> out = x;
  out.rowwise() -= x.colwise().mean();
  return out;
}

// optional preprocessing: divide everything by the largest column standard
// deviation, one global factor so relative second-moment structure survives
template <class Derived>
Mat<typename Derived::Scalar> scale_global(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  Mat<S> centered = center_columns(x);
  const S max_var = centered.array().square().colwise().mean().maxCoeff();
  const S max_std = std::sqrt(max_var);
  if (max_std <= S(0)) return x;
  return x / max_std;
}

// C = (1/n) X^T X, symmetrized; caller is expected to have centered X
template <class Derived>
Mat<typename Derived::Scalar> covariance(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  if (x.rows() < 1 || x.cols() < 1)
    throw InvalidData("covariance: matrix must be at least 1x1");
  if (!x.allFinite())
    throw InvalidData("covariance: non-finite entry");
  Mat<S> c = (x.transpose() * x) / S(x.rows());
  Mat<S> sym = S(0.5) * (c + c.transpose());
  return sym;
}

namespace detail {

template <class S>
S off_diagonal_norm(const Mat<S>& a) {
  S sum = S(0);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace detail

// Cyclic Jacobi for symmetric matrices. Converged when the off-diagonal
// Frobenius norm drops below 1e-12 * ||C||_F; hard cap of 100 sweeps.
// Exact-zero pivots are skipped, so block-diagonal inputs diagonalize each
// block exactly as they would alone.
template <class Derived>
Spectrum<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& c_in) {
  using S = typename Derived::Scalar;
  const Eigen::Index d = c_in.rows();
  if (d != c_in.cols()) throw DimensionError("sym_eig: matrix not square");
  if (d < 1) throw InvalidData("sym_eig: empty matrix");
  if (!c_in.allFinite()) throw InvalidData("sym_eig: non-finite entry");

  Mat<S> a = S(0.5) * (c_in + c_in.transpose());
  Mat<S> v = Mat<S>::Identity(d, d);
  const S tol = S(1e-12) * a.norm();

  bool converged = false;
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (detail::off_diagonal_norm(a) <= tol) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p + 1 < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const S apq = a(p, q);
        if (apq == S(0)) continue;
        const S theta = (a(q, q) - a(p, p)) / (S(2) * apq);
        const S t = std::abs(theta) > S(1e150)
                        ? S(1) / (S(2) * theta)
                        : (theta >= S(0) ? S(1) : S(-1)) /
                              (std::abs(theta) + std::sqrt(theta * theta + S(1)));
        const S c = S(1) / std::sqrt(t * t + S(1));
        const S s = t * c;

        const S app = a(p, p);
        const S aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = S(0);
        a(q, p) = S(0);
        for (Eigen::Index k = 0; k < d; ++k) {
          if (k == p || k == q) continue;
          const S akp = a(k, p);
          const S akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const S vkp = v(k, p);
          const S vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && detail::off_diagonal_norm(a) > tol)
    throw NumericalFailure("sym_eig: Jacobi did not converge in 100 sweeps");

  Vec<S> lambda = a.diagonal();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda[i] < S(0)) {
      if (lambda[i] < S(-1e-10))
        throw InvalidCovariance("sym_eig: eigenvalue below PSD tolerance");
      lambda[i] = S(0);
    }
  }

  // stable descending sort; ties keep Jacobi output order
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return lambda[l] > lambda[r]; });

  Spectrum<S> out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigenvalues[i] = lambda[idx[static_cast<std::size_t>(i)]];
    out.eigenvectors.col(i) = v.col(idx[static_cast<std::size_t>(i)]);
    // sign convention: first component of magnitude > 1e-12 is positive
    for (Eigen::Index k = 0; k < d; ++k) {
      const S e = out.eigenvectors(k, i);
      if (std::abs(e) > S(1e-12)) {
        if (e < S(0)) out.eigenvectors.col(i) = -out.eigenvectors.col(i);
        break;
      }
    }
  }
  return out;
}

// ||C_s u||, the variance the seller reports for one queried direction
template <class DerC, class DerU>
typename DerC::Scalar projected_variance(const Eigen::MatrixBase<DerC>& c_s,
                                         const Eigen::MatrixBase<DerU>& u) {
  using S = typename DerC::Scalar;
  if (c_s.rows() != c_s.cols()) throw DimensionError("projected_variance: matrix not square");
  if (u.size() != c_s.rows())
    throw DimensionError("projected_variance: direction dimension mismatch");
  if (!u.allFinite()) throw InvalidDirection("projected_variance: non-finite direction");
  const S n = u.norm();
  if (std::abs(n - S(1)) > S(1e-8))
    throw InvalidDirection("projected_variance: direction is not unit length");
  return (c_s * u).norm();
}

}  // namespace divrel
