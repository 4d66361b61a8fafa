#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "divrel/errors.hpp"
#include "divrel/linalg.hpp"
#include "divrel/rng.hpp"

namespace divrel {

struct GaussianSpec {
  Eigen::MatrixXd covariance;
  Eigen::Index n = 1;
  std::uint64_t seed = 0;
};

// Lower-triangular L with A = L L^T for positive semi-definite A.
// Rank deficiency is allowed: a pivot within tolerance of zero zeroes the
// whole column. Pivot tolerance 1e-12 relative to max(1, max diagonal).
template <class Derived>
Mat<typename Derived::Scalar> cholesky_psd(const Eigen::MatrixBase<Derived>& a_in) {
  using S = typename Derived::Scalar;
  const Eigen::Index d = a_in.rows();
  if (d != a_in.cols()) throw DimensionError("cholesky_psd: matrix not square");
  if (!a_in.allFinite()) throw InvalidData("cholesky_psd: non-finite entry");

  Mat<S> a = S(0.5) * (a_in + a_in.transpose());
  Mat<S> l = Mat<S>::Zero(d, d);
  const S scale = std::max(S(1), a.diagonal().maxCoeff());
  const S tol = S(1e-12) * scale;

  for (Eigen::Index j = 0; j < d; ++j) {
    S diag = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag <= tol) {
      if (diag < -tol)
        throw InvalidCovariance("cholesky_psd: negative pivot, matrix not PSD");
      // semi-definite direction: column stays zero, but the residual column
      // must vanish too or the matrix was never PSD
      for (Eigen::Index i = j + 1; i < d; ++i) {
        S r = a(i, j);
        for (Eigen::Index k = 0; k < j; ++k) r -= l(i, k) * l(j, k);
        if (std::abs(r) > S(1e-8) * scale)
          throw InvalidCovariance("cholesky_psd: zero pivot with nonzero column");
      }
      continue;
    }
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      S r = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) r -= l(i, k) * l(j, k);
      l(i, j) = r / l(j, j);
    }
  }
  return l;
}

// n samples of N(0, covariance), rows are samples; deterministic per seed
inline Eigen::MatrixXd sample_gaussian(const GaussianSpec& spec) {
  if (spec.n < 1) throw InvalidData("sample_gaussian: n must be >= 1");
  const Eigen::MatrixXd l = cholesky_psd(spec.covariance);
  Rng rng(spec.seed);
  const Eigen::MatrixXd z = rng.normal_matrix(spec.n, spec.covariance.rows());
  return z * l.transpose();
}

// x + sigma * N with N i.i.d. standard normal; sigma = 0 returns x untouched
inline Eigen::MatrixXd add_noise(const Eigen::MatrixXd& x, double sigma,
                                 std::uint64_t seed) {
  if (sigma < 0) throw InvalidData("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return x;
  Rng rng(seed);
  return x + sigma * rng.normal_matrix(x.rows(), x.cols());
}

}  // namespace divrel
