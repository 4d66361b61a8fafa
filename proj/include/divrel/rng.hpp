#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace divrel {

// Seeded generator with fully pinned-down output: the raw stream is
// std::mt19937_64 (whose sequence the standard specifies exactly), and every
// derived draw below is implemented here rather than delegated to the
// standard distributions, which are implementation-defined and differ
// between stdlibs. Same seed -> same samples, independent of the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform on (0,1): 53-bit midpoint, never returns 0 or 1
  double uniform01() {
    const std::uint64_t k = gen_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1p-53;
  }

  // standard normal via Box-Muller; second deviate cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, n), unbiased via rejection
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit =
        (std::numeric_limits<std::uint64_t>::max() / n) * n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // uniform direction on the unit sphere in R^d
  Eigen::VectorXd unit_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
      norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)      // row-major fill order is
      for (Eigen::Index j = 0; j < cols; ++j)    // part of the output contract
        m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace divrel
