#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "reconet/tensor.hpp"

namespace reconet {

// Deterministic random stream: std::mt19937_64 plus fixed bit-to-double
// mappings. <random> distributions are implementation-defined, so they are
// not used anywhere results must be reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1), 53 random bits
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two draws per call
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // integer in [0, n)
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 gen_;
};

template <typename Scalar = double>
VectorX<Scalar> random_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  VectorX<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(rng.uniform(lo, hi));
  return v;
}

template <typename Scalar = double>
MatrixX<Scalar> random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0,
                              double hi = 1.0) {
  MatrixX<Scalar> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(rng.uniform(lo, hi));
  return m;
}

template <typename Scalar = double>
Tensor3<Scalar> random_tensor(const Shape3& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor3<Scalar> t(shape);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<Scalar>(rng.uniform(lo, hi));
  return t;
}

}  // namespace reconet
