#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "reconet/rng.hpp"
#include "reconet/tensor.hpp"

using namespace reconet;

TEST_CASE("Shape3 rejects non-positive extents") {
  CHECK_THROWS_AS(Shape3(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(Shape3(2, -1, 2), std::invalid_argument);
  CHECK_THROWS_AS(Shape3(2, 2, 0), std::invalid_argument);
  CHECK_NOTHROW(Shape3(1, 1, 1));
}

TEST_CASE("flat layout is (c*H + h)*W + w") {
  Tensor3d t(Shape3(2, 3, 4));
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 4; ++w) t(c, h, w) = 100 * c + 10 * h + w;
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 4; ++w)
        CHECK(t.data()[(c * 3 + h) * 4 + w] == 100 * c + 10 * h + w);
}

TEST_CASE("outer3 equals the triple-loop oracle bit for bit") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd vc = random_vector(1 + rng.below(5), rng);
    const VectorXd vh = random_vector(1 + rng.below(5), rng);
    const VectorXd vw = random_vector(1 + rng.below(5), rng);
    CHECK(oracle::bitwise_equal(outer3(vc, vh, vw), oracle::outer3(vc, vh, vw)));
  }
}

TEST_CASE("outer3 output is rank 1 in every mode") {
  Rng rng(12);
  const Tensor3d t = outer3(random_vector(4, rng), random_vector(3, rng), random_vector(5, rng));
  CHECK(rank_one_defect(t) <= 1e-12);
  CHECK(oracle::rank_one_defect(t) <= 1e-12);
}

TEST_CASE("rank_one_defect flags a rank-2 tensor") {
  Rng rng(13);
  Tensor3d t = outer3(random_vector(3, rng), random_vector(3, rng), random_vector(3, rng));
  t(0, 0, 0) += 0.5;
  CHECK(rank_one_defect(t) > 1e-6);
  CHECK(oracle::rank_one_defect(t) > 1e-6);
}

TEST_CASE("matricize of 1x1x1 is the 1x1 identity case") {
  Tensor3d t(Shape3(1, 1, 1));
  t(0, 0, 0) = 7.5;
  for (int mode = 1; mode <= 3; ++mode) {
    const MatrixXd m = matricize(t, mode);
    CHECK(m.rows() == 1);
    CHECK(m.cols() == 1);
    CHECK(m(0, 0) == 7.5);
  }
  CHECK_THROWS_AS(matricize(t, 4), std::invalid_argument);
}

TEST_CASE("matricize matches the hand-indexed mapping on 2x2x2") {
  Rng rng(14);
  const Tensor3d t = random_tensor(Shape3(2, 2, 2), rng);
  const MatrixXd m1 = matricize(t, 1);
  const MatrixXd m2 = matricize(t, 2);
  const MatrixXd m3 = matricize(t, 3);
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 2; ++h)
      for (int w = 0; w < 2; ++w) {
        CHECK(m1(c, h * 2 + w) == t(c, h, w));
        CHECK(m2(h, c * 2 + w) == t(c, h, w));
        CHECK(m3(w, c * 2 + h) == t(c, h, w));
      }
}

TEST_CASE("hadamard is commutative bitwise and matches the loop oracle") {
  Rng rng(15);
  const Tensor3d a = random_tensor(Shape3(3, 2, 4), rng);
  const Tensor3d x = random_tensor(Shape3(3, 2, 4), rng);
  CHECK(oracle::bitwise_equal(hadamard(a, x), hadamard(x, a)));
  CHECK(oracle::bitwise_equal(hadamard(a, x), oracle::hadamard(a, x)));
  CHECK_THROWS_AS(hadamard(a, random_tensor(Shape3(3, 2, 5), rng)), std::invalid_argument);
}

TEST_CASE("scaled_accumulate adds lambda times the term") {
  Rng rng(16);
  const Tensor3d acc = random_tensor(Shape3(2, 2, 2), rng);
  const Tensor3d t = random_tensor(Shape3(2, 2, 2), rng);
  const Tensor3d out = scaled_accumulate(acc, 0.25, t);
  for (Eigen::Index i = 0; i < out.size(); ++i)
    CHECK(out.data()[i] == acc.data()[i] + 0.25 * t.data()[i]);
  CHECK_THROWS_AS(scaled_accumulate(acc, std::numeric_limits<double>::quiet_NaN(), t),
                  std::invalid_argument);
}

TEST_CASE("pooling a constant tensor is exact") {
  const Tensor3d x = Tensor3d::constant(Shape3(3, 4, 5), 1.25);
  const VectorXd ps = pool_spatial(x);
  for (Eigen::Index c = 0; c < ps.size(); ++c) CHECK(ps[c] == 1.25);
  const MatrixXd pw = pool_over_width(x);
  const MatrixXd ph = pool_over_height(x);
  CHECK((pw.array() == 1.25).all());
  CHECK((ph.array() == 1.25).all());
}

TEST_CASE("pools match the naive loop oracles bit for bit") {
  Rng rng(17);
  const Tensor3d x = random_tensor(Shape3(4, 3, 6), rng);
  const VectorXd ps = pool_spatial(x);
  const VectorXd ps_o = oracle::pool_spatial(x);
  for (Eigen::Index c = 0; c < ps.size(); ++c) CHECK(ps[c] == ps_o[c]);
  CHECK((pool_over_width(x).array() == oracle::pool_over_width(x).array()).all());
  CHECK((pool_over_height(x).array() == oracle::pool_over_height(x).array()).all());
}

TEST_CASE("pool_over_width is C x H, pool_over_height is C x W") {
  const Tensor3d x(Shape3(2, 3, 5));
  CHECK(pool_over_width(x).rows() == 2);
  CHECK(pool_over_width(x).cols() == 3);
  CHECK(pool_over_height(x).rows() == 2);
  CHECK(pool_over_height(x).cols() == 5);
}

TEST_CASE("sigmoid stays strictly inside (0,1) for all finite inputs") {
  for (double x : {-1e9, -745.0, -30.0, -1.0, 0.0, 1.0, 30.0, 745.0, 1e9}) {
    const double s = sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("sigmoid(x) + sigmoid(-x) = 1 within 1e-15") {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(-20.0, 20.0);
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
  }
}

TEST_CASE("sigmoid_derivative equals s(1-s)") {
  const double s = sigmoid(0.7);
  CHECK(sigmoid_derivative(0.7) == s * (1.0 - s));
  CHECK(sigmoid_derivative(0.0) == 0.25);
}
