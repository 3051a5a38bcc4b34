#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "reconet/autodiff.hpp"
#include "reconet/rng.hpp"

using namespace reconet;

TEST_CASE("a single sigmoid node records one operation") {
  ad::Recording rec = ad::record_forward([](ad::Tape& tape) {
    const int v = tape.leaf(ad::Value::vector(VectorXd::Zero(3)), "theta");
    return tape.sigmoid(v);
  });
  CHECK(rec.tape.operation_count() == 1);
  CHECK((rec.output().as_vector().array() == 0.5).all());
}

TEST_CASE("identical computations produce identical tape structure") {
  const auto build = [](ad::Tape& tape) {
    const int v = tape.leaf(ad::Value::vector(VectorXd::Constant(2, 0.3)));
    return tape.sum_all(tape.sigmoid(v));
  };
  ad::Recording a = ad::record_forward(build);
  ad::Recording b = ad::record_forward(build);
  REQUIRE(a.tape.size() == b.tape.size());
  for (std::size_t i = 0; i < a.tape.size(); ++i) {
    CHECK(a.tape.node(static_cast<int>(i)).op == b.tape.node(static_cast<int>(i)).op);
    CHECK(a.tape.node(static_cast<int>(i)).inputs == b.tape.node(static_cast<int>(i)).inputs);
  }
  CHECK(a.output().as_scalar() == b.output().as_scalar());
}

TEST_CASE("replay recomputes primals bit-identically") {
  Rng rng(81);
  ad::Recording rec = ad::record_forward([&](ad::Tape& tape) {
    const int x = tape.leaf(ad::Value::tensor(random_tensor(Shape3(2, 2, 2), rng)), "x");
    const int pooled = tape.pool_spatial(x);
    const int s = tape.sigmoid(pooled);
    return tape.sum_all(s);
  });
  const double before = rec.output().as_scalar();
  rec.tape.replay();
  CHECK(rec.output().as_scalar() == before);
}

TEST_CASE("gradient of sum(sigmoid(theta)) at zero is exactly 0.25 per entry") {
  ad::Recording rec = ad::record_forward([](ad::Tape& tape) {
    const int v = tape.leaf(ad::Value::vector(VectorXd::Zero(4)), "theta");
    return tape.sum_all(tape.sigmoid(v));
  });
  const std::vector<VectorXd> grads = rec.tape.backward(rec.root);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(grads[0][i] == 0.25);
}

TEST_CASE("backward of outer3 satisfies the adjoint identities") {
  Rng rng(82);
  const VectorXd vc = random_vector(3, rng, 0.1, 0.9);
  const VectorXd vh = random_vector(4, rng, 0.1, 0.9);
  const VectorXd vw = random_vector(2, rng, 0.1, 0.9);
  ad::Recording rec = ad::record_forward([&](ad::Tape& tape) {
    const int c = tape.leaf(ad::Value::vector(vc), "vc");
    const int h = tape.leaf(ad::Value::vector(vh), "vh");
    const int w = tape.leaf(ad::Value::vector(vw), "vw");
    return tape.sum_all(tape.outer3(c, h, w));
  });
  const std::vector<VectorXd> grads = rec.tape.backward(rec.root);
  // dL/dvc[c] = sum_h sum_w vh[h] vw[w] when dL/dT = 1 everywhere
  for (Eigen::Index c = 0; c < 3; ++c)
    CHECK(std::abs(grads[0][c] - vh.sum() * vw.sum()) <= 1e-12);
  for (Eigen::Index h = 0; h < 4; ++h)
    CHECK(std::abs(grads[1][h] - vc.sum() * vw.sum()) <= 1e-12);
  for (Eigen::Index w = 0; w < 2; ++w)
    CHECK(std::abs(grads[2][w] - vc.sum() * vh.sum()) <= 1e-12);
}

TEST_CASE("gradient through mean pooling scales by exactly 1/count") {
  Rng rng(83);
  ad::Recording rec = ad::record_forward([&](ad::Tape& tape) {
    const int x = tape.leaf(ad::Value::tensor(random_tensor(Shape3(2, 3, 5), rng)), "x");
    return tape.sum_all(tape.pool_spatial(x));
  });
  const std::vector<VectorXd> grads = rec.tape.backward(rec.root);
  for (Eigen::Index i = 0; i < grads[0].size(); ++i) CHECK(grads[0][i] == 1.0 / 15.0);
}

TEST_CASE("lambda gradient carries the sigmoid-squash chain") {
  Rng rng(84);
  const VectorXd vc = random_vector(2, rng, 0.1, 0.9);
  const VectorXd vh = random_vector(2, rng, 0.1, 0.9);
  const VectorXd vw = random_vector(2, rng, 0.1, 0.9);
  const double theta = 0.4;
  ad::Recording rec = ad::record_forward([&](ad::Tape& tape) {
    const int raw = tape.leaf(ad::Value::vector(VectorXd::Constant(1, theta)), "lambda_raw");
    const int lam = tape.index(tape.sigmoid(raw), 0);
    const int c = tape.leaf(ad::Value::vector(vc));
    const int h = tape.leaf(ad::Value::vector(vh));
    const int w = tape.leaf(ad::Value::vector(vw));
    const int term = tape.outer3(c, h, w);
    const int zero = tape.leaf(ad::Value::tensor(Tensor3d::zero(Shape3(2, 2, 2))));
    return tape.sum_all(tape.axpy(zero, lam, term));
  });
  const std::vector<VectorXd> grads = rec.tape.backward(rec.root);
  // dL/dtheta = sigmoid'(theta) * <A_1, dL/dA> with dL/dA = 1 everywhere
  const double expected = sigmoid_derivative(theta) * (vc.sum() * vh.sum() * vw.sum());
  CHECK(std::abs(grads[0][0] - expected) <= 1e-12);
}

TEST_CASE("two backward passes give bit-identical gradients") {
  Rng rng(85);
  ad::Recording rec = ad::record_forward([&](ad::Tape& tape) {
    const int x = tape.leaf(ad::Value::tensor(random_tensor(Shape3(3, 2, 2), rng)), "x");
    const int pooled = tape.pool_spatial(x);
    const int w = tape.leaf(ad::Value::matrix(random_matrix(3, 3, rng)), "w");
    const int b = tape.leaf(ad::Value::vector(random_vector(3, rng)), "b");
    const int s = tape.sigmoid(tape.matvec_affine(w, pooled, b));
    return tape.sum_all(s);
  });
  const std::vector<VectorXd> a = rec.tape.backward(rec.root);
  const std::vector<VectorXd> b = rec.tape.backward(rec.root);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < a[i].size(); ++j) CHECK(a[i][j] == b[i][j]);
}

TEST_CASE("backward rejects a non-scalar root") {
  ad::Recording rec = ad::record_forward([](ad::Tape& tape) {
    return tape.sigmoid(tape.leaf(ad::Value::vector(VectorXd::Zero(2))));
  });
  CHECK_THROWS_AS(rec.tape.backward(rec.root), std::invalid_argument);
}

TEST_CASE("set_leaf rejects non-leaves and size mismatches") {
  ad::Recording rec = ad::record_forward([](ad::Tape& tape) {
    return tape.sum_all(tape.sigmoid(tape.leaf(ad::Value::vector(VectorXd::Zero(2)))));
  });
  CHECK_THROWS_AS(rec.tape.set_leaf(rec.root, ad::Value::scalar(1.0)), std::invalid_argument);
  CHECK_THROWS_AS(rec.tape.set_leaf(0, ad::Value::vector(VectorXd::Zero(3))),
                  std::invalid_argument);
  rec.tape.set_leaf(0, ad::Value::vector(VectorXd::Constant(2, 0.1)));
  rec.tape.replay();
  CHECK(rec.output().as_scalar() == 2.0 * sigmoid(0.1));
}

TEST_CASE("finite differences recover analytic gradients") {
  const ad::LossFn quadratic = [](const VectorXd& p) { return p[0] * p[0]; };
  VectorXd at(1);
  at << 3.0;
  CHECK(std::abs(ad::finite_diff_grad(quadratic, at)[0] - 6.0) <= 1e-9);

  const ad::LossFn linear = [](const VectorXd& p) { return 5.0 * p[0]; };
  CHECK(std::abs(ad::finite_diff_grad(linear, at)[0] - 5.0) <= 1e-10);
}

TEST_CASE("gradcheck passes a pure sigmoid chain below 1e-9") {
  Rng rng(86);
  const VectorXd params = random_vector(6, rng);
  const auto build = [](const VectorXd& p) {
    return ad::record_forward([&](ad::Tape& tape) {
      const int v = tape.leaf(ad::Value::vector(p), "theta");
      return tape.sum_all(tape.sigmoid(tape.sigmoid(v)));
    });
  };
  const ad::LossFn loss = [&](const VectorXd& p) { return build(p).output().as_scalar(); };
  const ad::GradFn grad = [&](const VectorXd& p) {
    ad::Recording rec = build(p);
    return rec.tape.backward(rec.root)[0];
  };
  const ad::GradcheckReport report = ad::gradcheck(loss, grad, params, {}, 1e-9);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-9);
  CHECK(report.per_block.size() == 1);
}

TEST_CASE("an injected backward fault fails gradcheck and is localized") {
  Rng rng(87);
  const VectorXd params = random_vector(4, rng);
  const auto build = [](const VectorXd& p) {
    return ad::record_forward([&](ad::Tape& tape) {
      const int v = tape.leaf(ad::Value::vector(p), "theta");
      return tape.sum_all(tape.sigmoid(v));
    });
  };
  const ad::LossFn loss = [&](const VectorXd& p) { return build(p).output().as_scalar(); };
  const ad::GradFn broken = [&](const VectorXd& p) {
    ad::Recording rec = build(p);
    rec.tape.inject_backward_fault(ad::Op::kSigmoid, 2.0);
    return rec.tape.backward(rec.root)[0];
  };
  std::vector<ad::ParamBlock> blocks{{"theta", 0, 4}};
  const ad::GradcheckReport report = ad::gradcheck(loss, broken, params, blocks, 1e-6);
  CHECK_FALSE(report.pass);
  CHECK(report.max_rel_err > 0.1);
  CHECK(report.worst_parameter.substr(0, 5) == "theta");
}
