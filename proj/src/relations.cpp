#include "reconet/relations.hpp"

#include <cmath>

namespace reconet {

VectorXd ones_vector(int n) {
  detail::require(n >= 1, "ones_vector: length must be >= 1");
  return VectorXd::Ones(n);
}

AttentionMap senet_attention(const VectorXd& vc, int height, int width) {
  detail::require(vc.size() >= 1, "senet_attention: channel vector is empty");
  Shape3 shape(static_cast<int>(vc.size()), height, width);
  Tensor3d a(shape);
  for (int c = 0; c < shape.channels; ++c)
    a.data().segment(a.index(c, 0, 0), shape.plane()).setConstant(vc[c]);
  return AttentionMap{std::move(a)};
}

AttentionMap cbam_attention(const VectorXd& vc, const MatrixXd& m_hw) {
  detail::require(vc.size() >= 1, "cbam_attention: channel vector is empty");
  detail::require(m_hw.rows() >= 1 && m_hw.cols() >= 1,
                  "cbam_attention: spatial map is empty");
  Shape3 shape(static_cast<int>(vc.size()), static_cast<int>(m_hw.rows()),
               static_cast<int>(m_hw.cols()));
  Tensor3d a(shape);
  for (int c = 0; c < shape.channels; ++c)
    for (int h = 0; h < shape.height; ++h)
      for (int w = 0; w < shape.width; ++w) a(c, h, w) = vc[c] * m_hw(h, w);
  return AttentionMap{std::move(a)};
}

DegenerationReport verify_senet_degeneration(const TgmParams& params, const Tensor3d& x) {
  detail::require(params.rank == 1,
                  "verify_senet_degeneration: needs rank 1, got " + std::to_string(params.rank));
  const Shape3& s = x.shape();

  // Forward pass with injected fragments: vh = vw = ones, lambda = 1.
  FragmentSet frags;
  FragmentTriplet t;
  t.vc = channel_fragment(x, params.reps.front());
  t.vh = ones_vector(s.height);
  t.vw = ones_vector(s.width);
  frags.triplets.push_back(t);
  frags.lambdas = VectorXd::Ones(1);
  const AttentionMap a = reconstruct(frags, s);
  const Tensor3d y = apply_context(a, x);

  const AttentionMap a_se = senet_attention(t.vc, s.height, s.width);
  const Tensor3d y_se = apply_context(a_se, x);

  DegenerationReport report;
  auto add_check = [&](const std::string& name, double deviation) {
    report.checks.push_back({name, deviation, deviation == 0.0});
  };

  double dev_a = 0.0;
  for (Eigen::Index i = 0; i < a.tensor.size(); ++i)
    dev_a = std::max(dev_a, std::abs(a.tensor.data()[i] - a_se.tensor.data()[i]));
  add_check("attention equals channel-broadcast form", dev_a);

  double dev_y = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    dev_y = std::max(dev_y, std::abs(y.data()[i] - y_se.data()[i]));
  add_check("context feature equals channel-reweighted input", dev_y);

  double dev_slice = 0.0;
  for (int c = 0; c < s.channels; ++c)
    for (int h = 0; h < s.height; ++h)
      for (int w = 0; w < s.width; ++w)
        dev_slice = std::max(dev_slice, std::abs(a.tensor(c, h, w) - a.tensor(c, 0, 0)));
  add_check("spatial slices constant per channel", dev_slice);

  report.pass = true;
  for (const auto& check : report.checks) report.pass = report.pass && check.pass;
  return report;
}

}  // namespace reconet
