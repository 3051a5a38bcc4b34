#include "reconet/gpm_head.hpp"

#include <cmath>

#include "reconet/rng.hpp"

namespace reconet {

VectorXd gpm_forward(const Tensor3d& x, const GpmParams& p) {
  detail::require(p.weight.rows() == p.bias.size() && p.weight.rows() >= 1,
                  "gpm_forward: weight rows and bias length disagree");
  detail::require(p.weight.cols() == x.shape().channels,
                  "gpm_forward: weight expects " + std::to_string(p.weight.cols()) +
                      " channels, tensor has " + std::to_string(x.shape().channels));
  return detail::affine_matvec(p.weight, pool_spatial(x), p.bias);
}

Tensor3d per_pixel_affine(const Tensor3d& features, const MatrixXd& w, const VectorXd& b) {
  const Shape3& s = features.shape();
  detail::require(w.rows() == b.size() && w.rows() >= 1,
                  "per_pixel_affine: weight rows and bias length disagree");
  detail::require(w.cols() == s.channels,
                  "per_pixel_affine: weight expects " + std::to_string(w.cols()) +
                      " channels, tensor has " + std::to_string(s.channels));
  const int k_count = static_cast<int>(w.rows());
  Tensor3d out(Shape3(k_count, s.height, s.width));
  for (int k = 0; k < k_count; ++k) {
    for (int h = 0; h < s.height; ++h) {
      for (int ww = 0; ww < s.width; ++ww) {
        double sum = 0.0;
        for (int c = 0; c < s.channels; ++c) sum += w(k, c) * features(c, h, ww);
        out(k, h, ww) = sum + b[k];
      }
    }
  }
  return out;
}

Tensor3d head_forward(const Tensor3d& x, const Tensor3d& y, const VectorXd& g,
                      const HeadParams& p) {
  const Shape3& s = x.shape();
  detail::require(s == y.shape(), "head_forward: x and y shapes differ, " + s.to_string() +
                                      " vs " + y.shape().to_string());
  const int c_in = s.channels;
  const int c_out = static_cast<int>(g.size());
  detail::require(p.num_classes >= 2 && p.classifier_weight.rows() == p.num_classes &&
                      p.classifier_bias.size() == p.num_classes,
                  "head_forward: classifier rows must equal num_classes >= 2");
  detail::require(p.classifier_weight.cols() == 2 * c_in + c_out,
                  "head_forward: classifier expects " +
                      std::to_string(p.classifier_weight.cols()) + " inputs, got " +
                      std::to_string(2 * c_in + c_out));
  Tensor3d out(Shape3(p.num_classes, s.height, s.width));
  const MatrixXd& w = p.classifier_weight;
  for (int k = 0; k < p.num_classes; ++k) {
    for (int h = 0; h < s.height; ++h) {
      for (int ww = 0; ww < s.width; ++ww) {
        double sum = 0.0;
        for (int c = 0; c < c_in; ++c) sum += w(k, c) * x(c, h, ww);
        for (int c = 0; c < c_in; ++c) sum += w(k, c_in + c) * y(c, h, ww);
        for (int c = 0; c < c_out; ++c) sum += w(k, 2 * c_in + c) * g[c];
        out(k, h, ww) = sum + p.classifier_bias[k];
      }
    }
  }
  return out;
}

Tensor3d concat_channels(const Tensor3d& a, const Tensor3d& b) {
  const Shape3& sa = a.shape();
  const Shape3& sb = b.shape();
  detail::require(sa.height == sb.height && sa.width == sb.width,
                  "concat_channels: spatial extents differ, " + sa.to_string() + " vs " +
                      sb.to_string());
  Tensor3d out(Shape3(sa.channels + sb.channels, sa.height, sa.width));
  out.data().head(a.size()) = a.data();
  out.data().tail(b.size()) = b.data();
  return out;
}

Tensor3d broadcast_channels(const VectorXd& v, int height, int width) {
  detail::require(v.size() >= 1, "broadcast_channels: vector must be non-empty");
  Tensor3d out(Shape3(static_cast<int>(v.size()), height, width));
  for (int c = 0; c < v.size(); ++c)
    out.data().segment(out.index(c, 0, 0), out.shape().plane()).setConstant(v[c]);
  return out;
}

double softmax_cross_entropy(const Tensor3d& logits, const LabelMap& labels) {
  const Shape3& s = logits.shape();
  detail::require(labels.rows() == s.height && labels.cols() == s.width,
                  "softmax_cross_entropy: label map is " + std::to_string(labels.rows()) + "x" +
                      std::to_string(labels.cols()) + ", logits are " + s.to_string());
  double sum = 0.0;
  for (int h = 0; h < s.height; ++h) {
    for (int w = 0; w < s.width; ++w) {
      const int label = labels(h, w);
      detail::require(label >= 0 && label < s.channels,
                      "softmax_cross_entropy: label " + std::to_string(label) + " at (" +
                          std::to_string(h) + "," + std::to_string(w) + ") outside [0," +
                          std::to_string(s.channels) + ")");
      double top = logits(0, h, w);
      for (int k = 1; k < s.channels; ++k) top = std::max(top, logits(k, h, w));
      double denom = 0.0;
      for (int k = 0; k < s.channels; ++k) denom += std::exp(logits(k, h, w) - top);
      sum += std::log(denom) - (logits(label, h, w) - top);
    }
  }
  return sum / static_cast<double>(s.plane());
}

LossBreakdown total_loss(double main, double aux) {
  detail::require(main >= 0.0 && aux >= 0.0, "total_loss: losses must be nonnegative");
  LossBreakdown out;
  out.main = main;
  out.aux = aux;
  out.total = main + kAuxLossWeight * aux;
  return out;
}

GpmParams init_gpm(int channels, int out_channels, std::uint64_t seed) {
  detail::require(channels >= 1 && out_channels >= 1,
                  "init_gpm: channel counts must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  Rng rng(seed);
  GpmParams p;
  p.weight = random_matrix(out_channels, channels, rng, -bound, bound);
  p.bias = VectorXd::Zero(out_channels);
  return p;
}

HeadParams init_head(int channels, int out_channels, int num_classes, std::uint64_t seed) {
  detail::require(channels >= 1 && out_channels >= 1, "init_head: channel counts must be >= 1");
  detail::require(num_classes >= 2, "init_head: need at least two classes");
  const int fan_in = 2 * channels + out_channels;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Rng rng(seed);
  HeadParams p;
  p.classifier_weight = random_matrix(num_classes, fan_in, rng, -bound, bound);
  p.classifier_bias = VectorXd::Zero(num_classes);
  p.num_classes = num_classes;
  return p;
}

}  // namespace reconet
