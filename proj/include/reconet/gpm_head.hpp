#pragma once

#include <cstdint>

#include "reconet/tensor.hpp"

namespace reconet {

// H x W map of class indices in [0, K).
using LabelMap = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Weight on the auxiliary loss in the composite objective.
constexpr double kAuxLossWeight = 0.2;

// Global pooling module: global average pool followed by a 1x1 convolution,
// i.e. an affine map on the pooled channel vector.
struct GpmParams {
  MatrixXd weight;  // C_out x C
  VectorXd bias;    // C_out

  int out_channels() const { return static_cast<int>(bias.size()); }
  int in_channels() const { return static_cast<int>(weight.cols()); }
};

// Per-pixel linear classifier over concat(x, y, g).
struct HeadParams {
  MatrixXd classifier_weight;  // K x (C + C + C_out)
  VectorXd classifier_bias;    // K
  int num_classes = 0;
};

struct LossBreakdown {
  double main = 0.0;
  double aux = 0.0;
  double total = 0.0;  // main + alpha * aux, exactly as computed
  double alpha = kAuxLossWeight;
};

// weight . pool_spatial(x) + bias; no nonlinearity.
VectorXd gpm_forward(const Tensor3d& x, const GpmParams& p);

// K x H x W logits from features: logits[k,h,w] = w.row(k) . features[:,h,w]
// + b[k], entries accumulated in ascending channel order.
Tensor3d per_pixel_affine(const Tensor3d& features, const MatrixXd& w, const VectorXd& b);

// Per pixel: classifier over concat(x[:,h,w], y[:,h,w], g). The global vector
// g is broadcast in place; no tiled tensor is materialized. Accumulation runs
// x block, y block, g block, so the result is bitwise equal to
// per_pixel_affine over an explicitly concatenated feature tensor.
Tensor3d head_forward(const Tensor3d& x, const Tensor3d& y, const VectorXd& g,
                      const HeadParams& p);

// Channel-axis concatenation (shared H, W).
Tensor3d concat_channels(const Tensor3d& a, const Tensor3d& b);

// v tiled to a v.size() x H x W tensor.
Tensor3d broadcast_channels(const VectorXd& v, int height, int width);

// Mean over pixels of -log softmax(logits[:,h,w])[labels(h,w)], stabilized by
// max subtraction. Pixels are summed in row-major (h, w) order.
double softmax_cross_entropy(const Tensor3d& logits, const LabelMap& labels);

LossBreakdown total_loss(double main, double aux);

// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)] drawn row-major from
// the seeded stream, zero biases.
GpmParams init_gpm(int channels, int out_channels, std::uint64_t seed);
HeadParams init_head(int channels, int out_channels, int num_classes, std::uint64_t seed);

}  // namespace reconet
