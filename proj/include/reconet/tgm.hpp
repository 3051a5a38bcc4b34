#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reconet/tensor.hpp"

namespace reconet {

// One generator repetition: a C->C channel map plus learned length-C
// collapse weights for the height and width directions.
struct TgmRepetitionParams {
  MatrixXd channel_weight;  // C x C
  VectorXd channel_bias;    // C
  VectorXd height_weight;   // C
  double height_bias = 0.0;
  VectorXd width_weight;  // C
  double width_bias = 0.0;

  int channels() const { return static_cast<int>(channel_bias.size()); }
};

struct TgmParams {
  int rank = 0;
  std::vector<TgmRepetitionParams> reps;
  VectorXd lambda_raw;  // length rank, pre-squash

  int channels() const { return reps.empty() ? 0 : reps.front().channels(); }
};

// Post-sigmoid rank-1 vectors in the three directions; entries in (0,1).
struct FragmentTriplet {
  VectorXd vc;  // length C
  VectorXd vh;  // length H
  VectorXd vw;  // length W
};

struct FragmentSet {
  std::vector<FragmentTriplet> triplets;
  VectorXd lambdas;  // sigmoid(lambda_raw), each in (0,1)

  int rank() const { return static_cast<int>(triplets.size()); }
};

// Weights uniform in [-1/sqrt(C), 1/sqrt(C)] from the seeded stream, biases
// zero, lambda_raw zero (so every lambda starts at 0.5). Draw order per
// repetition: channel_weight row-major, then height_weight, then width_weight.
TgmParams init_tgm(int channels, int rank, std::uint64_t seed);

// Scalar parameters held by p, lambda_raw included.
std::size_t parameter_count(const TgmParams& p);

// sigmoid(channel_weight * pool_spatial(x) + channel_bias)
VectorXd channel_fragment(const Tensor3d& x, const TgmRepetitionParams& p);

// sigmoid(height_weight . pool_over_width(x)[:,h] + height_bias)
VectorXd height_fragment(const Tensor3d& x, const TgmRepetitionParams& p);

// sigmoid(width_weight . pool_over_height(x)[:,w] + width_bias)
VectorXd width_fragment(const Tensor3d& x, const TgmRepetitionParams& p);

// r independent triplets plus lambdas = sigmoid(lambda_raw).
FragmentSet generate_fragments(const Tensor3d& x, const TgmParams& params);

// "RCP1" checkpoint: magic, u32le C, u32le r, then per repetition the fields
// in declaration order (channel_weight row-major, channel_bias, height_weight,
// height_bias, width_weight, width_bias) as f64le, then lambda_raw.
void save_tgm(const std::string& path, const TgmParams& p);
TgmParams load_tgm(const std::string& path);

}  // namespace reconet
