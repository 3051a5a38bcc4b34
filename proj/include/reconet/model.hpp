#pragma once

#include <cstdint>
#include <vector>

#include "reconet/autodiff.hpp"
#include "reconet/gpm_head.hpp"
#include "reconet/tgm.hpp"
#include "reconet/trm.hpp"

namespace reconet {

// Linear classifier on the raw input feature; stands in for a deeper
// auxiliary branch at desk scale.
struct AuxParams {
  MatrixXd weight;  // K x C
  VectorXd bias;    // K
};

struct ModelParams {
  TgmParams tgm;
  GpmParams gpm;
  HeadParams head;
  AuxParams aux;
};

AuxParams init_aux(int channels, int num_classes, std::uint64_t seed);

// Sub-seeds for the four blocks come from one stream seeded with `seed`.
ModelParams init_model(int channels, int out_channels, int num_classes, int rank,
                       std::uint64_t seed);

// Blocks of the flattened parameter vector, in flatten order. Matrix blocks
// are column-major, matching the tape's Value layout.
std::vector<ad::ParamBlock> model_layout(const ModelParams& p);

Eigen::Index model_size(const ModelParams& p);

VectorXd flatten(const ModelParams& p);

// Rebuilds parameters from a flat vector; `reference` supplies the
// dimensions.
ModelParams unflatten(const VectorXd& flat, const ModelParams& reference);

// Untaped forward pass to the composite loss for one image.
LossBreakdown model_loss(const ModelParams& p, const Tensor3d& x, const LabelMap& labels);

// Mean composite loss over the batch, images summed in order.
double batch_loss(const ModelParams& p, const std::vector<Tensor3d>& xs,
                  const std::vector<LabelMap>& labels);

// Argmax class per pixel from the head logits; ties go to the lower index.
LabelMap predict(const ModelParams& p, const Tensor3d& x);

double pixel_accuracy(const LabelMap& predicted, const LabelMap& truth);

struct LossTape {
  ad::Tape tape;
  int root = -1;
  std::vector<int> param_leaves;  // one per model_layout block, same order
  std::vector<int> main_nodes;    // per image
  std::vector<int> aux_nodes;     // per image
};

// Tapes the mean composite loss over the batch. The root primal is bitwise
// equal to batch_loss at the same parameters, so the finite-difference
// oracle and the tape gradient see the same function.
LossTape build_loss_tape(const ModelParams& p, const std::vector<Tensor3d>& xs,
                         const std::vector<LabelMap>& labels);

// Overwrites the tape's parameter leaves from a flat vector, then replays;
// `reference` supplies the block dimensions.
void set_tape_params(LossTape& t, const ModelParams& reference, const VectorXd& flat);

// Gradient of batch_loss with respect to flatten(p), one reverse sweep.
VectorXd tape_gradient(const LossTape& t);

VectorXd batch_gradient(const ModelParams& p, const std::vector<Tensor3d>& xs,
                        const std::vector<LabelMap>& labels);

}  // namespace reconet
