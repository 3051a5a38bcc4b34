#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reconet/model.hpp"
#include "reconet/tensor.hpp"

namespace reconet {

// Desk-scale synthetic segmentation task: colored rectangles on a background,
// one class signature per label plus noise.
struct TrainConfig {
  int channels = 8;
  int height = 16;
  int width = 16;
  int num_classes = 4;
  int num_images = 16;
  int out_channels = 8;  // GPM width
  int rank = 8;
  int steps = 500;
  double lr = 0.05;
};

// Flat key=value lines, '#' comments. Keys: C, H, W, K, images, out_channels,
// rank, steps, lr, seed. Unknown keys are an error; absent keys keep the
// defaults passed in.
TrainConfig parse_train_config(const std::string& path, std::uint64_t* seed_out = nullptr,
                               const TrainConfig& defaults = {});

struct ToyDataset {
  std::vector<Tensor3d> images;
  std::vector<LabelMap> labels;
};

// Each image starts as all-background, then two or three axis-aligned
// rectangles of random classes overwrite it. Pixel features are the class
// signature vector plus Gaussian noise.
ToyDataset make_toy_dataset(const TrainConfig& config, std::uint64_t seed);

struct TrainStep {
  int step = 0;
  double lr = 0.0;
  double loss_main = 0.0;
  double loss_aux = 0.0;
  double loss_total = 0.0;
};

struct TrainingReport {
  std::vector<TrainStep> curve;  // one entry per step, recorded pre-update
  double final_loss = 0.0;
  double final_accuracy = 0.0;  // mean training pixel accuracy
};

// Full-batch gradient descent on the composite loss. Step sizes follow
// lr * (1 - t/steps)^0.9, additionally halved whenever the loss fails to
// improve on its best value so far. Deterministic given (config, seed);
// throws std::runtime_error if the loss leaves the finite range.
TrainingReport toy_train(const TrainConfig& config, std::uint64_t seed);

// CSV with a step,loss_main,loss_aux,loss_total header, one row per step,
// and a final summary comment line.
void write_training_csv(const std::string& path, const TrainingReport& report);

}  // namespace reconet
