#include "reconet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "reconet/rng.hpp"

namespace reconet {

namespace {

constexpr double kSignalAmplitude = 1.5;
constexpr double kNoiseSigma = 0.25;
constexpr double kPolyPower = 0.9;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long parsed = 0;
  try {
    parsed = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::runtime_error("train config: bad integer for " + key + ": '" + value + "'");
  return parsed;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::runtime_error("train config: bad number for " + key + ": '" + value + "'");
  return parsed;
}

void check_config(const TrainConfig& c) {
  detail::require(c.channels >= 1 && c.out_channels >= 1, "train config: channels must be >= 1");
  detail::require(c.height >= 1 && c.height <= 32 && c.width >= 1 && c.width <= 32,
                  "train config: spatial extents must be in [1, 32]");
  detail::require(c.num_classes >= 2 && c.num_classes <= 5,
                  "train config: classes must be in [2, 5]");
  detail::require(c.channels >= c.num_classes,
                  "train config: need at least one channel per class");
  detail::require(c.num_images >= 1, "train config: need at least one image");
  detail::require(c.rank >= 1, "train config: rank must be >= 1");
  detail::require(c.steps >= 0, "train config: steps must be >= 0");
  detail::require(c.lr > 0.0, "train config: lr must be positive");
}

}  // namespace

TrainConfig parse_train_config(const std::string& path, std::uint64_t* seed_out,
                               const TrainConfig& defaults) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("train config: cannot open " + path);
  TrainConfig config = defaults;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("train config: line " + std::to_string(line_no) +
                               " is not key=value: '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "C") {
      config.channels = static_cast<int>(parse_long(key, value));
    } else if (key == "H") {
      config.height = static_cast<int>(parse_long(key, value));
    } else if (key == "W") {
      config.width = static_cast<int>(parse_long(key, value));
    } else if (key == "K") {
      config.num_classes = static_cast<int>(parse_long(key, value));
    } else if (key == "images") {
      config.num_images = static_cast<int>(parse_long(key, value));
    } else if (key == "out_channels") {
      config.out_channels = static_cast<int>(parse_long(key, value));
    } else if (key == "rank") {
      config.rank = static_cast<int>(parse_long(key, value));
    } else if (key == "steps") {
      config.steps = static_cast<int>(parse_long(key, value));
    } else if (key == "lr") {
      config.lr = parse_double(key, value);
    } else if (key == "seed") {
      const long seed = parse_long(key, value);
      if (seed_out != nullptr) *seed_out = static_cast<std::uint64_t>(seed);
    } else {
      throw std::runtime_error("train config: unknown key '" + key + "' on line " +
                               std::to_string(line_no));
    }
  }
  return config;
}

ToyDataset make_toy_dataset(const TrainConfig& config, std::uint64_t seed) {
  check_config(config);
  Rng rng(seed);
  const int k_count = config.num_classes;

  // One signature per class: amplitude on the channels congruent to the
  // class index, zero elsewhere. Classes stay linearly separable; the noise
  // below keeps the task nontrivial.
  std::vector<VectorXd> signatures(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    VectorXd s = VectorXd::Zero(config.channels);
    for (int c = 0; c < config.channels; ++c)
      if (c % k_count == k) s[c] = kSignalAmplitude;
    signatures[static_cast<std::size_t>(k)] = s;
  }

  ToyDataset data;
  const Shape3 shape(config.channels, config.height, config.width);
  for (int img = 0; img < config.num_images; ++img) {
    LabelMap labels = LabelMap::Zero(config.height, config.width);
    const int rects = 2 + rng.below(2);
    for (int rect = 0; rect < rects; ++rect) {
      const int cls = 1 + rng.below(k_count - 1);
      const int h0 = rng.below(config.height);
      const int w0 = rng.below(config.width);
      const int extent_h = 1 + rng.below(std::max(1, config.height / 2));
      const int extent_w = 1 + rng.below(std::max(1, config.width / 2));
      for (int h = h0; h < std::min(config.height, h0 + extent_h); ++h)
        for (int w = w0; w < std::min(config.width, w0 + extent_w); ++w) labels(h, w) = cls;
    }
    Tensor3d x(shape);
    for (int c = 0; c < config.channels; ++c)
      for (int h = 0; h < config.height; ++h)
        for (int w = 0; w < config.width; ++w)
          x(c, h, w) =
              signatures[static_cast<std::size_t>(labels(h, w))][c] + kNoiseSigma * rng.normal();
    data.images.push_back(std::move(x));
    data.labels.push_back(std::move(labels));
  }
  return data;
}

TrainingReport toy_train(const TrainConfig& config, std::uint64_t seed) {
  check_config(config);
  Rng seeds(seed);
  const std::uint64_t data_seed = seeds.next_u64();
  const std::uint64_t model_seed = seeds.next_u64();
  const ToyDataset data = make_toy_dataset(config, data_seed);
  const ModelParams reference =
      init_model(config.channels, config.out_channels, config.num_classes, config.rank,
                 model_seed);

  TrainingReport report;
  VectorXd flat = flatten(reference);
  const double inv_images = 1.0 / static_cast<double>(config.num_images);

  if (config.steps > 0) {
    LossTape tape = build_loss_tape(reference, data.images, data.labels);
    double best = std::numeric_limits<double>::infinity();
    double plateau_mult = 1.0;
    for (int t = 0; t < config.steps; ++t) {
      double main_sum = 0.0;
      double aux_sum = 0.0;
      for (std::size_t i = 0; i < data.images.size(); ++i) {
        main_sum += tape.tape.value(tape.main_nodes[i]).as_scalar();
        aux_sum += tape.tape.value(tape.aux_nodes[i]).as_scalar();
      }
      const double total = tape.tape.value(tape.root).as_scalar();
      if (!std::isfinite(total))
        throw std::runtime_error("toy_train: loss became non-finite at step " +
                                 std::to_string(t));
      if (total > best) {
        plateau_mult *= 0.5;
      } else {
        best = total;
      }
      const double decay =
          std::pow(1.0 - static_cast<double>(t) / static_cast<double>(config.steps), kPolyPower);
      const double lr_t = config.lr * decay * plateau_mult;
      report.curve.push_back({t, lr_t, main_sum * inv_images, aux_sum * inv_images, total});

      const VectorXd grad = tape_gradient(tape);
      flat -= lr_t * grad;
      set_tape_params(tape, reference, flat);
    }
    report.final_loss = tape.tape.value(tape.root).as_scalar();
  } else {
    report.final_loss = batch_loss(reference, data.images, data.labels);
  }

  const ModelParams trained = unflatten(flat, reference);
  double accuracy_sum = 0.0;
  for (std::size_t i = 0; i < data.images.size(); ++i)
    accuracy_sum += pixel_accuracy(predict(trained, data.images[i]), data.labels[i]);
  report.final_accuracy = accuracy_sum * inv_images;
  return report;
}

void write_training_csv(const std::string& path, const TrainingReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_training_csv: cannot open " + path);
  os << "step,loss_main,loss_aux,loss_total\n";
  char buf[160];
  for (const auto& row : report.curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.step, row.loss_main,
                  row.loss_aux, row.loss_total);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "# final_loss=%.17g final_accuracy=%.6f\n", report.final_loss,
                report.final_accuracy);
  os << buf;
  if (!os) throw std::runtime_error("write_training_csv: write failed for " + path);
}

}  // namespace reconet
