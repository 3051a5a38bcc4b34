#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reconet/autodiff.hpp"
#include "reconet/cost_model.hpp"
#include "reconet/fit.hpp"
#include "reconet/io.hpp"
#include "reconet/model.hpp"
#include "reconet/relations.hpp"
#include "reconet/rng.hpp"
#include "reconet/train.hpp"
#include "reconet/trm.hpp"

namespace {

using namespace reconet;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct GradcheckFlags {
  int channels = 6;
  int height = 5;
  int width = 4;
  int rank = 3;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckFlags& f) {
  const int num_classes = 3;
  Rng rng(f.seed);
  const std::uint64_t model_seed = rng.next_u64();
  const Shape3 shape(f.channels, f.height, f.width);
  // Strictly positive inputs keep every gradient coordinate above the
  // finite-difference noise floor at the fixed step size.
  const Tensor3d x = random_tensor(shape, rng, 1.0, 4.0);
  LabelMap labels(f.height, f.width);
  for (int h = 0; h < f.height; ++h)
    for (int w = 0; w < f.width; ++w) labels(h, w) = rng.below(num_classes);

  const ModelParams params =
      init_model(f.channels, f.channels, num_classes, f.rank, model_seed);
  const std::vector<Tensor3d> xs{x};
  const std::vector<LabelMap> ls{labels};
  const ad::LossFn loss = [&](const VectorXd& p) {
    return batch_loss(unflatten(p, params), xs, ls);
  };
  const ad::GradFn grad = [&](const VectorXd& p) {
    return batch_gradient(unflatten(p, params), xs, ls);
  };
  const ad::GradcheckReport report =
      ad::gradcheck(loss, grad, flatten(params), model_layout(params), f.tolerance);

  for (const auto& [name, err] : report.per_block)
    std::printf("%-24s %.3e\n", name.c_str(), err);
  std::printf("%s max_rel_err=%.3e tolerance=%.1e worst=%s\n",
              report.pass ? "PASS" : "FAIL", report.max_rel_err, report.tolerance,
              report.worst_parameter.c_str());
  return report.pass ? kExitPass : kExitFail;
}

struct CostFlags {
  int channels = 512;
  int height = 64;
  int width = 64;
  int rank = 64;
};

int run_costs(const CostFlags& f) {
  const CostComparison cmp = compare(f.channels, f.height, f.width, f.rank);
  std::printf("C=%d H=%d W=%d r=%d\n\n", f.channels, f.height, f.width, f.rank);
  std::printf("%-16s %16s %10s %14s %9s\n", "method", "MACs", "GFLOPs", "bytes", "MB");
  for (const auto& row : cmp.rows) {
    std::printf("%-16s %16llu %10.4f %14llu %9.2f%s\n", row.method.c_str(),
                static_cast<unsigned long long>(row.mac_count),
                static_cast<double>(row.mac_count) / 1e9,
                static_cast<unsigned long long>(row.memory_bytes),
                static_cast<double>(row.memory_bytes) / 1e6,
                row.is_reference ? "  (reference)" : "");
  }
  std::printf("\nnonlocal / TGM+TRM MAC ratio: %.1f\n\n", cmp.nonlocal_over_tgm);
  for (const auto& row : cmp.rows)
    std::printf("%s,%llu,%llu\n", row.method.c_str(),
                static_cast<unsigned long long>(row.mac_count),
                static_cast<unsigned long long>(row.memory_bytes));
  return kExitPass;
}

struct DemoFlags {
  std::string input;
  bool random = false;
  int channels = 8;
  int height = 16;
  int width = 16;
  int rank = 4;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int run_demo(const DemoFlags& f) {
  Tensor3d x;
  if (!f.input.empty()) {
    x = read_rcn1(f.input);
  } else if (f.random) {
    Rng rng(f.seed + 1);  // offset keeps the input stream apart from init_tgm's
    x = random_tensor(Shape3(f.channels, f.height, f.width), rng);
  } else {
    std::fprintf(stderr, "demo: pass --input FILE or --random\n");
    return kExitUsage;
  }
  const Shape3& s = x.shape();
  if (f.rank > std::min({s.channels, s.height, s.width}))
    std::fprintf(stderr,
                 "note: rank %d exceeds the smallest extent of %s; reconstruction can "
                 "still use every term\n",
                 f.rank, s.to_string().c_str());

  const TgmParams params = init_tgm(s.channels, f.rank, f.seed);
  const ForwardResult fwd = tgm_trm_forward(x, params);

  std::filesystem::create_directories(f.out);
  const std::string attention_path = f.out + "/attention.rcn1";
  write_rcn1(attention_path, fwd.attention.tensor);
  std::printf("wrote %s\n", attention_path.c_str());

  for (int i = 0; i < fwd.fragments.rank(); ++i) {
    const SubAttentionMap sub = sub_attention(fwd.fragments.triplets[i], i + 1);
    const Tensor3d weighted = hadamard(sub.tensor, x);
    MatrixXd heat = MatrixXd::Zero(s.height, s.width);
    for (int h = 0; h < s.height; ++h)
      for (int w = 0; w < s.width; ++w) {
        double sum = 0.0;
        for (int c = 0; c < s.channels; ++c) sum += weighted(c, h, w);
        heat(h, w) = sum / s.channels;
      }
    char name[64];
    std::snprintf(name, sizeof(name), "/sub_attention_%02d.pgm", sub.source_index);
    const std::string path = f.out + name;
    write_pgm(path, heat);
    std::printf("wrote %s\n", path.c_str());
  }
  return kExitPass;
}

struct VerifyFlags {
  int channels = 8;
  int height = 7;
  int width = 5;
  std::uint64_t seed = 0;
};

int run_verify(const VerifyFlags& f) {
  Rng rng(f.seed);
  const std::uint64_t tgm_seed = rng.next_u64();
  const Tensor3d x = random_tensor(Shape3(f.channels, f.height, f.width), rng);
  const TgmParams params = init_tgm(f.channels, 1, tgm_seed);
  DegenerationReport report = verify_senet_degeneration(params, x);

  // Separable spatial map against the rank-1 term it should equal.
  VectorXd vc(f.channels), vh(f.height), vw(f.width);
  for (int c = 0; c < f.channels; ++c) vc[c] = rng.uniform();
  for (int h = 0; h < f.height; ++h) vh[h] = rng.uniform();
  for (int w = 0; w < f.width; ++w) vw[w] = rng.uniform();
  MatrixXd m_hw(f.height, f.width);
  for (int h = 0; h < f.height; ++h)
    for (int w = 0; w < f.width; ++w) m_hw(h, w) = vh[h] * vw[w];
  const AttentionMap cbam = cbam_attention(vc, m_hw);
  const SubAttentionMap sub = sub_attention({vc, vh, vw}, 1);
  double dev = 0.0;
  for (Eigen::Index i = 0; i < cbam.tensor.size(); ++i)
    dev = std::max(dev, std::abs(cbam.tensor.data()[i] - sub.tensor.data()[i]));
  report.checks.push_back({"separable spatial map equals rank-1 term", dev, dev == 0.0});
  report.pass = report.pass && dev == 0.0;

  for (const auto& check : report.checks)
    std::printf("%-44s %s (max deviation %.3e)\n", check.name.c_str(),
                check.pass ? "PASS" : "FAIL", check.max_deviation);
  std::printf("%s\n", report.pass ? "PASS" : "FAIL");
  return report.pass ? kExitPass : kExitFail;
}

struct SweepFlags {
  int channels = 4;
  int height = 4;
  int width = 4;
  std::vector<int> ranks{1, 2, 4, 8, 16};
  int steps = 2000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_rank_sweep(const SweepFlags& f) {
  Rng rng(f.seed);
  const Tensor3d target = random_tensor(Shape3(f.channels, f.height, f.width), rng);
  FitOptions opts;
  opts.max_iters = f.steps;
  const auto points = rank_sweep(target, f.ranks, f.seed + 1, opts);

  std::string csv = "rank,final_mse\n";
  char line[64];
  for (const auto& point : points) {
    std::snprintf(line, sizeof(line), "%d,%.17g\n", point.rank, point.mse);
    csv += line;
  }
  if (f.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::FILE* file = std::fopen(f.out.c_str(), "w");
    if (file == nullptr) throw std::runtime_error("rank-sweep: cannot open " + f.out);
    std::fputs(csv.c_str(), file);
    std::fclose(file);
    std::printf("wrote %s\n", f.out.c_str());
  }
  return kExitPass;
}

struct TrainFlags {
  std::string input;
  std::string out = "toy_train.csv";
  TrainConfig config;
  std::uint64_t seed = 0;
  bool seed_flag_set = false;
  bool rank_set = false;
  bool steps_set = false;
  bool lr_set = false;
};

int run_train_toy(TrainFlags f) {
  if (!f.input.empty()) {
    const TrainConfig overrides = f.config;
    std::uint64_t file_seed = f.seed;
    f.config = parse_train_config(f.input, &file_seed);
    if (!f.seed_flag_set) f.seed = file_seed;
    if (f.rank_set) f.config.rank = overrides.rank;
    if (f.steps_set) f.config.steps = overrides.steps;
    if (f.lr_set) f.config.lr = overrides.lr;
  }
  const TrainingReport report = toy_train(f.config, f.seed);
  write_training_csv(f.out, report);
  std::printf("steps=%d final_loss=%.6f pixel_accuracy=%.4f\n",
              static_cast<int>(report.curve.size()), report.final_loss,
              report.final_accuracy);
  std::printf("wrote %s\n", f.out.c_str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor low-rank context reconstruction toolkit"};
  app.require_subcommand(1);

  GradcheckFlags gradcheck_flags;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Check tape gradients against finite differences");
  gradcheck_cmd->add_option("--C", gradcheck_flags.channels, "Channels");
  gradcheck_cmd->add_option("--H", gradcheck_flags.height, "Height");
  gradcheck_cmd->add_option("--W", gradcheck_flags.width, "Width");
  gradcheck_cmd->add_option("--r", gradcheck_flags.rank, "Tensor rank");
  gradcheck_cmd->add_option("--tolerance", gradcheck_flags.tolerance, "Max relative error");
  gradcheck_cmd->add_option("--seed", gradcheck_flags.seed, "Random seed");

  CostFlags cost_flags;
  CLI::App* costs_cmd = app.add_subcommand("costs", "Analytic MAC and memory comparison");
  costs_cmd->add_option("--C", cost_flags.channels, "Channels");
  costs_cmd->add_option("--H", cost_flags.height, "Height");
  costs_cmd->add_option("--W", cost_flags.width, "Width");
  costs_cmd->add_option("--r", cost_flags.rank, "Tensor rank");

  DemoFlags demo_flags;
  CLI::App* demo_cmd =
      app.add_subcommand("demo", "Forward pass with attention and heat-map export");
  demo_cmd->add_option("--input", demo_flags.input, "Input tensor (RCN1)");
  demo_cmd->add_flag("--random", demo_flags.random, "Generate a random input instead");
  demo_cmd->add_option("--C", demo_flags.channels, "Channels (with --random)");
  demo_cmd->add_option("--H", demo_flags.height, "Height (with --random)");
  demo_cmd->add_option("--W", demo_flags.width, "Width (with --random)");
  demo_cmd->add_option("--r", demo_flags.rank, "Tensor rank");
  demo_cmd->add_option("--seed", demo_flags.seed, "Random seed");
  demo_cmd->add_option("--out", demo_flags.out, "Output directory");

  VerifyFlags verify_flags;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Structural degeneration checks (exact)");
  verify_cmd->add_option("--C", verify_flags.channels, "Channels");
  verify_cmd->add_option("--H", verify_flags.height, "Height");
  verify_cmd->add_option("--W", verify_flags.width, "Width");
  verify_cmd->add_option("--seed", verify_flags.seed, "Random seed");

  SweepFlags sweep_flags;
  CLI::App* sweep_cmd =
      app.add_subcommand("rank-sweep", "Least-squares fit quality across ranks");
  sweep_cmd->add_option("--C", sweep_flags.channels, "Target channels");
  sweep_cmd->add_option("--H", sweep_flags.height, "Target height");
  sweep_cmd->add_option("--W", sweep_flags.width, "Target width");
  sweep_cmd->add_option("--ranks", sweep_flags.ranks, "Ranks to fit, ascending")
      ->delimiter(',');
  sweep_cmd->add_option("--steps", sweep_flags.steps, "Max optimizer iterations per rank");
  sweep_cmd->add_option("--seed", sweep_flags.seed, "Random seed");
  sweep_cmd->add_option("--out", sweep_flags.out, "CSV output path (default stdout)");

  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train-toy", "Train on the synthetic dataset");
  train_cmd->add_option("--input", train_flags.input, "key=value config file");
  CLI::Option* seed_opt = train_cmd->add_option("--seed", train_flags.seed, "Random seed");
  CLI::Option* rank_opt = train_cmd->add_option("--r", train_flags.config.rank, "Tensor rank");
  CLI::Option* steps_opt =
      train_cmd->add_option("--steps", train_flags.config.steps, "Training steps");
  CLI::Option* lr_opt = train_cmd->add_option("--lr", train_flags.config.lr, "Learning rate");
  train_cmd->add_option("--out", train_flags.out, "Loss-curve CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck_flags);
    if (costs_cmd->parsed()) return run_costs(cost_flags);
    if (demo_cmd->parsed()) return run_demo(demo_flags);
    if (verify_cmd->parsed()) return run_verify(verify_flags);
    if (sweep_cmd->parsed()) return run_rank_sweep(sweep_flags);
    if (train_cmd->parsed()) {
      train_flags.seed_flag_set = seed_opt->count() > 0;
      train_flags.rank_set = rank_opt->count() > 0;
      train_flags.steps_set = steps_opt->count() > 0;
      train_flags.lr_set = lr_opt->count() > 0;
      return run_train_toy(train_flags);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitUsage;
}
