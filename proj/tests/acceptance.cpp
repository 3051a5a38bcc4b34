// Acceptance suite: nine numbered checks, one verdict line each. Exit code 0
// only if every check holds within its stated tolerance and time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
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
using Clock = std::chrono::steady_clock;

int failures = 0;

struct Timer {
  Clock::time_point start = Clock::now();
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
};

void report(int number, bool pass, double seconds, double budget, const char* what) {
  const bool in_budget = seconds < budget;
  if (!pass || !in_budget) ++failures;
  std::printf("[%d/9] %s  %-58s (%.2fs, budget %.0fs)\n", number,
              pass ? (in_budget ? "PASS" : "FAIL(time)") : "FAIL", what, seconds, budget);
}

FragmentSet random_fragments(const Shape3& s, int rank, Rng& rng) {
  FragmentSet frags;
  for (int i = 0; i < rank; ++i)
    frags.triplets.push_back({random_vector(s.channels, rng, 0.02, 0.98),
                              random_vector(s.height, rng, 0.02, 0.98),
                              random_vector(s.width, rng, 0.02, 0.98)});
  frags.lambdas = random_vector(rank, rng, 0.02, 0.98);
  return frags;
}

// 1. reconstruct vs the brute-force weighted triple-loop oracle, 200 random
// instances, relative error <= 1e-13.
void criterion_cp_oracle() {
  Timer timer;
  Rng rng(1001);
  bool pass = true;
  for (int trial = 0; trial < 200; ++trial) {
    const Shape3 s(1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6));
    const int rank = 1 + rng.below(4);
    const FragmentSet frags = random_fragments(s, rank, rng);
    std::vector<Tensor3d> terms;
    for (const auto& t : frags.triplets) terms.push_back(oracle::outer3(t.vc, t.vh, t.vw));
    const Tensor3d expected = oracle::weighted_sum(terms, frags.lambdas);
    if (oracle::max_rel_diff(reconstruct(frags, s).tensor, expected) > 1e-13) pass = false;
  }
  report(1, pass, timer.seconds(), 5.0, "CP reconstruction matches the brute-force oracle");
}

// 2. every sub-attention map passes the all-modes 2x2-minor test, 100 random
// triplets, defect <= 1e-12.
void criterion_rank_one() {
  Timer timer;
  Rng rng(1002);
  bool pass = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape3 s(1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6));
    const FragmentTriplet t{random_vector(s.channels, rng, 0.02, 0.98),
                            random_vector(s.height, rng, 0.02, 0.98),
                            random_vector(s.width, rng, 0.02, 0.98)};
    const SubAttentionMap a = sub_attention(t, trial + 1);
    if (rank_one_defect(a.tensor) > 1e-12) pass = false;
    if (oracle::rank_one_defect(a.tensor) > 1e-12) pass = false;
  }
  report(2, pass, timer.seconds(), 2.0, "sub-attention maps are rank 1 in every mode");
}

// 3. full-loss tape gradient vs central differences (eps 1e-5), C=6 H=5 W=4
// r=3 K=3, five seeds, max relative error < 1e-6.
void criterion_gradcheck() {
  Timer timer;
  bool pass = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::uint64_t model_seed = rng.next_u64();
    // Strictly positive inputs keep every gradient coordinate above the
    // finite-difference noise floor at the pinned step size.
    const Tensor3d x = random_tensor(Shape3(6, 5, 4), rng, 1.0, 4.0);
    LabelMap labels(5, 4);
    for (int h = 0; h < 5; ++h)
      for (int w = 0; w < 4; ++w) labels(h, w) = rng.below(3);
    const ModelParams params = init_model(6, 6, 3, 3, model_seed);
    const std::vector<Tensor3d> xs{x};
    const std::vector<LabelMap> ls{labels};
    const ad::LossFn loss = [&](const VectorXd& p) {
      return batch_loss(unflatten(p, params), xs, ls);
    };
    const ad::GradFn grad = [&](const VectorXd& p) {
      return batch_gradient(unflatten(p, params), xs, ls);
    };
    const ad::GradcheckReport rep =
        ad::gradcheck(loss, grad, flatten(params), model_layout(params), 1e-6, 1e-5);
    if (!rep.pass) pass = false;
  }
  report(3, pass, timer.seconds(), 30.0, "full-loss gradients match finite differences");
}

// 4. published cost table at C=512, H=W=64, r=64: generation within 5% of
// 0.0215G MACs and 8.31MB, non-local within 15% of 19.33G, ratio > 100.
void criterion_cost_table() {
  Timer timer;
  const CostReport tgm = tgm_cost(512, 64, 64, 64);
  const CostReport nl = nonlocal_cost(512, 64, 64);
  const CostComparison cmp = compare(512, 64, 64, 64);
  bool pass = std::abs(static_cast<double>(tgm.mac_count) / 21.5e6 - 1.0) <= 0.05;
  pass = pass && std::abs(static_cast<double>(tgm.memory_bytes) / 8.31e6 - 1.0) <= 0.05;
  pass = pass && std::abs(static_cast<double>(nl.mac_count) / 19.33e9 - 1.0) <= 0.15;
  pass = pass && cmp.nonlocal_over_tgm > 100.0;
  report(4, pass, timer.seconds(), 1.0, "cost model reproduces the published table");
}

// 5. SENet degeneration exact on 20 random inputs; separable CBAM map equals
// a sub-attention term exactly.
void criterion_degenerations() {
  Timer timer;
  Rng rng(1005);
  bool pass = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Shape3 s(2 + rng.below(6), 2 + rng.below(6), 2 + rng.below(6));
    const Tensor3d x = random_tensor(s, rng);
    const DegenerationReport rep =
        verify_senet_degeneration(init_tgm(s.channels, 1, rng.next_u64()), x);
    if (!rep.pass) pass = false;
    for (const auto& check : rep.checks)
      if (check.max_deviation != 0.0) pass = false;
  }
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd vc = random_vector(2 + rng.below(5), rng, 0.02, 0.98);
    const VectorXd vh = random_vector(2 + rng.below(5), rng, 0.02, 0.98);
    const VectorXd vw = random_vector(2 + rng.below(5), rng, 0.02, 0.98);
    MatrixXd m_hw(vh.size(), vw.size());
    for (Eigen::Index h = 0; h < vh.size(); ++h)
      for (Eigen::Index w = 0; w < vw.size(); ++w) m_hw(h, w) = vh[h] * vw[w];
    const AttentionMap cbam = cbam_attention(vc, m_hw);
    const SubAttentionMap sub = sub_attention({vc, vh, vw}, 1);
    if (!oracle::bitwise_equal(cbam.tensor, sub.tensor)) pass = false;
  }
  report(5, pass, timer.seconds(), 2.0, "SENet and CBAM degenerations are exact");
}

// 6. apply_context(reconstruct(F), X) equals the weighted sum of the
// per-term applications within 1e-12, 50 random instances.
void criterion_linearity() {
  Timer timer;
  Rng rng(1006);
  bool pass = true;
  for (int trial = 0; trial < 50; ++trial) {
    const Shape3 s(1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6));
    const FragmentSet frags = random_fragments(s, 1 + rng.below(4), rng);
    const Tensor3d x = random_tensor(s, rng);
    const Tensor3d lhs = apply_context(reconstruct(frags, s), x);
    Tensor3d rhs = Tensor3d::zero(s);
    for (int i = 0; i < frags.rank(); ++i) {
      const auto& t = frags.triplets[static_cast<std::size_t>(i)];
      const Tensor3d yi = apply_context(AttentionMap{sub_attention(t, i + 1).tensor}, x);
      rhs = scaled_accumulate(std::move(rhs), frags.lambdas[i], yi);
    }
    if (oracle::max_rel_diff(lhs, rhs) > 1e-12) pass = false;
  }
  report(6, pass, timer.seconds(), 2.0, "attention application is linear over the terms");
}

// 7. default toy training reaches 95% pixel accuracy within 500 steps at
// seed 0, with a bitwise-reproducible loss curve.
void criterion_toy_training() {
  Timer timer;
  const TrainConfig config;  // documented defaults
  const TrainingReport a = toy_train(config, 0);
  const TrainingReport b = toy_train(config, 0);
  bool pass = a.final_accuracy >= 0.95;
  pass = pass && a.curve.size() == static_cast<std::size_t>(config.steps);
  pass = pass && a.curve.size() == b.curve.size();
  for (std::size_t i = 0; pass && i < a.curve.size(); ++i) {
    if (std::memcmp(&a.curve[i].loss_total, &b.curve[i].loss_total, sizeof(double)) != 0 ||
        std::memcmp(&a.curve[i].loss_main, &b.curve[i].loss_main, sizeof(double)) != 0 ||
        std::memcmp(&a.curve[i].loss_aux, &b.curve[i].loss_aux, sizeof(double)) != 0)
      pass = false;
  }
  report(7, pass, timer.seconds(), 120.0, "toy training reaches 95% accuracy reproducibly");
}

// 8. rank-sweep mse non-increasing over {1,2,4,8,16}; a rank-1 target is
// recovered below 1e-6 at r=1.
void criterion_rank_sweep() {
  Timer timer;
  Rng rng(1008);
  const Tensor3d target = random_tensor(Shape3(4, 4, 4), rng);
  const auto points = rank_sweep(target, {1, 2, 4, 8, 16}, 11);
  bool pass = points.size() == 5;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].mse > points[i - 1].mse) pass = false;

  const Tensor3d rank1 = outer3(random_vector(4, rng, 0.1, 0.9), random_vector(4, rng, 0.1, 0.9),
                                random_vector(4, rng, 0.1, 0.9));
  const FitResult fit = cp_fit(rank1, 1, 12);
  pass = pass && fit.mse < 1e-6;
  report(8, pass, timer.seconds(), 60.0, "fit error is monotone in rank, rank-1 recovered");
}

// 9. RCN1 write/read round trip is bit-identical at 32-bit precision for 20
// random tensors.
void criterion_serialization() {
  Timer timer;
  Rng rng(1009);
  const std::string path =
      (std::filesystem::temp_directory_path() / "acceptance.rcn1").string();
  bool pass = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Shape3 s(1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6));
    const Tensor3d t = random_tensor(s, rng, -100.0, 100.0);
    write_rcn1(path, t);
    const Tensor3d back = read_rcn1(path);
    if (back.shape() != t.shape()) pass = false;
    for (Eigen::Index i = 0; pass && i < t.size(); ++i) {
      const float written = static_cast<float>(t.data()[i]);
      const float reread = static_cast<float>(back.data()[i]);
      if (std::memcmp(&written, &reread, sizeof(float)) != 0) pass = false;
    }
  }
  std::remove(path.c_str());
  report(9, pass, timer.seconds(), 1.0, "RCN1 round trip is bit-identical at 32 bits");
}

}  // namespace

int main() {
  criterion_cp_oracle();
  criterion_rank_one();
  criterion_gradcheck();
  criterion_cost_table();
  criterion_degenerations();
  criterion_linearity();
  criterion_toy_training();
  criterion_rank_sweep();
  criterion_serialization();
  if (failures > 0) {
    std::printf("%d of 9 criteria failed\n", failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
