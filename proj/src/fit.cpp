#include "reconet/fit.hpp"

#include <algorithm>

#include "reconet/autodiff.hpp"

namespace reconet {

namespace {

constexpr double kStepGrowth = 1.25;
constexpr double kStepCap = 1e3;

Eigen::Index cp_param_count(const Shape3& s, int rank) {
  return static_cast<Eigen::Index>(rank) * (s.channels + s.height + s.width);
}

VectorXd cp_flatten(const CpModel& m, const Shape3& s) {
  VectorXd out(cp_param_count(s, m.rank()));
  Eigen::Index at = 0;
  for (const auto& t : m.terms) {
    out.segment(at, t.vc.size()) = t.vc;
    at += t.vc.size();
    out.segment(at, t.vh.size()) = t.vh;
    at += t.vh.size();
    out.segment(at, t.vw.size()) = t.vw;
    at += t.vw.size();
  }
  return out;
}

CpModel cp_unflatten(const VectorXd& flat, const Shape3& s, int rank) {
  CpModel m;
  Eigen::Index at = 0;
  for (int i = 0; i < rank; ++i) {
    FragmentTriplet t;
    t.vc = flat.segment(at, s.channels);
    at += s.channels;
    t.vh = flat.segment(at, s.height);
    at += s.height;
    t.vw = flat.segment(at, s.width);
    at += s.width;
    m.terms.push_back(std::move(t));
  }
  return m;
}

struct FitTape {
  ad::Tape tape;
  int root = -1;
  std::vector<int> leaves;  // vc, vh, vw per term
};

FitTape build_fit_tape(const CpModel& m, const Tensor3d& target) {
  const Shape3& s = target.shape();
  FitTape t;
  const int one = t.tape.leaf(ad::Value::scalar(1.0));
  int acc = t.tape.leaf(ad::Value::tensor(Tensor3d::zero(s)));
  for (const auto& term : m.terms) {
    const int vc = t.tape.leaf(ad::Value::vector(term.vc));
    const int vh = t.tape.leaf(ad::Value::vector(term.vh));
    const int vw = t.tape.leaf(ad::Value::vector(term.vw));
    t.leaves.insert(t.leaves.end(), {vc, vh, vw});
    acc = t.tape.axpy(acc, one, t.tape.outer3(vc, vh, vw));
  }
  const int sq = t.tape.squared_diff_sum(acc, target);
  t.root = t.tape.scale(sq, 1.0 / static_cast<double>(s.size()));
  return t;
}

void set_fit_params(FitTape& t, const VectorXd& flat, const Shape3& s) {
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < t.leaves.size(); i += 3) {
    t.tape.set_leaf(t.leaves[i], ad::Value::vector(flat.segment(at, s.channels)));
    at += s.channels;
    t.tape.set_leaf(t.leaves[i + 1], ad::Value::vector(flat.segment(at, s.height)));
    at += s.height;
    t.tape.set_leaf(t.leaves[i + 2], ad::Value::vector(flat.segment(at, s.width)));
    at += s.width;
  }
  t.tape.replay();
}

VectorXd fit_gradient(const FitTape& t) {
  const auto adj = t.tape.backward(t.root);
  Eigen::Index total = 0;
  for (const int id : t.leaves) total += t.tape.value(id).size();
  VectorXd grad(total);
  Eigen::Index at = 0;
  for (const int id : t.leaves) {
    const VectorXd& g = adj[static_cast<std::size_t>(id)];
    grad.segment(at, g.size()) = g;
    at += g.size();
  }
  return grad;
}

FitResult run_fit(CpModel model, const Tensor3d& target, const FitOptions& opts) {
  const Shape3& s = target.shape();
  FitTape tape = build_fit_tape(model, target);
  VectorXd p = cp_flatten(model, s);
  double mse = tape.tape.value(tape.root).as_scalar();
  double step = opts.initial_step;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    if (opts.tolerance > 0.0 && mse <= opts.tolerance) break;
    const VectorXd grad = fit_gradient(tape);
    bool advanced = false;
    while (step >= opts.min_step) {
      const VectorXd cand = p - step * grad;
      set_fit_params(tape, cand, s);
      const double cand_mse = tape.tape.value(tape.root).as_scalar();
      if (cand_mse < mse) {
        p = cand;
        mse = cand_mse;
        step = std::min(step * kStepGrowth, kStepCap);
        advanced = true;
        break;
      }
      step *= 0.5;
    }
    if (!advanced) break;  // no descent direction at any remaining step size
  }
  // Leaves may hold a rejected candidate after backtracking; restore p so the
  // returned model matches the reported mse.
  set_fit_params(tape, p, s);
  return FitResult{cp_unflatten(p, s, model.rank()), mse, iter};
}

FragmentTriplet random_term(const Shape3& s, Rng& rng) {
  FragmentTriplet t;
  t.vc = random_vector(s.channels, rng);
  t.vh = random_vector(s.height, rng);
  t.vw = random_vector(s.width, rng);
  return t;
}

FragmentTriplet zero_channel_term(const Shape3& s, Rng& rng) {
  FragmentTriplet t;
  t.vc = VectorXd::Zero(s.channels);
  t.vh = random_vector(s.height, rng);
  t.vw = random_vector(s.width, rng);
  return t;
}

}  // namespace

Tensor3d cp_expand(const CpModel& m, const Shape3& shape) {
  detail::require(m.rank() >= 1, "cp_expand: model has no terms");
  FragmentSet frags;
  frags.triplets = m.terms;
  frags.lambdas = VectorXd::Ones(m.rank());
  return reconstruct(frags, shape).tensor;
}

double cp_mse(const CpModel& m, const Tensor3d& target) {
  const Tensor3d recon = cp_expand(m, target.shape());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < recon.size(); ++i) {
    const double d = recon.data()[i] - target.data()[i];
    sum += d * d;
  }
  return sum * (1.0 / static_cast<double>(target.size()));
}

FitResult cp_fit(const Tensor3d& target, int rank, std::uint64_t seed, const FitOptions& opts) {
  detail::require(rank >= 1, "cp_fit: rank must be >= 1");
  Rng rng(seed);
  CpModel model;
  for (int i = 0; i < rank; ++i) model.terms.push_back(random_term(target.shape(), rng));
  return run_fit(std::move(model), target, opts);
}

FitResult cp_fit_warm(const Tensor3d& target, int rank, const CpModel& warm, Rng& rng,
                      const FitOptions& opts) {
  detail::require(rank >= warm.rank(),
                  "cp_fit_warm: rank " + std::to_string(rank) + " below warm model's " +
                      std::to_string(warm.rank()));
  CpModel model = warm;
  for (int i = warm.rank(); i < rank; ++i)
    model.terms.push_back(zero_channel_term(target.shape(), rng));
  return run_fit(std::move(model), target, opts);
}

std::vector<SweepPoint> rank_sweep(const Tensor3d& target, const std::vector<int>& ranks,
                                   std::uint64_t seed, const FitOptions& opts) {
  detail::require(!ranks.empty(), "rank_sweep: rank list is empty");
  Rng rng(seed);
  std::vector<SweepPoint> points;
  CpModel model;
  int prev = 0;
  for (const int r : ranks) {
    detail::require(r > prev, "rank_sweep: ranks must be strictly increasing and >= 1");
    for (int i = prev; i < r; ++i)
      model.terms.push_back(prev == 0 ? random_term(target.shape(), rng)
                                      : zero_channel_term(target.shape(), rng));
    FitResult result = run_fit(std::move(model), target, opts);
    points.push_back({r, result.mse, result.iters});
    model = std::move(result.model);
    prev = r;
  }
  return points;
}

}  // namespace reconet
