#pragma once

#include <cstdint>
#include <vector>

#include "reconet/rng.hpp"
#include "reconet/tensor.hpp"
#include "reconet/tgm.hpp"
#include "reconet/trm.hpp"

namespace reconet {

// Unconstrained rank-1 factors for least-squares fitting. Lambdas are fixed
// at 1; the factors absorb any scale.
struct CpModel {
  std::vector<FragmentTriplet> terms;

  int rank() const { return static_cast<int>(terms.size()); }
};

struct FitOptions {
  int max_iters = 2000;
  double initial_step = 0.05;
  double min_step = 1e-14;   // give up backtracking below this
  double tolerance = 1e-10;  // stop once mse falls to this; 0 disables
};

struct FitResult {
  CpModel model;
  double mse = 0.0;
  int iters = 0;
};

// Sum of the rank-1 terms, evaluated through reconstruct with unit lambdas.
Tensor3d cp_expand(const CpModel& m, const Shape3& shape);

double cp_mse(const CpModel& m, const Tensor3d& target);

// Gradient descent with a backtracking step so the objective never
// increases; gradients come from the reverse-mode tape.
FitResult cp_fit(const Tensor3d& target, int rank, std::uint64_t seed,
                 const FitOptions& opts = {});

// Seeds the optimizer with `warm` plus fresh terms whose channel factor is
// zero, so the enlarged model starts at exactly the warm model's objective.
// With the never-increase rule this makes fit error non-increasing in rank.
FitResult cp_fit_warm(const Tensor3d& target, int rank, const CpModel& warm, Rng& rng,
                      const FitOptions& opts = {});

struct SweepPoint {
  int rank = 0;
  double mse = 0.0;
  int iters = 0;
};

// Fits each rank in order (strictly increasing), warm-starting every rank
// from the previous solution.
std::vector<SweepPoint> rank_sweep(const Tensor3d& target, const std::vector<int>& ranks,
                                   std::uint64_t seed, const FitOptions& opts = {});

}  // namespace reconet
