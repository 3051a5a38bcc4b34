#pragma once

#include <string>
#include <vector>

#include "reconet/tensor.hpp"
#include "reconet/tgm.hpp"
#include "reconet/trm.hpp"

namespace reconet {

VectorXd ones_vector(int n);

// A[c,h,w] = vc[c]: pure channel attention, the rank-1 configuration with
// both spatial factors forced to the all-ones vector. Callers pass vc with
// entries in (0,1); nothing here depends on it.
AttentionMap senet_attention(const VectorXd& vc, int height, int width);

// A[c,h,w] = vc[c] * m_hw(h,w): channel attention times one shared spatial
// map. The product associates spatial-map-first, matching outer3, so a
// separable m_hw = vh vw^T reproduces a sub-attention map bit for bit.
AttentionMap cbam_attention(const VectorXd& vc, const MatrixXd& m_hw);

struct DegenerationCheck {
  std::string name;
  double max_deviation = 0.0;
  bool pass = false;
};

struct DegenerationReport {
  std::vector<DegenerationCheck> checks;
  bool pass = false;
};

// Runs the rank-1 forward pass with the height and width fragments
// overridden to ones and lambda forced to 1, then checks the result against
// senet_attention of the channel fragment. The overrides are explicit
// fragment injection, not special parameter values, so the production code
// path stays untouched. All deviations must be exactly zero.
DegenerationReport verify_senet_degeneration(const TgmParams& params, const Tensor3d& x);

}  // namespace reconet
