#pragma once

#include "reconet/tensor.hpp"
#include "reconet/tgm.hpp"

namespace reconet {

// A_i = vc (x) vh (x) vw. Rank 1 by construction; source_index is the 1-based
// repetition it came from, kept for reports and heat-map filenames.
struct SubAttentionMap {
  Tensor3d tensor;
  int source_index = 0;
};

// A = sum_i lambda_i * A_i. Entries lie strictly inside (0, sum_i lambda_i).
struct AttentionMap {
  Tensor3d tensor;
};

// Everything the forward pass produced. The attention map and fragments are
// returned alongside y because visualization and the rank-1 checks need them.
struct ForwardResult {
  Tensor3d y;
  AttentionMap attention;
  FragmentSet fragments;
};

SubAttentionMap sub_attention(const FragmentTriplet& t, int i);

// Weighted mean of the sub-attention maps, accumulated in ascending i. Terms
// may be precomputed on worker threads (RECONET_THREADS), but the reduction
// itself stays ordered, so the result is bit-identical at any thread count.
AttentionMap reconstruct(const FragmentSet& frags, const Shape3& shape);

// Y = A . X elementwise.
Tensor3d apply_context(const AttentionMap& a, const Tensor3d& x);

// generate_fragments -> reconstruct -> apply_context on the same input x.
ForwardResult tgm_trm_forward(const Tensor3d& x, const TgmParams& params);

}  // namespace reconet
