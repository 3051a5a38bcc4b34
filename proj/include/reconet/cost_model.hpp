#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reconet {

struct CostTerm {
  std::string label;
  std::uint64_t macs = 0;
};

// Counting convention: 1 MAC = 1 reported FLOP; biases and sigmoids are
// excluded. Memory models 32-bit activation storage only, no parameters or
// optimizer state.
struct CostReport {
  std::string method;
  std::uint64_t mac_count = 0;
  std::uint64_t memory_bytes = 0;
  std::vector<CostTerm> term_breakdown;
  bool is_reference = false;  // cited constant rather than a formula
};

// Fragment generation: r channel maps (C^2 each) plus the height and width
// collapses (C*H and C*W each). Memory covers the reconstructed map and the
// r fragment triplets.
CostReport tgm_cost(int channels, int height, int width, int rank);

// Weighted rank-1 accumulation: one MAC per element per term. Kept separate
// from tgm_cost; the headline generation figure excludes these elementwise
// ops (see compare).
CostReport reconstruction_cost(int channels, int height, int width, int rank);

// Pairwise attention baseline: similarity and aggregation matmuls at
// 2*(HW)^2*C plus three embedding 1x1 convolutions at HW*C^2 each. Memory
// covers the similarity matrix and the three embeddings.
CostReport nonlocal_cost(int channels, int height, int width);

struct CostComparison {
  std::vector<CostReport> rows;
  double nonlocal_over_tgm = 0.0;
};

// Formula rows for this configuration plus cited reference rows for the
// published baselines whose internals are not recoverable from their
// headline numbers.
CostComparison compare(int channels, int height, int width, int rank);

}  // namespace reconet
