#include "reconet/trm.hpp"

#include <utility>
#include <vector>

#include "reconet/parallel.hpp"

namespace reconet {

namespace {

void check_triplet(const FragmentTriplet& t, const Shape3& shape, const char* where) {
  detail::require(t.vc.size() == shape.channels && t.vh.size() == shape.height &&
                      t.vw.size() == shape.width,
                  std::string(where) + ": triplet lengths " + std::to_string(t.vc.size()) + "/" +
                      std::to_string(t.vh.size()) + "/" + std::to_string(t.vw.size()) +
                      " do not match shape " + shape.to_string());
}

}  // namespace

SubAttentionMap sub_attention(const FragmentTriplet& t, int i) {
  detail::require(i >= 1, "sub_attention: source index is 1-based");
  return SubAttentionMap{outer3<double>(t.vc, t.vh, t.vw), i};
}

AttentionMap reconstruct(const FragmentSet& frags, const Shape3& shape) {
  shape.validate();
  const int r = frags.rank();
  detail::require(r >= 1, "reconstruct: fragment set is empty");
  detail::require(frags.lambdas.size() == r,
                  "reconstruct: " + std::to_string(frags.lambdas.size()) + " lambdas for rank " +
                      std::to_string(r));
  for (const auto& t : frags.triplets) check_triplet(t, shape, "reconstruct");

  Tensor3d acc = Tensor3d::zero(shape);
  if (worker_cap() <= 1 || r == 1) {
    for (int i = 0; i < r; ++i) {
      const auto& t = frags.triplets[static_cast<std::size_t>(i)];
      acc = scaled_accumulate(std::move(acc), frags.lambdas[i],
                              outer3<double>(t.vc, t.vh, t.vw));
    }
    return AttentionMap{std::move(acc)};
  }

  // Terms land in disjoint slots; the ordered reduction below makes the
  // threaded path bitwise equal to the sequential one.
  std::vector<Tensor3d> terms(static_cast<std::size_t>(r));
  parallel_for(r, [&](int i) {
    const auto& t = frags.triplets[static_cast<std::size_t>(i)];
    terms[static_cast<std::size_t>(i)] = outer3<double>(t.vc, t.vh, t.vw);
  });
  for (int i = 0; i < r; ++i)
    acc = scaled_accumulate(std::move(acc), frags.lambdas[i], terms[static_cast<std::size_t>(i)]);
  return AttentionMap{std::move(acc)};
}

Tensor3d apply_context(const AttentionMap& a, const Tensor3d& x) {
  return hadamard(a.tensor, x);
}

ForwardResult tgm_trm_forward(const Tensor3d& x, const TgmParams& params) {
  detail::require(x.all_finite(), "tgm_trm_forward: input has non-finite entries");
  FragmentSet frags = generate_fragments(x, params);
  AttentionMap a = reconstruct(frags, x.shape());
  Tensor3d y = apply_context(a, x);
  return ForwardResult{std::move(y), std::move(a), std::move(frags)};
}

}  // namespace reconet
