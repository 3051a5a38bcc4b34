#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "reconet/gpm_head.hpp"
#include "reconet/tensor.hpp"

namespace reconet::ad {

enum class Op {
  kLeaf,
  kPoolSpatial,
  kPoolOverWidth,
  kPoolOverHeight,
  kSigmoid,
  kMatVecAffine,
  kCollapseAffine,
  kOuter3,
  kIndex,
  kAxpy,
  kHadamard,
  kBroadcastChannels,
  kConcatChannels,
  kPerPixelAffine,
  kSoftmaxCrossEntropy,
  kAddScaled,
  kScale,
  kSumAll,
  kSquaredDiffSum,
};

const char* op_name(Op op);

// Tagged flat payload. Matrices are stored column-major, tensors in the
// Tensor3 flat order; scalars are length-1 flats.
struct Value {
  enum class Kind { kScalar, kVector, kMatrix, kTensor };

  Kind kind = Kind::kScalar;
  Shape3 shape{1, 1, 1};
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  VectorXd flat = VectorXd::Zero(1);

  static Value scalar(double v);
  static Value vector(VectorXd v);
  static Value matrix(const MatrixXd& m);
  static Value tensor(const Tensor3d& t);

  double as_scalar() const;
  const VectorXd& as_vector() const;
  MatrixXd as_matrix() const;
  Tensor3d as_tensor() const;

  Eigen::Index size() const { return flat.size(); }
};

struct Node {
  Op op = Op::kLeaf;
  std::vector<int> inputs;
  Value primal;
  std::string name;    // leaves, for reports
  int index = -1;      // kIndex
  double alpha = 0.0;  // kAddScaled, kScale
  int height = 0;      // kBroadcastChannels
  int width = 0;
  LabelMap labels;  // kSoftmaxCrossEntropy
  VectorXd target;  // kSquaredDiffSum, flat
};

// Eager reverse-mode tape. Builders run the forward computation through the
// same helpers the untaped pipeline uses, so primals recorded here are
// bitwise equal to the plain forward path; node ids always reference earlier
// nodes, which keeps the tape topologically ordered by construction.
class Tape {
 public:
  int leaf(Value v, std::string name = "");

  int pool_spatial(int x);
  int pool_over_width(int x);
  int pool_over_height(int x);
  int sigmoid(int v);
  int matvec_affine(int w, int v, int b);
  int collapse_affine(int m, int w, int b);
  int outer3(int vc, int vh, int vw);
  int index(int v, int i);
  int axpy(int acc, int lambda, int term);
  int hadamard(int a, int x);
  int broadcast_channels(int v, int height, int width);
  int concat_channels(int a, int b);
  int per_pixel_affine(int features, int w, int b);
  int softmax_cross_entropy(int logits, const LabelMap& labels);
  int add_scaled(int a, double alpha, int b);
  int scale(int v, double alpha);
  int sum_all(int v);
  int squared_diff_sum(int v, const Tensor3d& target);

  const Value& value(int id) const;
  const Node& node(int id) const;
  std::size_t size() const { return nodes_.size(); }
  std::size_t operation_count() const;  // non-leaf nodes

  // Overwrites a leaf payload (shape must match) so the tape can be replayed
  // at perturbed parameters.
  void set_leaf(int id, Value v);

  // Recomputes every non-leaf primal in creation order.
  void replay();

  // Adjoint of the scalar root with respect to every node, flat layout
  // matching each node's primal. One reverse sweep, one visit per node.
  std::vector<VectorXd> backward(int root) const;

  // Scales the adjoint contributions flowing out of every `op` node. Test
  // hook for checking that gradcheck localizes a broken rule; scale 1
  // restores correct behavior.
  void inject_backward_fault(Op op, double scale);

 private:
  int push(Node n);
  void compute_primal(Node& n) const;
  int check(int id, const char* where) const;

  std::vector<Node> nodes_;
  Op fault_op_ = Op::kLeaf;
  double fault_scale_ = 1.0;
};

struct Recording {
  Tape tape;
  int root = -1;

  const Value& output() const { return tape.value(root); }
};

// Builds a tape by running `build`, which returns the root node id.
Recording record_forward(const std::function<int(Tape&)>& build);

using LossFn = std::function<double(const VectorXd&)>;
using GradFn = std::function<VectorXd(const VectorXd&)>;

// Central differences (f(p+eps) - f(p-eps)) / (2 eps) per scalar parameter.
// eps 1e-5 balances truncation against rounding at 64-bit.
VectorXd finite_diff_grad(const LossFn& loss, const VectorXd& params, double eps = 1e-5);

// Named slice of the flat parameter vector, for per-block reporting.
struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

struct GradcheckReport {
  double max_rel_err = 0.0;
  Eigen::Index worst_index = -1;
  std::string worst_parameter;
  std::vector<std::pair<std::string, double>> per_block;
  double tolerance = 0.0;
  bool pass = false;
};

// Compares grad(params) against the central-difference oracle. Relative
// error per scalar is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|); the floor
// keeps dead parameters from dividing zero by zero.
GradcheckReport gradcheck(const LossFn& loss, const GradFn& grad, const VectorXd& params,
                          const std::vector<ParamBlock>& blocks, double tolerance,
                          double eps = 1e-5);

}  // namespace reconet::ad
