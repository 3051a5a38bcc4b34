#include "reconet/autodiff.hpp"

#include <cmath>

namespace reconet::ad {

namespace {

Eigen::Index tensor_index(const Shape3& s, int c, int h, int w) {
  return (static_cast<Eigen::Index>(c) * s.height + h) * s.width + w;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kPoolSpatial: return "pool_spatial";
    case Op::kPoolOverWidth: return "pool_over_width";
    case Op::kPoolOverHeight: return "pool_over_height";
    case Op::kSigmoid: return "sigmoid";
    case Op::kMatVecAffine: return "matvec_affine";
    case Op::kCollapseAffine: return "collapse_affine";
    case Op::kOuter3: return "outer3";
    case Op::kIndex: return "index";
    case Op::kAxpy: return "axpy";
    case Op::kHadamard: return "hadamard";
    case Op::kBroadcastChannels: return "broadcast_channels";
    case Op::kConcatChannels: return "concat_channels";
    case Op::kPerPixelAffine: return "per_pixel_affine";
    case Op::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case Op::kAddScaled: return "add_scaled";
    case Op::kScale: return "scale";
    case Op::kSumAll: return "sum_all";
    case Op::kSquaredDiffSum: return "squared_diff_sum";
  }
  return "unknown";
}

Value Value::scalar(double v) {
  Value out;
  out.kind = Kind::kScalar;
  out.flat = VectorXd::Constant(1, v);
  return out;
}

Value Value::vector(VectorXd v) {
  Value out;
  out.kind = Kind::kVector;
  out.flat = std::move(v);
  return out;
}

Value Value::matrix(const MatrixXd& m) {
  Value out;
  out.kind = Kind::kMatrix;
  out.rows = m.rows();
  out.cols = m.cols();
  out.flat = Eigen::Map<const VectorXd>(m.data(), m.size());
  return out;
}

Value Value::tensor(const Tensor3d& t) {
  Value out;
  out.kind = Kind::kTensor;
  out.shape = t.shape();
  out.flat = t.data().matrix();
  return out;
}

double Value::as_scalar() const {
  detail::require(kind == Kind::kScalar && flat.size() == 1, "Value: not a scalar");
  return flat[0];
}

const VectorXd& Value::as_vector() const {
  detail::require(kind == Kind::kVector, "Value: not a vector");
  return flat;
}

MatrixXd Value::as_matrix() const {
  detail::require(kind == Kind::kMatrix && flat.size() == rows * cols, "Value: not a matrix");
  return Eigen::Map<const MatrixXd>(flat.data(), rows, cols);
}

Tensor3d Value::as_tensor() const {
  detail::require(kind == Kind::kTensor && flat.size() == shape.size(), "Value: not a tensor");
  Tensor3d t(shape);
  t.data() = flat.array();
  return t;
}

int Tape::check(int id, const char* where) const {
  detail::require(id >= 0 && id < static_cast<int>(nodes_.size()),
                  std::string(where) + ": node id " + std::to_string(id) + " out of range");
  return id;
}

int Tape::push(Node n) {
  if (n.op != Op::kLeaf) compute_primal(n);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Value v, std::string name) {
  Node n;
  n.op = Op::kLeaf;
  n.primal = std::move(v);
  n.name = std::move(name);
  return push(std::move(n));
}

int Tape::pool_spatial(int x) {
  Node n;
  n.op = Op::kPoolSpatial;
  n.inputs = {check(x, "pool_spatial")};
  return push(std::move(n));
}

int Tape::pool_over_width(int x) {
  Node n;
  n.op = Op::kPoolOverWidth;
  n.inputs = {check(x, "pool_over_width")};
  return push(std::move(n));
}

int Tape::pool_over_height(int x) {
  Node n;
  n.op = Op::kPoolOverHeight;
  n.inputs = {check(x, "pool_over_height")};
  return push(std::move(n));
}

int Tape::sigmoid(int v) {
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {check(v, "sigmoid")};
  return push(std::move(n));
}

int Tape::matvec_affine(int w, int v, int b) {
  Node n;
  n.op = Op::kMatVecAffine;
  n.inputs = {check(w, "matvec_affine"), check(v, "matvec_affine"), check(b, "matvec_affine")};
  return push(std::move(n));
}

int Tape::collapse_affine(int m, int w, int b) {
  Node n;
  n.op = Op::kCollapseAffine;
  n.inputs = {check(m, "collapse_affine"), check(w, "collapse_affine"),
              check(b, "collapse_affine")};
  return push(std::move(n));
}

int Tape::outer3(int vc, int vh, int vw) {
  Node n;
  n.op = Op::kOuter3;
  n.inputs = {check(vc, "outer3"), check(vh, "outer3"), check(vw, "outer3")};
  return push(std::move(n));
}

int Tape::index(int v, int i) {
  Node n;
  n.op = Op::kIndex;
  n.inputs = {check(v, "index")};
  detail::require(i >= 0 && i < nodes_[static_cast<std::size_t>(v)].primal.size(),
                  "index: position " + std::to_string(i) + " out of range");
  n.index = i;
  return push(std::move(n));
}

int Tape::axpy(int acc, int lambda, int term) {
  Node n;
  n.op = Op::kAxpy;
  n.inputs = {check(acc, "axpy"), check(lambda, "axpy"), check(term, "axpy")};
  return push(std::move(n));
}

int Tape::hadamard(int a, int x) {
  Node n;
  n.op = Op::kHadamard;
  n.inputs = {check(a, "hadamard"), check(x, "hadamard")};
  return push(std::move(n));
}

int Tape::broadcast_channels(int v, int height, int width) {
  Node n;
  n.op = Op::kBroadcastChannels;
  n.inputs = {check(v, "broadcast_channels")};
  n.height = height;
  n.width = width;
  return push(std::move(n));
}

int Tape::concat_channels(int a, int b) {
  Node n;
  n.op = Op::kConcatChannels;
  n.inputs = {check(a, "concat_channels"), check(b, "concat_channels")};
  return push(std::move(n));
}

int Tape::per_pixel_affine(int features, int w, int b) {
  Node n;
  n.op = Op::kPerPixelAffine;
  n.inputs = {check(features, "per_pixel_affine"), check(w, "per_pixel_affine"),
              check(b, "per_pixel_affine")};
  return push(std::move(n));
}

int Tape::softmax_cross_entropy(int logits, const LabelMap& labels) {
  Node n;
  n.op = Op::kSoftmaxCrossEntropy;
  n.inputs = {check(logits, "softmax_cross_entropy")};
  n.labels = labels;
  return push(std::move(n));
}

int Tape::add_scaled(int a, double alpha, int b) {
  Node n;
  n.op = Op::kAddScaled;
  n.inputs = {check(a, "add_scaled"), check(b, "add_scaled")};
  n.alpha = alpha;
  return push(std::move(n));
}

int Tape::scale(int v, double alpha) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {check(v, "scale")};
  n.alpha = alpha;
  return push(std::move(n));
}

int Tape::sum_all(int v) {
  Node n;
  n.op = Op::kSumAll;
  n.inputs = {check(v, "sum_all")};
  return push(std::move(n));
}

int Tape::squared_diff_sum(int v, const Tensor3d& target) {
  Node n;
  n.op = Op::kSquaredDiffSum;
  n.inputs = {check(v, "squared_diff_sum")};
  n.target = target.data().matrix();
  detail::require(nodes_[static_cast<std::size_t>(v)].primal.size() == n.target.size(),
                  "squared_diff_sum: target size mismatch");
  return push(std::move(n));
}

const Value& Tape::value(int id) const {
  check(id, "value");
  return nodes_[static_cast<std::size_t>(id)].primal;
}

const Node& Tape::node(int id) const {
  check(id, "node");
  return nodes_[static_cast<std::size_t>(id)];
}

std::size_t Tape::operation_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes_)
    if (node.op != Op::kLeaf) ++n;
  return n;
}

void Tape::set_leaf(int id, Value v) {
  check(id, "set_leaf");
  Node& n = nodes_[static_cast<std::size_t>(id)];
  detail::require(n.op == Op::kLeaf, "set_leaf: node is not a leaf");
  detail::require(n.primal.kind == v.kind && n.primal.size() == v.size(),
                  "set_leaf: payload shape changed");
  n.primal = std::move(v);
}

void Tape::replay() {
  for (auto& n : nodes_)
    if (n.op != Op::kLeaf) compute_primal(n);
}

void Tape::compute_primal(Node& n) const {
  auto in = [&](int k) -> const Value& {
    return nodes_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])].primal;
  };
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kPoolSpatial:
      n.primal = Value::vector(reconet::pool_spatial(in(0).as_tensor()));
      break;
    case Op::kPoolOverWidth:
      n.primal = Value::matrix(reconet::pool_over_width(in(0).as_tensor()));
      break;
    case Op::kPoolOverHeight:
      n.primal = Value::matrix(reconet::pool_over_height(in(0).as_tensor()));
      break;
    case Op::kSigmoid: {
      Value out = in(0);
      for (Eigen::Index i = 0; i < out.flat.size(); ++i)
        out.flat[i] = reconet::sigmoid(out.flat[i]);
      n.primal = std::move(out);
      break;
    }
    case Op::kMatVecAffine:
      n.primal = Value::vector(
          detail::affine_matvec(in(0).as_matrix(), in(1).as_vector(), in(2).as_vector()));
      break;
    case Op::kCollapseAffine:
      n.primal = Value::vector(
          detail::collapse_affine(in(0).as_matrix(), in(1).as_vector(), in(2).as_scalar()));
      break;
    case Op::kOuter3:
      n.primal = Value::tensor(
          reconet::outer3(in(0).as_vector(), in(1).as_vector(), in(2).as_vector()));
      break;
    case Op::kIndex:
      n.primal = Value::scalar(in(0).flat[n.index]);
      break;
    case Op::kAxpy:
      n.primal = Value::tensor(
          reconet::scaled_accumulate(in(0).as_tensor(), in(1).as_scalar(), in(2).as_tensor()));
      break;
    case Op::kHadamard:
      n.primal = Value::tensor(reconet::hadamard(in(0).as_tensor(), in(1).as_tensor()));
      break;
    case Op::kBroadcastChannels:
      n.primal = Value::tensor(reconet::broadcast_channels(in(0).as_vector(), n.height, n.width));
      break;
    case Op::kConcatChannels:
      n.primal = Value::tensor(reconet::concat_channels(in(0).as_tensor(), in(1).as_tensor()));
      break;
    case Op::kPerPixelAffine:
      n.primal = Value::tensor(
          reconet::per_pixel_affine(in(0).as_tensor(), in(1).as_matrix(), in(2).as_vector()));
      break;
    case Op::kSoftmaxCrossEntropy:
      n.primal = Value::scalar(reconet::softmax_cross_entropy(in(0).as_tensor(), n.labels));
      break;
    case Op::kAddScaled: {
      detail::require(in(0).size() == in(1).size(), "add_scaled: operand sizes differ");
      Value out = in(0);
      out.flat += n.alpha * in(1).flat;
      n.primal = std::move(out);
      break;
    }
    case Op::kScale: {
      Value out = in(0);
      out.flat *= n.alpha;
      n.primal = std::move(out);
      break;
    }
    case Op::kSumAll: {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < in(0).flat.size(); ++i) sum += in(0).flat[i];
      n.primal = Value::scalar(sum);
      break;
    }
    case Op::kSquaredDiffSum: {
      const VectorXd& v = in(0).flat;
      double sum = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double d = v[i] - n.target[i];
        sum += d * d;
      }
      n.primal = Value::scalar(sum);
      break;
    }
  }
}

void Tape::inject_backward_fault(Op op, double scale) {
  fault_op_ = op;
  fault_scale_ = scale;
}

std::vector<VectorXd> Tape::backward(int root) const {
  check(root, "backward");
  detail::require(nodes_[static_cast<std::size_t>(root)].primal.size() == 1,
                  "backward: root must be scalar valued");
  std::vector<VectorXd> adj(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    adj[i] = VectorXd::Zero(nodes_[i].primal.size());
  adj[static_cast<std::size_t>(root)][0] = 1.0;

  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::kLeaf) continue;
    VectorXd g = adj[static_cast<std::size_t>(id)];
    if (n.op == fault_op_) g *= fault_scale_;
    auto in = [&](int k) -> const Value& {
      return nodes_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])].primal;
    };
    auto gin = [&](int k) -> VectorXd& {
      return adj[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])];
    };
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kPoolSpatial: {
        const Shape3& s = in(0).shape;
        const double inv = 1.0 / static_cast<double>(s.plane());
        VectorXd& gx = gin(0);
        Eigen::Index i = 0;
        for (int c = 0; c < s.channels; ++c) {
          const double v = g[c] * inv;
          for (Eigen::Index p = 0; p < s.plane(); ++p) gx[i++] += v;
        }
        break;
      }
      case Op::kPoolOverWidth: {
        const Shape3& s = in(0).shape;
        const double inv = 1.0 / static_cast<double>(s.width);
        Eigen::Map<const MatrixXd> gm(g.data(), n.primal.rows, n.primal.cols);
        VectorXd& gx = gin(0);
        for (int c = 0; c < s.channels; ++c)
          for (int h = 0; h < s.height; ++h) {
            const double v = gm(c, h) * inv;
            for (int w = 0; w < s.width; ++w) gx[tensor_index(s, c, h, w)] += v;
          }
        break;
      }
      case Op::kPoolOverHeight: {
        const Shape3& s = in(0).shape;
        const double inv = 1.0 / static_cast<double>(s.height);
        Eigen::Map<const MatrixXd> gm(g.data(), n.primal.rows, n.primal.cols);
        VectorXd& gx = gin(0);
        for (int c = 0; c < s.channels; ++c)
          for (int w = 0; w < s.width; ++w) {
            const double v = gm(c, w) * inv;
            for (int h = 0; h < s.height; ++h) gx[tensor_index(s, c, h, w)] += v;
          }
        break;
      }
      case Op::kSigmoid: {
        const VectorXd& s = n.primal.flat;
        VectorXd& gx = gin(0);
        for (Eigen::Index i = 0; i < s.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
        break;
      }
      case Op::kMatVecAffine: {
        const Value& wv = in(0);
        const VectorXd& v = in(1).flat;
        Eigen::Map<const MatrixXd> w(wv.flat.data(), wv.rows, wv.cols);
        VectorXd& gw = gin(0);
        VectorXd& gv = gin(1);
        VectorXd& gb = gin(2);
        for (Eigen::Index r = 0; r < wv.rows; ++r) {
          const double gr = g[r];
          gb[r] += gr;
          for (Eigen::Index c = 0; c < wv.cols; ++c) {
            gw[c * wv.rows + r] += gr * v[c];
            gv[c] += w(r, c) * gr;
          }
        }
        break;
      }
      case Op::kCollapseAffine: {
        const Value& mv = in(0);
        const VectorXd& w = in(1).flat;
        Eigen::Map<const MatrixXd> m(mv.flat.data(), mv.rows, mv.cols);
        VectorXd& gm = gin(0);
        VectorXd& gw = gin(1);
        VectorXd& gb = gin(2);
        for (Eigen::Index col = 0; col < mv.cols; ++col) {
          const double gc = g[col];
          gb[0] += gc;
          for (Eigen::Index row = 0; row < mv.rows; ++row) {
            gm[col * mv.rows + row] += w[row] * gc;
            gw[row] += m(row, col) * gc;
          }
        }
        break;
      }
      case Op::kOuter3: {
        const VectorXd& vc = in(0).flat;
        const VectorXd& vh = in(1).flat;
        const VectorXd& vw = in(2).flat;
        VectorXd& gc = gin(0);
        VectorXd& gh = gin(1);
        VectorXd& gw = gin(2);
        Eigen::Index i = 0;
        for (Eigen::Index c = 0; c < vc.size(); ++c)
          for (Eigen::Index h = 0; h < vh.size(); ++h)
            for (Eigen::Index w = 0; w < vw.size(); ++w) {
              const double gv = g[i++];
              gc[c] += gv * vh[h] * vw[w];
              gh[h] += gv * vc[c] * vw[w];
              gw[w] += gv * vc[c] * vh[h];
            }
        break;
      }
      case Op::kIndex:
        gin(0)[n.index] += g[0];
        break;
      case Op::kAxpy: {
        const double lam = in(1).flat[0];
        const VectorXd& term = in(2).flat;
        VectorXd& gacc = gin(0);
        VectorXd& glam = gin(1);
        VectorXd& gterm = gin(2);
        double dot = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          gacc[i] += g[i];
          gterm[i] += lam * g[i];
          dot += g[i] * term[i];
        }
        glam[0] += dot;
        break;
      }
      case Op::kHadamard: {
        const VectorXd& a = in(0).flat;
        const VectorXd& x = in(1).flat;
        VectorXd& ga = gin(0);
        VectorXd& gx = gin(1);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * x[i];
          gx[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kBroadcastChannels: {
        const Shape3& s = n.primal.shape;
        VectorXd& gv = gin(0);
        Eigen::Index i = 0;
        for (int c = 0; c < s.channels; ++c) {
          double sum = 0.0;
          for (Eigen::Index p = 0; p < s.plane(); ++p) sum += g[i++];
          gv[c] += sum;
        }
        break;
      }
      case Op::kConcatChannels: {
        gin(0) += g.head(in(0).size());
        gin(1) += g.tail(in(1).size());
        break;
      }
      case Op::kPerPixelAffine: {
        const Value& fv = in(0);
        const Value& wv = in(1);
        const Shape3& sf = fv.shape;
        const Shape3& so = n.primal.shape;
        Eigen::Map<const MatrixXd> w(wv.flat.data(), wv.rows, wv.cols);
        VectorXd& gf = gin(0);
        VectorXd& gw = gin(1);
        VectorXd& gb = gin(2);
        for (int k = 0; k < so.channels; ++k)
          for (int h = 0; h < so.height; ++h)
            for (int ww = 0; ww < so.width; ++ww) {
              const double gl = g[tensor_index(so, k, h, ww)];
              gb[k] += gl;
              for (int c = 0; c < sf.channels; ++c) {
                gw[static_cast<Eigen::Index>(c) * wv.rows + k] +=
                    gl * fv.flat[tensor_index(sf, c, h, ww)];
                gf[tensor_index(sf, c, h, ww)] += w(k, c) * gl;
              }
            }
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        const Value& lv = in(0);
        const Shape3& s = lv.shape;
        const double gscale = g[0] / static_cast<double>(s.plane());
        VectorXd& gl = gin(0);
        for (int h = 0; h < s.height; ++h)
          for (int w = 0; w < s.width; ++w) {
            double top = lv.flat[tensor_index(s, 0, h, w)];
            for (int k = 1; k < s.channels; ++k)
              top = std::max(top, lv.flat[tensor_index(s, k, h, w)]);
            double denom = 0.0;
            for (int k = 0; k < s.channels; ++k)
              denom += std::exp(lv.flat[tensor_index(s, k, h, w)] - top);
            const int label = n.labels(h, w);
            for (int k = 0; k < s.channels; ++k) {
              const double soft = std::exp(lv.flat[tensor_index(s, k, h, w)] - top) / denom;
              gl[tensor_index(s, k, h, w)] += gscale * (soft - (k == label ? 1.0 : 0.0));
            }
          }
        break;
      }
      case Op::kAddScaled: {
        gin(0) += g;
        gin(1) += n.alpha * g;
        break;
      }
      case Op::kScale:
        gin(0) += n.alpha * g;
        break;
      case Op::kSumAll: {
        VectorXd& gx = gin(0);
        for (Eigen::Index i = 0; i < gx.size(); ++i) gx[i] += g[0];
        break;
      }
      case Op::kSquaredDiffSum: {
        const VectorXd& v = in(0).flat;
        VectorXd& gx = gin(0);
        for (Eigen::Index i = 0; i < v.size(); ++i) gx[i] += g[0] * 2.0 * (v[i] - n.target[i]);
        break;
      }
    }
  }
  return adj;
}

Recording record_forward(const std::function<int(Tape&)>& build) {
  Recording rec;
  rec.root = build(rec.tape);
  rec.tape.value(rec.root);
  return rec;
}

VectorXd finite_diff_grad(const LossFn& loss, const VectorXd& params, double eps) {
  detail::require(eps > 0.0, "finite_diff_grad: eps must be positive");
  VectorXd grad(params.size());
  VectorXd p = params;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + eps;
    const double up = loss(p);
    p[i] = saved - eps;
    const double down = loss(p);
    p[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradcheckReport gradcheck(const LossFn& loss, const GradFn& grad, const VectorXd& params,
                          const std::vector<ParamBlock>& blocks, double tolerance, double eps) {
  detail::require(tolerance > 0.0, "gradcheck: tolerance must be positive");
  const VectorXd g_ad = grad(params);
  detail::require(g_ad.size() == params.size(),
                  "gradcheck: gradient length does not match parameters");
  const VectorXd g_fd = finite_diff_grad(loss, params, eps);

  std::vector<ParamBlock> layout = blocks;
  if (layout.empty()) layout.push_back({"params", 0, params.size()});

  GradcheckReport report;
  report.tolerance = tolerance;
  for (const auto& block : layout) {
    detail::require(block.offset >= 0 && block.offset + block.size <= params.size(),
                    "gradcheck: block '" + block.name + "' outside parameter vector");
    double block_max = 0.0;
    for (Eigen::Index i = block.offset; i < block.offset + block.size; ++i) {
      const double denom = std::max(1e-8, std::abs(g_ad[i]) + std::abs(g_fd[i]));
      const double rel = std::abs(g_ad[i] - g_fd[i]) / denom;
      block_max = std::max(block_max, rel);
      if (rel > report.max_rel_err || report.worst_index < 0) {
        report.max_rel_err = rel;
        report.worst_index = i;
        report.worst_parameter =
            block.name + "[" + std::to_string(i - block.offset) + "]";
      }
    }
    report.per_block.emplace_back(block.name, block_max);
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace reconet::ad
