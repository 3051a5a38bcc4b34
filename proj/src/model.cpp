#include "reconet/model.hpp"

#include <cmath>

#include "reconet/rng.hpp"

namespace reconet {

namespace {

// Flatten order: per repetition channel_weight, channel_bias, height_weight,
// height_bias, width_weight, width_bias; then lambda_raw, gpm, head, aux.
// Every writer and reader below follows this order.
void append_matrix(VectorXd& out, Eigen::Index& at, const MatrixXd& m) {
  out.segment(at, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
  at += m.size();
}

void append_vector(VectorXd& out, Eigen::Index& at, const VectorXd& v) {
  out.segment(at, v.size()) = v;
  at += v.size();
}

MatrixXd take_matrix(const VectorXd& in, Eigen::Index& at, Eigen::Index rows,
                     Eigen::Index cols) {
  MatrixXd m = Eigen::Map<const MatrixXd>(in.data() + at, rows, cols);
  at += rows * cols;
  return m;
}

VectorXd take_vector(const VectorXd& in, Eigen::Index& at, Eigen::Index n) {
  VectorXd v = in.segment(at, n);
  at += n;
  return v;
}

}  // namespace

AuxParams init_aux(int channels, int num_classes, std::uint64_t seed) {
  detail::require(channels >= 1, "init_aux: channels must be >= 1");
  detail::require(num_classes >= 2, "init_aux: need at least two classes");
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  Rng rng(seed);
  AuxParams p;
  p.weight = random_matrix(num_classes, channels, rng, -bound, bound);
  p.bias = VectorXd::Zero(num_classes);
  return p;
}

ModelParams init_model(int channels, int out_channels, int num_classes, int rank,
                       std::uint64_t seed) {
  Rng seeds(seed);
  ModelParams p;
  p.tgm = init_tgm(channels, rank, seeds.next_u64());
  p.gpm = init_gpm(channels, out_channels, seeds.next_u64());
  p.head = init_head(channels, out_channels, num_classes, seeds.next_u64());
  p.aux = init_aux(channels, num_classes, seeds.next_u64());
  return p;
}

std::vector<ad::ParamBlock> model_layout(const ModelParams& p) {
  std::vector<ad::ParamBlock> blocks;
  Eigen::Index at = 0;
  auto add = [&](const std::string& name, Eigen::Index n) {
    blocks.push_back({name, at, n});
    at += n;
  };
  for (std::size_t i = 0; i < p.tgm.reps.size(); ++i) {
    const auto& rep = p.tgm.reps[i];
    const std::string prefix = "rep" + std::to_string(i + 1) + ".";
    add(prefix + "channel_weight", rep.channel_weight.size());
    add(prefix + "channel_bias", rep.channel_bias.size());
    add(prefix + "height_weight", rep.height_weight.size());
    add(prefix + "height_bias", 1);
    add(prefix + "width_weight", rep.width_weight.size());
    add(prefix + "width_bias", 1);
  }
  add("lambda_raw", p.tgm.lambda_raw.size());
  add("gpm.weight", p.gpm.weight.size());
  add("gpm.bias", p.gpm.bias.size());
  add("head.weight", p.head.classifier_weight.size());
  add("head.bias", p.head.classifier_bias.size());
  add("aux.weight", p.aux.weight.size());
  add("aux.bias", p.aux.bias.size());
  return blocks;
}

Eigen::Index model_size(const ModelParams& p) {
  const auto blocks = model_layout(p);
  return blocks.empty() ? 0 : blocks.back().offset + blocks.back().size;
}

VectorXd flatten(const ModelParams& p) {
  VectorXd out(model_size(p));
  Eigen::Index at = 0;
  for (const auto& rep : p.tgm.reps) {
    append_matrix(out, at, rep.channel_weight);
    append_vector(out, at, rep.channel_bias);
    append_vector(out, at, rep.height_weight);
    out[at++] = rep.height_bias;
    append_vector(out, at, rep.width_weight);
    out[at++] = rep.width_bias;
  }
  append_vector(out, at, p.tgm.lambda_raw);
  append_matrix(out, at, p.gpm.weight);
  append_vector(out, at, p.gpm.bias);
  append_matrix(out, at, p.head.classifier_weight);
  append_vector(out, at, p.head.classifier_bias);
  append_matrix(out, at, p.aux.weight);
  append_vector(out, at, p.aux.bias);
  return out;
}

ModelParams unflatten(const VectorXd& flat, const ModelParams& reference) {
  detail::require(flat.size() == model_size(reference),
                  "unflatten: expected " + std::to_string(model_size(reference)) +
                      " parameters, got " + std::to_string(flat.size()));
  ModelParams p = reference;
  Eigen::Index at = 0;
  for (auto& rep : p.tgm.reps) {
    rep.channel_weight =
        take_matrix(flat, at, rep.channel_weight.rows(), rep.channel_weight.cols());
    rep.channel_bias = take_vector(flat, at, rep.channel_bias.size());
    rep.height_weight = take_vector(flat, at, rep.height_weight.size());
    rep.height_bias = flat[at++];
    rep.width_weight = take_vector(flat, at, rep.width_weight.size());
    rep.width_bias = flat[at++];
  }
  p.tgm.lambda_raw = take_vector(flat, at, p.tgm.lambda_raw.size());
  p.gpm.weight = take_matrix(flat, at, p.gpm.weight.rows(), p.gpm.weight.cols());
  p.gpm.bias = take_vector(flat, at, p.gpm.bias.size());
  p.head.classifier_weight =
      take_matrix(flat, at, p.head.classifier_weight.rows(), p.head.classifier_weight.cols());
  p.head.classifier_bias = take_vector(flat, at, p.head.classifier_bias.size());
  p.aux.weight = take_matrix(flat, at, p.aux.weight.rows(), p.aux.weight.cols());
  p.aux.bias = take_vector(flat, at, p.aux.bias.size());
  return p;
}

LossBreakdown model_loss(const ModelParams& p, const Tensor3d& x, const LabelMap& labels) {
  const ForwardResult fwd = tgm_trm_forward(x, p.tgm);
  const VectorXd g = gpm_forward(x, p.gpm);
  const Tensor3d logits = head_forward(x, fwd.y, g, p.head);
  const double main = softmax_cross_entropy(logits, labels);
  const Tensor3d aux_logits = per_pixel_affine(x, p.aux.weight, p.aux.bias);
  const double aux = softmax_cross_entropy(aux_logits, labels);
  return total_loss(main, aux);
}

double batch_loss(const ModelParams& p, const std::vector<Tensor3d>& xs,
                  const std::vector<LabelMap>& labels) {
  detail::require(!xs.empty() && xs.size() == labels.size(),
                  "batch_loss: need equally many images and label maps");
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += model_loss(p, xs[i], labels[i]).total;
  return sum * (1.0 / static_cast<double>(xs.size()));
}

LabelMap predict(const ModelParams& p, const Tensor3d& x) {
  const ForwardResult fwd = tgm_trm_forward(x, p.tgm);
  const VectorXd g = gpm_forward(x, p.gpm);
  const Tensor3d logits = head_forward(x, fwd.y, g, p.head);
  const Shape3& s = logits.shape();
  LabelMap out(s.height, s.width);
  for (int h = 0; h < s.height; ++h) {
    for (int w = 0; w < s.width; ++w) {
      int best = 0;
      for (int k = 1; k < s.channels; ++k)
        if (logits(k, h, w) > logits(best, h, w)) best = k;
      out(h, w) = best;
    }
  }
  return out;
}

double pixel_accuracy(const LabelMap& predicted, const LabelMap& truth) {
  detail::require(predicted.rows() == truth.rows() && predicted.cols() == truth.cols(),
                  "pixel_accuracy: map sizes differ");
  Eigen::Index hits = 0;
  for (Eigen::Index h = 0; h < predicted.rows(); ++h)
    for (Eigen::Index w = 0; w < predicted.cols(); ++w)
      if (predicted(h, w) == truth(h, w)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

LossTape build_loss_tape(const ModelParams& p, const std::vector<Tensor3d>& xs,
                         const std::vector<LabelMap>& labels) {
  detail::require(!xs.empty() && xs.size() == labels.size(),
                  "build_loss_tape: need equally many images and label maps");
  LossTape t;
  ad::Tape& tape = t.tape;

  // Parameter leaves in flatten order.
  std::vector<int> rep_cw, rep_cb, rep_hw, rep_hb, rep_ww, rep_wb;
  for (std::size_t i = 0; i < p.tgm.reps.size(); ++i) {
    const auto& rep = p.tgm.reps[i];
    const std::string prefix = "rep" + std::to_string(i + 1) + ".";
    rep_cw.push_back(tape.leaf(ad::Value::matrix(rep.channel_weight), prefix + "channel_weight"));
    rep_cb.push_back(tape.leaf(ad::Value::vector(rep.channel_bias), prefix + "channel_bias"));
    rep_hw.push_back(tape.leaf(ad::Value::vector(rep.height_weight), prefix + "height_weight"));
    rep_hb.push_back(tape.leaf(ad::Value::scalar(rep.height_bias), prefix + "height_bias"));
    rep_ww.push_back(tape.leaf(ad::Value::vector(rep.width_weight), prefix + "width_weight"));
    rep_wb.push_back(tape.leaf(ad::Value::scalar(rep.width_bias), prefix + "width_bias"));
    t.param_leaves.insert(t.param_leaves.end(),
                          {rep_cw[i], rep_cb[i], rep_hw[i], rep_hb[i], rep_ww[i], rep_wb[i]});
  }
  const int lambda_raw = tape.leaf(ad::Value::vector(p.tgm.lambda_raw), "lambda_raw");
  const int gpm_w = tape.leaf(ad::Value::matrix(p.gpm.weight), "gpm.weight");
  const int gpm_b = tape.leaf(ad::Value::vector(p.gpm.bias), "gpm.bias");
  const int head_w = tape.leaf(ad::Value::matrix(p.head.classifier_weight), "head.weight");
  const int head_b = tape.leaf(ad::Value::vector(p.head.classifier_bias), "head.bias");
  const int aux_w = tape.leaf(ad::Value::matrix(p.aux.weight), "aux.weight");
  const int aux_b = tape.leaf(ad::Value::vector(p.aux.bias), "aux.bias");
  t.param_leaves.insert(t.param_leaves.end(),
                        {lambda_raw, gpm_w, gpm_b, head_w, head_b, aux_w, aux_b});

  const int lambdas = tape.sigmoid(lambda_raw);
  std::vector<int> totals;
  for (std::size_t img = 0; img < xs.size(); ++img) {
    const Shape3& s = xs[img].shape();
    const int x = tape.leaf(ad::Value::tensor(xs[img]));
    const int pooled_c = tape.pool_spatial(x);
    const int pooled_w = tape.pool_over_width(x);
    const int pooled_h = tape.pool_over_height(x);
    int acc = tape.leaf(ad::Value::tensor(Tensor3d::zero(s)));
    for (std::size_t i = 0; i < p.tgm.reps.size(); ++i) {
      const int vc = tape.sigmoid(tape.matvec_affine(rep_cw[i], pooled_c, rep_cb[i]));
      const int vh = tape.sigmoid(tape.collapse_affine(pooled_w, rep_hw[i], rep_hb[i]));
      const int vw = tape.sigmoid(tape.collapse_affine(pooled_h, rep_ww[i], rep_wb[i]));
      const int term = tape.outer3(vc, vh, vw);
      acc = tape.axpy(acc, tape.index(lambdas, static_cast<int>(i)), term);
    }
    const int y = tape.hadamard(acc, x);
    const int g = tape.matvec_affine(gpm_w, pooled_c, gpm_b);
    const int gb = tape.broadcast_channels(g, s.height, s.width);
    const int feats = tape.concat_channels(tape.concat_channels(x, y), gb);
    const int logits = tape.per_pixel_affine(feats, head_w, head_b);
    const int main = tape.softmax_cross_entropy(logits, labels[img]);
    const int aux_logits = tape.per_pixel_affine(x, aux_w, aux_b);
    const int aux = tape.softmax_cross_entropy(aux_logits, labels[img]);
    t.main_nodes.push_back(main);
    t.aux_nodes.push_back(aux);
    totals.push_back(tape.add_scaled(main, kAuxLossWeight, aux));
  }
  int chain = totals.front();
  for (std::size_t i = 1; i < totals.size(); ++i) chain = tape.add_scaled(chain, 1.0, totals[i]);
  t.root = tape.scale(chain, 1.0 / static_cast<double>(xs.size()));
  return t;
}

void set_tape_params(LossTape& t, const ModelParams& reference, const VectorXd& flat) {
  const ModelParams p = unflatten(flat, reference);
  std::size_t leaf = 0;
  auto put = [&](ad::Value v) { t.tape.set_leaf(t.param_leaves[leaf++], std::move(v)); };
  for (const auto& rep : p.tgm.reps) {
    put(ad::Value::matrix(rep.channel_weight));
    put(ad::Value::vector(rep.channel_bias));
    put(ad::Value::vector(rep.height_weight));
    put(ad::Value::scalar(rep.height_bias));
    put(ad::Value::vector(rep.width_weight));
    put(ad::Value::scalar(rep.width_bias));
  }
  put(ad::Value::vector(p.tgm.lambda_raw));
  put(ad::Value::matrix(p.gpm.weight));
  put(ad::Value::vector(p.gpm.bias));
  put(ad::Value::matrix(p.head.classifier_weight));
  put(ad::Value::vector(p.head.classifier_bias));
  put(ad::Value::matrix(p.aux.weight));
  put(ad::Value::vector(p.aux.bias));
  t.tape.replay();
}

VectorXd tape_gradient(const LossTape& t) {
  const auto adj = t.tape.backward(t.root);
  Eigen::Index total = 0;
  for (const int id : t.param_leaves) total += t.tape.value(id).size();
  VectorXd grad(total);
  Eigen::Index at = 0;
  for (const int id : t.param_leaves) {
    const VectorXd& g = adj[static_cast<std::size_t>(id)];
    grad.segment(at, g.size()) = g;
    at += g.size();
  }
  return grad;
}

VectorXd batch_gradient(const ModelParams& p, const std::vector<Tensor3d>& xs,
                        const std::vector<LabelMap>& labels) {
  const LossTape t = build_loss_tape(p, xs, labels);
  return tape_gradient(t);
}

}  // namespace reconet
