#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmba/attention.hpp"
#include "mmba/encoder.hpp"
#include "mmba/gradcheck.hpp"
#include "mmba/model.hpp"
#include "mmba/tensor.hpp"

namespace mmba {

struct NamedCheck {
  std::string name;
  double max_rel_err = 0.0;
  bool ok = false;
};

namespace gradsuite {

using Builder = std::function<Tensor(Graph&, std::vector<Tensor>&)>;

inline GradCheckResult run_builder(const std::vector<Mat>& init, const Builder& build) {
  Graph g;
  std::vector<Tensor> leaves;
  leaves.reserve(init.size());
  for (const auto& m : init) leaves.push_back(g.var(m));
  Tensor loss = build(g, leaves);
  g.backward(loss);
  std::vector<Mat> analytic;
  analytic.reserve(leaves.size());
  for (const auto& t : leaves) analytic.push_back(g.grad(t));
  auto eval = [&build](const std::vector<Mat>& params) {
    Graph g2;
    std::vector<Tensor> ls;
    ls.reserve(params.size());
    for (const auto& m : params) ls.push_back(g2.var(m));
    return build(g2, ls).scalar();
  };
  return gradcheck(eval, init, analytic);
}

// Non-uniform constant weighting so symmetric errors cannot cancel.
inline Tensor weighted_sum(const Tensor& t) {
  Mat w(t.rows(), t.cols());
  double v = 0.3;
  for (auto& x : w) {
    x = v;
    v += 0.41;
  }
  return sum(hadamard(t, Tensor(w)));
}

inline Mat rand_mat(int r, int c, Rng& rng, double lo = -1.5, double hi = 1.5) {
  Mat m(r, c);
  for (auto& x : m) x = rng.uniform(lo, hi);
  return m;
}

// Full-model check: combined loss for one variant/regression-loss pair on a
// 3-sequence toy, differentiated with respect to every parameter.
inline NamedCheck model_check(AttentionVariant variant, RegLoss reg,
                              std::uint64_t seed) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.reg_loss = reg;
  cfg.d_v = 3;
  cfg.d_l = 4;
  cfg.d_a = 2;
  cfg.gru_hidden = 3;
  cfg.d_proj = 3;
  cfg.head_hidden = 4;
  cfg.dropout = 0.2;

  Rng rng(seed);
  ModelWeights<Mat> weights = init_weights(cfg, rng);
  std::vector<Mat> init;
  weights.visit([&init](const Mat& m) { init.push_back(m); });

  VideoFeatures vf;
  vf.video_id = "toy";
  vf.xv = rand_mat(3, cfg.d_v, rng);
  vf.xl = rand_mat(3, cfg.d_l, rng);
  vf.xa = rand_mat(3, cfg.d_a, rng);
  vf.video_duration = 1.5;
  LabelRecord rec;
  rec.video_id = "toy";
  rec.fake = true;
  rec.segments = {Interval{0.5, 1.5}};
  VideoTarget target = make_target(rec, 3, cfg.seq_duration, cfg.seq_stride);

  auto build = [&cfg, &vf, &target, seed](Graph& g, std::vector<Tensor>& leaves) {
    // Reconstitute the weight structure over the leaf tensors so the same
    // builder serves analytic and finite-difference evaluations.
    ModelWeights<Tensor> w;
    w.encoders.resize(static_cast<std::size_t>(cfg.modalities.count()));
    std::size_t k = 0;
    for (std::size_t e = 0; e < w.encoders.size(); ++e) {
      w.encoders[e].dropout_rate = cfg.dropout;
      w.encoders[e].act = cfg.act;
      w.encoders[e].dropout_after_gru = cfg.dropout_after_gru;
      w.encoders[e].dropout_after_proj = cfg.dropout_after_proj;
    }
    w.visit([&leaves, &k](Tensor& t) { t = leaves[k++]; });
    (void)g;
    // Fixed dropout masks across evaluations: the stream restarts here.
    Rng drop_rng(mix_seed(seed, 0xD0));
    ModelOutput mo = forward(w, cfg, vf, /*training=*/true, drop_rng);
    return combined_loss(mo, target, cfg);
  };

  GradCheckResult res = run_builder(init, build);
  NamedCheck out;
  out.name = "model/" + variant_name(variant) + "+" + reg_loss_name(reg);
  out.max_rel_err = res.max_rel_err;
  out.ok = res.ok;
  return out;
}

}  // namespace gradsuite

// Finite-difference checks covering every primitive op, the encoder and
// attention blocks, and the full model under each attention variant and
// regression loss. All inputs are small toys; tolerance 1e-4.
inline std::vector<NamedCheck> run_gradcheck_suite(std::uint64_t seed = 123) {
  using namespace gradsuite;
  std::vector<NamedCheck> checks;
  Rng rng(seed);
  auto record = [&checks](const std::string& name, const std::vector<Mat>& init,
                       const Builder& build) {
    GradCheckResult res = run_builder(init, build);
    checks.push_back(NamedCheck{name, res.max_rel_err, res.ok});
  };

  record("op/matmul", {rand_mat(3, 4, rng), rand_mat(4, 2, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(matmul(v[0], v[1])); });
  record("op/transpose", {rand_mat(3, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(transpose(v[0])); });
  record("op/row_softmax", {rand_mat(4, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(row_softmax(v[0])); });
  record("op/hadamard", {rand_mat(3, 3, rng), rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(hadamard(v[0], v[1])); });
  record("op/add", {rand_mat(3, 3, rng), rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(add(v[0], v[1])); });
  record("op/sub", {rand_mat(3, 3, rng), rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(sub(v[0], v[1])); });
  record("op/add_rowvec", {rand_mat(4, 3, rng), rand_mat(1, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(add_rowvec(v[0], v[1])); });
  record("op/affine", {rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(affine(v[0], 1.3, -0.4)); });
  {
    Mat denom = rand_mat(3, 3, rng, 0.4, 1.6);
    record("op/divide", {rand_mat(3, 3, rng), denom},
        [](Graph&, std::vector<Tensor>& v) { return weighted_sum(divide(v[0], v[1])); });
  }
  {
    Mat a = rand_mat(3, 3, rng), b = rand_mat(3, 3, rng);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a.data()[i] - b.data()[i]) < 0.05) b.data()[i] += 0.2;
    record("op/minimum", {a, b},
        [](Graph&, std::vector<Tensor>& v) { return weighted_sum(minimum(v[0], v[1])); });
    record("op/maximum", {a, b},
        [](Graph&, std::vector<Tensor>& v) { return weighted_sum(maximum(v[0], v[1])); });
  }
  record("op/elem_log", {rand_mat(3, 3, rng, 0.3, 2.0)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(elem_log(v[0])); });
  record("op/elem_pow", {rand_mat(3, 3, rng, 0.3, 1.8)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(elem_pow(v[0], 2.0)); });
  {
    Mat m = rand_mat(3, 3, rng);
    for (auto& x : m)
      if (std::abs(std::abs(x) - 1.0) < 0.05) x *= 0.8;
    record("op/clamp", {m}, [](Graph&, std::vector<Tensor>& v) {
      return weighted_sum(clamp(v[0], -1.0, 1.0));
    });
  }
  record("op/concat_cols", {rand_mat(3, 2, rng), rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) {
        return weighted_sum(concat_cols({v[0], v[1]}));
      });
  record("op/concat_rows", {rand_mat(2, 3, rng), rand_mat(1, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) {
        return weighted_sum(concat_rows({v[0], v[1]}));
      });
  record("op/slice", {rand_mat(4, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(slice(v[0], 1, 3, 0, 2)); });
  record("op/reshape", {rand_mat(3, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(reshape(v[0], 4, 3)); });
  record("op/sum", {rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return sum(v[0]); });
  record("op/mean", {rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return mean(v[0]); });
  for (Activation kind : {Activation::Sigmoid, Activation::Tanh, Activation::Relu}) {
    Mat m = rand_mat(3, 3, rng);
    for (auto& x : m)
      if (std::abs(x) < 0.05) x = 0.4;
    record("op/" + activation_name(kind), {m},
        [kind](Graph&, std::vector<Tensor>& v) {
          return weighted_sum(activation(kind, v[0]));
        });
  }
  {
    const std::uint64_t mask_seed = mix_seed(seed, 0xD0D0);
    record("op/dropout", {rand_mat(4, 4, rng)},
        [mask_seed](Graph&, std::vector<Tensor>& v) {
          Rng r(mask_seed);
          return weighted_sum(dropout(v[0], 0.3, r, true));
        });
  }

  // GRU cell: all nine parameters plus input and previous state.
  {
    const int d_in = 3, h = 3;
    std::vector<Mat> init;
    for (int i = 0; i < 6; ++i) init.push_back(rand_mat(i % 2 ? h : d_in, h, rng));
    // order: wz, uz, wr, ur, wc, uc then biases, x, h_prev
    init.push_back(rand_mat(1, h, rng));
    init.push_back(rand_mat(1, h, rng));
    init.push_back(rand_mat(1, h, rng));
    init.push_back(rand_mat(1, d_in, rng));
    init.push_back(rand_mat(1, h, rng));
    record("block/gru_step", init, [](Graph&, std::vector<Tensor>& v) {
      GruCell<Tensor> cell;
      cell.wz = v[0]; cell.uz = v[1];
      cell.wr = v[2]; cell.ur = v[3];
      cell.wc = v[4]; cell.uc = v[5];
      cell.bz = v[6]; cell.br = v[7]; cell.bc = v[8];
      return weighted_sum(gru_step(cell, v[9], v[10]));
    });
  }

  // Modality encoder end-to-end (dropout active with a fixed mask).
  {
    const int d_in = 3, h = 2, d_proj = 3, n = 3;
    ModelConfig cfg;
    cfg.d_v = d_in;
    cfg.gru_hidden = h;
    cfg.d_proj = d_proj;
    cfg.dropout = 0.2;
    Rng enc_rng(mix_seed(seed, 0xE));
    ModalityEncoder<Mat> enc = init_encoder(cfg, d_in, enc_rng);
    std::vector<Mat> init;
    enc.visit([&init](const Mat& m) { init.push_back(m); });
    init.push_back(rand_mat(n, d_in, rng));
    const std::uint64_t mask_seed = mix_seed(seed, 0xE2);
    const ModalityEncoder<Mat> enc_proto = enc;
    record("block/encoder", init,
        [enc_proto, mask_seed](Graph&, std::vector<Tensor>& v) {
          ModalityEncoder<Tensor> e;
          e.dropout_rate = enc_proto.dropout_rate;
          e.act = enc_proto.act;
          e.dropout_after_gru = enc_proto.dropout_after_gru;
          e.dropout_after_proj = enc_proto.dropout_after_proj;
          std::size_t k = 0;
          e.visit([&v, &k](Tensor& t) { t = v[k++]; });
          Rng r(mask_seed);
          return weighted_sum(encode_modality(e, v[k], true, r));
        });
  }

  // Attention blocks on raw inputs.
  record("block/pair_attention", {rand_mat(3, 4, rng), rand_mat(3, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) {
        return weighted_sum(pair_attention(v[0], v[1]).fused);
      });
  record("block/mmms_ba_fuse",
      {rand_mat(3, 3, rng), rand_mat(3, 3, rng), rand_mat(3, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) {
        return weighted_sum(mmms_ba_fuse(v[0], v[1], v[2]));
      });
  record("block/mmus_sa", {rand_mat(3, 4, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(mmus_sa_block(v[0])); });
  record("block/ms_sa", {rand_mat(4, 3, rng)},
      [](Graph&, std::vector<Tensor>& v) { return weighted_sum(ms_sa_block(v[0])); });

  // Whole model, every variant and both regression losses.
  for (AttentionVariant variant :
       {AttentionVariant::MMMS_BA, AttentionVariant::MMUS_SA, AttentionVariant::MS_SA})
    for (RegLoss reg : {RegLoss::DIoU, RegLoss::GIoU})
      checks.push_back(gradsuite::model_check(variant, reg, mix_seed(seed, 0xF00)));

  return checks;
}

}  // namespace mmba
