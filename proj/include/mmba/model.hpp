#pragma once

#include <array>
#include <string>
#include <vector>

#include "mmba/attention.hpp"
#include "mmba/data.hpp"
#include "mmba/encoder.hpp"
#include "mmba/errors.hpp"
#include "mmba/interval.hpp"
#include "mmba/tensor.hpp"

namespace mmba {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class AttentionVariant { MMMS_BA, MMUS_SA, MS_SA };

inline AttentionVariant parse_variant(const std::string& s) {
  if (s == "mmms-ba") return AttentionVariant::MMMS_BA;
  if (s == "mmus-sa") return AttentionVariant::MMUS_SA;
  if (s == "ms-sa") return AttentionVariant::MS_SA;
  throw ConfigError("unknown attention variant: " + s);
}

inline std::string variant_name(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::MMMS_BA: return "mmms-ba";
    case AttentionVariant::MMUS_SA: return "mmus-sa";
    case AttentionVariant::MS_SA: return "ms-sa";
  }
  return "?";
}

enum class RegLoss { DIoU, GIoU };

inline RegLoss parse_reg_loss(const std::string& s) {
  if (s == "diou") return RegLoss::DIoU;
  if (s == "giou") return RegLoss::GIoU;
  throw ConfigError("unknown regression loss: " + s);
}

inline std::string reg_loss_name(RegLoss r) {
  return r == RegLoss::DIoU ? "diou" : "giou";
}

// Which of the three modalities participate, canonical order V, L, A.
struct ModalitySet {
  bool v = true, l = true, a = true;

  int count() const { return (v ? 1 : 0) + (l ? 1 : 0) + (a ? 1 : 0); }
  bool all() const { return v && l && a; }

  static ModalitySet parse(const std::string& s) {
    ModalitySet m{false, false, false};
    for (char ch : s) {
      switch (ch) {
        case 'v': m.v = true; break;
        case 'l': m.l = true; break;
        case 'a': m.a = true; break;
        default:
          throw ConfigError("modality string may only contain v, l, a: " + s);
      }
    }
    return m;
  }

  std::string str() const {
    std::string s;
    if (v) s += 'v';
    if (l) s += 'l';
    if (a) s += 'a';
    return s;
  }
};

struct ModelConfig {
  AttentionVariant variant = AttentionVariant::MMMS_BA;
  ModalitySet modalities;
  int d_v = 32, d_l = 32, d_a = 32;
  int gru_hidden = 300;   // per direction
  int d_proj = 100;
  int head_hidden = 100;
  double dropout = 0.3;
  Activation act = Activation::Relu;
  bool dropout_after_gru = true;
  bool dropout_after_proj = true;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double lambda_reg = 1.0;
  RegLoss reg_loss = RegLoss::DIoU;
  double seq_duration = 0.5;
  double seq_stride = 0.5;

  void validate() const {
    if (modalities.count() < 2)
      throw ConfigError("at least two modalities are required");
    if (variant != AttentionVariant::MMMS_BA && !modalities.all())
      throw ConfigError(variant_name(variant) +
                        " is only defined for all three modalities");
    if (d_v < 1 || d_l < 1 || d_a < 1 || gru_hidden < 1 || d_proj < 1 ||
        head_hidden < 1)
      throw ConfigError("widths must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must lie in [0, 1)");
    if (lambda_reg < 0.0) throw ConfigError("lambda_reg must be >= 0");
    if (seq_duration <= 0.0 || seq_stride <= 0.0)
      throw ConfigError("sequence duration and stride must be > 0");
  }

  // Width of the fused per-sequence representation fed to the heads.
  int fused_width() const {
    switch (variant) {
      case AttentionVariant::MMMS_BA:
        return modalities.all() ? 9 * d_proj : 4 * d_proj;
      case AttentionVariant::MMUS_SA:
      case AttentionVariant::MS_SA:
        return 6 * d_proj;
    }
    return 0;
  }

  std::vector<int> selected_widths() const {
    std::vector<int> w;
    if (modalities.v) w.push_back(d_v);
    if (modalities.l) w.push_back(d_l);
    if (modalities.a) w.push_back(d_a);
    return w;
  }
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

// One encoder per selected modality (canonical order V, L, A), a shared
// hidden layer, a 2-way classification head and a 2-output regression head.
template <class T>
struct ModelWeights {
  std::vector<ModalityEncoder<T>> encoders;
  T hidden_w, hidden_b;  // fused_width x head_hidden
  T cls_w, cls_b;        // head_hidden x 2 (column 1 = fake)
  T reg_w, reg_b;        // head_hidden x 2 (columns: start, end offset)

  template <class F>
  void visit(F&& f) {
    for (auto& e : encoders) e.visit(f);
    f(hidden_w); f(hidden_b);
    f(cls_w); f(cls_b);
    f(reg_w); f(reg_b);
  }
  template <class F>
  void visit(F&& f) const {
    for (const auto& e : encoders) e.visit(f);
    f(hidden_w); f(hidden_b);
    f(cls_w); f(cls_b);
    f(reg_w); f(reg_b);
  }
};

inline ModalityEncoder<Mat> init_encoder(const ModelConfig& cfg, int d_in, Rng& rng) {
  ModalityEncoder<Mat> e;
  e.fwd = init_gru(d_in, cfg.gru_hidden, rng);
  e.bwd = init_gru(d_in, cfg.gru_hidden, rng);
  e.proj_w = init_weight(2 * cfg.gru_hidden, cfg.d_proj, rng);
  e.proj_b = Mat(1, cfg.d_proj);
  e.dropout_rate = cfg.dropout;
  e.act = cfg.act;
  e.dropout_after_gru = cfg.dropout_after_gru;
  e.dropout_after_proj = cfg.dropout_after_proj;
  return e;
}

inline ModelWeights<Mat> init_weights(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelWeights<Mat> w;
  for (int d_in : cfg.selected_widths())
    w.encoders.push_back(init_encoder(cfg, d_in, rng));
  const int fw = cfg.fused_width();
  w.hidden_w = init_weight(fw, cfg.head_hidden, rng);
  w.hidden_b = Mat(1, cfg.head_hidden);
  w.cls_w = init_weight(cfg.head_hidden, 2, rng);
  w.cls_b = Mat(1, 2);
  w.reg_w = init_weight(cfg.head_hidden, 2, rng);
  w.reg_b = Mat(1, 2);
  return w;
}

inline ModelWeights<Tensor> bind(Graph& g, const ModelWeights<Mat>& w) {
  ModelWeights<Tensor> out;
  for (const auto& e : w.encoders) out.encoders.push_back(bind(g, e));
  out.hidden_w = g.var(w.hidden_w);
  out.hidden_b = g.var(w.hidden_b);
  out.cls_w = g.var(w.cls_w);
  out.cls_b = g.var(w.cls_b);
  out.reg_w = g.var(w.reg_w);
  out.reg_b = g.var(w.reg_b);
  return out;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

struct SequencePrediction {
  double p_fake = 0.0;
  double start_offset = 0.0;  // seconds relative to the window start
  double end_offset = 0.0;
};

// Per-sequence class probabilities and offsets with graph handles, so the
// loss can be built on top of them.
struct ModelOutput {
  Tensor probs;    // N x 2, rows sum to 1; column 1 is p_fake
  Tensor offsets;  // N x 2, nonnegative (start, end)
};

inline std::vector<SequencePrediction> predictions_from(const ModelOutput& out) {
  std::vector<SequencePrediction> preds;
  const Mat& p = out.probs.value();
  const Mat& o = out.offsets.value();
  preds.reserve(static_cast<std::size_t>(p.rows()));
  for (int i = 0; i < p.rows(); ++i)
    preds.push_back(SequencePrediction{p(i, 1), o(i, 0), o(i, 1)});
  return preds;
}

namespace detail {

// Fusion for the bi-modal reductions of the pairwise-attention model. The
// residual concatenation follows the tri-modal order (V, A, L) restricted
// to the selected pair; the pair itself keeps its tri-modal argument order.
inline Tensor mmms_ba_pair_fuse(const ModalitySet& mods, const Tensor& first,
                                const Tensor& second) {
  // first/second arrive in canonical storage order (V, L, A).
  if (mods.v && mods.l) {  // pair(V, L), residual [V, L]
    return concat_cols({pair_attention(first, second).fused, first, second});
  }
  if (mods.v && mods.a) {  // pair(A, V), residual [V, A]
    return concat_cols({pair_attention(second, first).fused, first, second});
  }
  // pair(A, L), residual [A, L]
  return concat_cols({pair_attention(second, first).fused, second, first});
}

}  // namespace detail

inline ModelOutput forward(const ModelWeights<Tensor>& w, const ModelConfig& cfg,
                           const VideoFeatures& vf, bool training, Rng& rng) {
  cfg.validate();
  // Encode the selected modalities in canonical order.
  std::vector<Tensor> enc;
  std::size_t slot = 0;
  const Mat* inputs[3] = {&vf.xv, &vf.xl, &vf.xa};
  const bool picked[3] = {cfg.modalities.v, cfg.modalities.l, cfg.modalities.a};
  for (int m = 0; m < 3; ++m) {
    if (!picked[m]) continue;
    if (slot >= w.encoders.size())
      throw UsageError("model weights cover fewer modalities than configured");
    enc.push_back(encode_modality(w.encoders[slot], Tensor(*inputs[m]), training, rng));
    ++slot;
  }

  Tensor fused;
  switch (cfg.variant) {
    case AttentionVariant::MMMS_BA: {
      if (cfg.modalities.all()) {
        fused = mmms_ba_fuse(enc[0], enc[1], enc[2]);  // V, L, A
      } else {
        fused = detail::mmms_ba_pair_fuse(cfg.modalities, enc[0], enc[1]);
      }
      break;
    }
    case AttentionVariant::MMUS_SA: {
      // One self-attention block per sequence position over the three
      // modality rows (V, L, A).
      const int n = enc[0].rows();
      const int d = enc[0].cols();
      std::vector<Tensor> rows;
      rows.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        Tensor stacked = concat_rows({slice(enc[0], i, i + 1, 0, d),
                                      slice(enc[1], i, i + 1, 0, d),
                                      slice(enc[2], i, i + 1, 0, d)});
        rows.push_back(mmus_sa_block(stacked));
      }
      fused = concat_rows(rows);
      break;
    }
    case AttentionVariant::MS_SA: {
      fused = concat_cols({ms_sa_block(enc[0]), ms_sa_block(enc[1]),
                           ms_sa_block(enc[2]), enc[0], enc[1], enc[2]});
      break;
    }
  }

  Tensor hidden = activation(Activation::Relu,
                             add_rowvec(matmul(fused, w.hidden_w), w.hidden_b));
  ModelOutput out;
  out.probs = row_softmax(add_rowvec(matmul(hidden, w.cls_w), w.cls_b));
  out.offsets = activation(Activation::Relu,
                           add_rowvec(matmul(hidden, w.reg_w), w.reg_b));
  return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

inline constexpr double kProbEps = 1e-12;

// Focal loss on a scalar probability: with p_t = p if c else 1-p,
// loss = -alpha (1-p_t)^gamma log(p_t).
inline double focal_loss(double p_fake, int c, double alpha, double gamma) {
  double pt = c ? p_fake : 1.0 - p_fake;
  pt = std::min(std::max(pt, kProbEps), 1.0 - kProbEps);
  return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

// Plain-value 1-D IoU regression losses. Degenerate predictions are guarded
// with e := max(e, s); the ground truth must be a proper interval.
inline double segment_reg_loss(Interval pred, const Interval& gt, RegLoss kind) {
  if (gt.end <= gt.start)
    throw DataError("ground-truth segment has end <= start");
  pred.end = std::max(pred.end, pred.start);
  const double inter = intersection_length(pred, gt);
  const double uni = pred.length() + gt.length() - inter;
  const double iou_v = inter / uni;
  const Interval c = hull(pred, gt);
  if (kind == RegLoss::GIoU)
    return 1.0 - iou_v + (c.length() - uni) / c.length();
  const double dc = 0.5 * (pred.start + pred.end) - 0.5 * (gt.start + gt.end);
  return 1.0 - iou_v + (dc * dc) / (c.length() * c.length());
}

// Per-video targets for the combined objective.
struct VideoTarget {
  std::vector<int> c;               // per-sequence labels
  std::vector<Interval> segments;   // ground-truth fake segments
  bool fake = false;

  int n_fake() const {
    int k = 0;
    for (int ci : c) k += ci;
    return k;
  }
};

inline VideoTarget make_target(const LabelRecord& rec, int n, double duration,
                               double stride) {
  VideoTarget t;
  t.c = derive_sequence_labels(rec.segments, n, duration, stride);
  t.segments = rec.segments;
  t.fake = rec.fake;
  return t;
}

namespace detail {

// Ground-truth segment responsible for window i: maximum IoU against the
// window, ties broken by earliest start.
inline const Interval& regression_target(const std::vector<Interval>& segments,
                                         const Interval& window) {
  if (segments.empty())
    throw DataError("fake sequence with no ground-truth segments");
  const Interval* best = &segments.front();
  double best_iou = -1.0;
  for (const Interval& s : segments) {
    const double v = iou(window, s);
    if (v > best_iou) {
      best_iou = v;
      best = &s;
    }
  }
  return *best;
}

// Differentiable counterpart of segment_reg_loss for one sequence.
inline Tensor reg_loss_tensor(const Tensor& s_p, const Tensor& e_p_raw,
                              const Interval& gt, RegLoss kind) {
  Tensor e_p = maximum(e_p_raw, s_p);
  Tensor gs = scalar_const(gt.start), ge = scalar_const(gt.end);
  Tensor inter = maximum(sub(minimum(e_p, ge), maximum(s_p, gs)), scalar_const(0.0));
  Tensor uni = sub(add(sub(e_p, s_p), scalar_const(gt.length())), inter);
  Tensor iou_t = divide(inter, uni);
  Tensor c_len = sub(maximum(e_p, ge), minimum(s_p, gs));
  if (kind == RegLoss::GIoU)
    return add(affine(iou_t, -1.0, 1.0), divide(sub(c_len, uni), c_len));
  Tensor dc = affine(add(s_p, e_p), 0.5, -0.5 * (gt.start + gt.end));
  return add(affine(iou_t, -1.0, 1.0),
             divide(hadamard(dc, dc), hadamard(c_len, c_len)));
}

}  // namespace detail

// Combined objective: focal classification over all sequences plus
// lambda_reg-weighted IoU regression over the fake ones, normalized by
// max(N_f, 1).
inline Tensor combined_loss(const ModelOutput& out, const VideoTarget& target,
                            const ModelConfig& cfg) {
  const int n = out.probs.rows();
  if (static_cast<int>(target.c.size()) != n)
    throw DataError("combined_loss: " + std::to_string(target.c.size()) +
                    " labels for " + std::to_string(n) + " sequences");
  Tensor total = scalar_const(0.0);
  for (int i = 0; i < n; ++i) {
    const int c = target.c[static_cast<std::size_t>(i)];
    Tensor pt = c ? slice(out.probs, i, i + 1, 1, 2)
                  : slice(out.probs, i, i + 1, 0, 1);
    pt = clamp(pt, kProbEps, 1.0 - kProbEps);
    Tensor cls = affine(hadamard(elem_pow(affine(pt, -1.0, 1.0), cfg.focal_gamma),
                                 elem_log(pt)),
                        -cfg.focal_alpha, 0.0);
    total = add(total, cls);
    if (c) {
      const double ws = i * cfg.seq_stride;
      const Interval window{ws, ws + cfg.seq_duration};
      const Interval& gt = detail::regression_target(target.segments, window);
      Tensor s_p = affine(slice(out.offsets, i, i + 1, 0, 1), 1.0, ws);
      Tensor e_p = affine(slice(out.offsets, i, i + 1, 1, 2), 1.0, ws);
      Tensor reg = detail::reg_loss_tensor(s_p, e_p, gt, cfg.reg_loss);
      total = add(total, affine(reg, cfg.lambda_reg, 0.0));
    }
  }
  const int nf = std::max(target.n_fake(), 1);
  return affine(total, 1.0 / static_cast<double>(nf), 0.0);
}

// Video-level score: max over per-sequence fake probabilities, so a 0.5
// threshold reproduces the any-sequence-fake rule.
inline double video_score(const std::vector<SequencePrediction>& preds) {
  if (preds.empty()) throw DataError("video_score: no sequence predictions");
  double best = 0.0;
  for (const auto& p : preds) best = std::max(best, p.p_fake);
  return best;
}

}  // namespace mmba
