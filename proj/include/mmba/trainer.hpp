#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mmba/checkpoint.hpp"
#include "mmba/data.hpp"
#include "mmba/errors.hpp"
#include "mmba/metrics.hpp"
#include "mmba/model.hpp"

namespace mmba {

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-3;
  double lr_decay = 0.96;  // per-epoch exponential factor
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 50;
  int patience = 10;  // epochs without validation improvement before stopping
  int threads = 4;
  std::uint64_t seed = 7;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (lr_decay <= 0.0 || lr_decay > 1.0)
      throw ConfigError("lr_decay must lie in (0, 1]");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

inline double lr_schedule(double base, double decay, int epoch) {
  return base * std::pow(decay, epoch);
}

// Bias-corrected Adam over a flat list of parameter matrices.
class AdamOpt {
 public:
  AdamOpt(const std::vector<Mat*>& params, double beta1, double beta2, double eps)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Mat* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }

  void step(const std::vector<Mat*>& params, const std::vector<Mat>& grads,
            double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ShapeError("adam_step: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Mat& p = *params[k];
      const Mat& g = grads[k];
      if (!p.same_shape(g))
        throw ShapeError("adam_step: gradient " + g.shape_str() +
                         " for parameter " + p.shape_str());
      Mat& m = m_[k];
      Mat& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g.data()[i];
        m.data()[i] = beta1_ * m.data()[i] + (1.0 - beta1_) * gi;
        v.data()[i] = beta2_ * v.data()[i] + (1.0 - beta2_) * gi * gi;
        const double mhat = m.data()[i] / bc1;
        const double vhat = v.data()[i] / bc2;
        p.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

inline std::vector<Mat*> parameter_list(ModelWeights<Mat>& w) {
  std::vector<Mat*> out;
  w.visit([&out](Mat& m) { out.push_back(&m); });
  return out;
}

// Video-level scores (max over sequences) for detection metrics.
inline std::vector<ScoredLabel> video_scores(const ModelWeights<Mat>& weights,
                                             const ModelConfig& cfg,
                                             const std::vector<LabeledVideo>& videos) {
  std::vector<ScoredLabel> out;
  out.reserve(videos.size());
  Rng rng(0);  // dropout is off in evaluation mode; draws never happen
  for (const LabeledVideo& lv : videos) {
    Graph g;
    ModelWeights<Tensor> bound = bind(g, weights);
    ModelOutput mo = forward(bound, cfg, lv.features, /*training=*/false, rng);
    out.push_back(ScoredLabel{video_score(predictions_from(mo)), lv.label.fake ? 1 : 0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_auc = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelConfig config;
  ModelWeights<Mat> best_weights;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  std::vector<EpochStats> epochs;
  std::string log;  // csv with header, 6-decimal values
};

namespace detail {

struct WorkerReport {
  std::vector<Mat> grad_sum;
  double loss_sum = 0.0;
  int bad_video = -1;  // dataset index of the first non-finite loss, if any
};

inline std::uint64_t video_stream(std::uint64_t seed, int epoch, int video_index) {
  return mix_seed(mix_seed(mix_seed(seed, 0xB0B), static_cast<std::uint64_t>(epoch)),
                  static_cast<std::uint64_t>(video_index));
}

}  // namespace detail

// Mini-batch Adam training with per-epoch exponential learning-rate decay
// and early stopping on validation video-level AUC. Deterministic for a
// fixed (seed, config, data) triple regardless of thread count: each worker
// owns a fixed slice of the batch and partial gradients are reduced in
// worker order.
inline TrainResult train(const ModelConfig& model_cfg,
                         const std::vector<LabeledVideo>& train_videos,
                         const std::vector<LabeledVideo>& val_videos,
                         const TrainConfig& tc) {
  model_cfg.validate();
  tc.validate();
  if (train_videos.empty() || val_videos.empty())
    throw DataError("train: empty training or validation split");

  Rng init_rng(mix_seed(tc.seed, 0x1717));
  ModelWeights<Mat> weights = init_weights(model_cfg, init_rng);
  std::vector<Mat*> params = parameter_list(weights);
  AdamOpt adam(params, tc.beta1, tc.beta2, tc.adam_eps);

  std::vector<VideoTarget> targets;
  targets.reserve(train_videos.size());
  for (const LabeledVideo& lv : train_videos)
    targets.push_back(make_target(lv.label, lv.features.n(), model_cfg.seq_duration,
                                  model_cfg.seq_stride));

  TrainResult result;
  result.config = model_cfg;
  result.log = "epoch,train_loss,val_auc,lr\n";
  double best_auc = -1.0;
  int since_improve = 0;

  std::vector<int> order(train_videos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const int n_threads =
      std::max(1, std::min<int>(tc.threads, static_cast<int>(train_videos.size())));

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    const double lr = lr_schedule(tc.learning_rate, tc.lr_decay, epoch - 1);

    // Seeded Fisher-Yates shuffle, independent of library implementations.
    Rng shuffle_rng(mix_seed(mix_seed(tc.seed, 0xA11CE), static_cast<std::uint64_t>(epoch)));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);

    double epoch_loss_sum = 0.0;
    for (std::size_t batch_start = 0, batch_no = 0; batch_start < order.size();
         batch_start += static_cast<std::size_t>(tc.batch_size), ++batch_no) {
      const std::size_t batch_end =
          std::min(order.size(), batch_start + static_cast<std::size_t>(tc.batch_size));
      const int batch_n = static_cast<int>(batch_end - batch_start);

      std::vector<detail::WorkerReport> reports(static_cast<std::size_t>(n_threads));
      auto work = [&](int worker) {
        detail::WorkerReport& rep = reports[static_cast<std::size_t>(worker)];
        rep.grad_sum.reserve(params.size());
        for (const Mat* p : params) rep.grad_sum.emplace_back(p->rows(), p->cols());
        for (std::size_t slot = batch_start + static_cast<std::size_t>(worker);
             slot < batch_end; slot += static_cast<std::size_t>(n_threads)) {
          const int vid = order[slot];
          const LabeledVideo& lv = train_videos[static_cast<std::size_t>(vid)];
          Rng video_rng(detail::video_stream(tc.seed, epoch, vid));
          Graph g;
          ModelWeights<Tensor> bound = bind(g, weights);
          ModelOutput mo = forward(bound, model_cfg, lv.features, /*training=*/true,
                                   video_rng);
          Tensor loss = combined_loss(mo, targets[static_cast<std::size_t>(vid)],
                                      model_cfg);
          const double lv_loss = loss.scalar();
          if (!std::isfinite(lv_loss)) {
            if (rep.bad_video < 0) rep.bad_video = vid;
            return;
          }
          rep.loss_sum += lv_loss;
          g.backward(loss);
          std::size_t k = 0;
          bound.visit([&](const Tensor& t) {
            rep.grad_sum[k].axpy(1.0, g.grad(t));
            ++k;
          });
        }
      };
      if (n_threads == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int wkr = 0; wkr < n_threads; ++wkr) pool.emplace_back(work, wkr);
        for (auto& th : pool) th.join();
      }

      for (const auto& rep : reports) {
        if (rep.bad_video >= 0)
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_no) + " (video " +
                             train_videos[static_cast<std::size_t>(rep.bad_video)]
                                 .features.video_id +
                             ")");
      }

      // Deterministic reduction: worker order, then mean over the batch.
      std::vector<Mat> grads;
      grads.reserve(params.size());
      for (const Mat* p : params) grads.emplace_back(p->rows(), p->cols());
      for (const auto& rep : reports) {
        for (std::size_t k = 0; k < grads.size(); ++k)
          grads[k].axpy(1.0, rep.grad_sum[k]);
        epoch_loss_sum += rep.loss_sum;
      }
      const double inv = 1.0 / static_cast<double>(batch_n);
      for (auto& gm : grads)
        for (auto& x : gm) x *= inv;
      adam.step(params, grads, lr);
    }

    const double train_loss = epoch_loss_sum / static_cast<double>(train_videos.size());
    const double val_auc = auc(video_scores(weights, model_cfg, val_videos));

    EpochStats st{epoch, train_loss, val_auc, lr};
    result.epochs.push_back(st);
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f\n", epoch, train_loss,
                  val_auc, lr);
    result.log += line;

    if (val_auc > best_auc) {
      best_auc = val_auc;
      result.best_weights = weights;
      result.best_epoch = epoch;
      result.best_val_auc = val_auc;
      since_improve = 0;
    } else {
      // A tie keeps the patience countdown running but refreshes the
      // snapshot: of equally good epochs the most-trained one wins, which
      // matters when the monitored metric saturates before the heads do.
      if (val_auc == best_auc) {
        result.best_weights = weights;
        result.best_epoch = epoch;
      }
      ++since_improve;
      if (since_improve >= tc.patience) break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridCell {
  double dropout = 0.3;
  Activation act = Activation::Relu;
  double learning_rate = 1e-3;
};

struct GridRow {
  GridCell cell;
  double val_auc = 0.0;
};

struct GridResult {
  std::vector<GridRow> table;
  std::size_t best_index = 0;
};

inline std::vector<GridCell> default_grid(double learning_rate) {
  std::vector<GridCell> cells;
  for (double d : {0.2, 0.3})
    for (Activation a : {Activation::Relu, Activation::Tanh})
      cells.push_back(GridCell{d, a, learning_rate});
  return cells;
}

// Exhaustive evaluation of the space; best cell by validation AUC, ties by
// smaller dropout, then by declaration order.
inline GridResult grid_search(const ModelConfig& base_cfg,
                              const std::vector<LabeledVideo>& train_videos,
                              const std::vector<LabeledVideo>& val_videos,
                              const TrainConfig& base_tc,
                              const std::vector<GridCell>& space) {
  if (space.empty()) throw ConfigError("grid_search: empty space");
  GridResult res;
  for (const GridCell& cell : space) {
    ModelConfig cfg = base_cfg;
    cfg.dropout = cell.dropout;
    cfg.act = cell.act;
    TrainConfig tc = base_tc;
    tc.learning_rate = cell.learning_rate;
    TrainResult tr = train(cfg, train_videos, val_videos, tc);
    res.table.push_back(GridRow{cell, tr.best_val_auc});
  }
  for (std::size_t i = 1; i < res.table.size(); ++i) {
    const GridRow& cand = res.table[i];
    const GridRow& best = res.table[res.best_index];
    if (cand.val_auc > best.val_auc ||
        (cand.val_auc == best.val_auc && cand.cell.dropout < best.cell.dropout))
      res.best_index = i;
  }
  return res;
}

}  // namespace mmba
