#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/interval.hpp"

namespace mmba {

// ---------------------------------------------------------------------------
// Detection metrics over (score, label) pairs
// ---------------------------------------------------------------------------

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 1 = fake
};

struct RocPoint {
  double fpr = 0.0, tpr = 0.0, threshold = 0.0;
};

namespace detail {

inline void count_classes(const std::vector<ScoredLabel>& set, int& pos, int& neg) {
  pos = neg = 0;
  for (const auto& s : set) {
    if (!std::isfinite(s.score)) throw MetricError("non-finite score");
    (s.label ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0)
    throw MetricError("ROC metrics need both classes, got " + std::to_string(pos) +
                      " positive / " + std::to_string(neg) + " negative");
}

}  // namespace detail

// One point per distinct score (score >= threshold counts as positive),
// preceded by the all-negative point. FPR is nondecreasing along the curve.
inline std::vector<RocPoint> roc_curve(const std::vector<ScoredLabel>& set) {
  int pos = 0, neg = 0;
  detail::count_classes(set, pos, neg);
  std::vector<ScoredLabel> sorted = set;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  std::vector<RocPoint> curve;
  curve.push_back(RocPoint{0.0, 0.0, std::numeric_limits<double>::infinity()});
  int tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double thr = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == thr) {
      (sorted[i].label ? tp : fp) += 1;
      ++i;
    }
    curve.push_back(RocPoint{static_cast<double>(fp) / neg,
                             static_cast<double>(tp) / pos, thr});
  }
  return curve;
}

inline double auc(const std::vector<ScoredLabel>& set) {
  const auto curve = roc_curve(set);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].fpr - curve[i - 1].fpr) * 0.5 *
            (curve[i].tpr + curve[i - 1].tpr);
  return area;
}

// Area for fpr in [0, fpr_max], linearly interpolated at the cut point and
// normalized into [0, 1].
inline double pauc(const std::vector<ScoredLabel>& set, double fpr_max = 0.1) {
  if (fpr_max <= 0.0 || fpr_max > 1.0)
    throw MetricError("pauc: fpr_max must lie in (0, 1]");
  const auto curve = roc_curve(set);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    double f0 = curve[i - 1].fpr, t0 = curve[i - 1].tpr;
    double f1 = curve[i].fpr, t1 = curve[i].tpr;
    if (f0 >= fpr_max) break;
    if (f1 > fpr_max) {
      // Cut the segment at fpr_max.
      const double s = (fpr_max - f0) / (f1 - f0);
      f1 = fpr_max;
      t1 = t0 + s * (t1 - t0);
    }
    area += (f1 - f0) * 0.5 * (t1 + t0);
    if (f1 >= fpr_max) break;
  }
  return area / fpr_max;
}

// Equal error rate: the FPR where FPR = 1 - TPR, linearly interpolated
// between the bracketing ROC points.
inline double eer(const std::vector<ScoredLabel>& set) {
  const auto curve = roc_curve(set);
  double prev_diff = curve.front().fpr - (1.0 - curve.front().tpr);
  if (prev_diff == 0.0) return curve.front().fpr;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double diff = curve[i].fpr - (1.0 - curve[i].tpr);
    if (diff == 0.0) return curve[i].fpr;
    if ((prev_diff < 0.0) != (diff < 0.0)) {
      const double f0 = curve[i - 1].fpr, t0 = curve[i - 1].tpr;
      const double f1 = curve[i].fpr, t1 = curve[i].tpr;
      const double df = f1 - f0, dt = t1 - t0;
      // Solve f0 + s*df = 1 - (t0 + s*dt).
      const double s = (1.0 - t0 - f0) / (df + dt);
      return f0 + s * df;
    }
    prev_diff = diff;
  }
  // The curve ends at (1,1) where diff = 1 - 0 >= 0, so a crossing always
  // exists; reaching here means diff was positive throughout.
  return curve.front().fpr;
}

struct BinaryCounts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double acc() const {
    const int total = tp + fp + tn + fn;
    return total ? static_cast<double>(tp + tn) / total : 0.0;
  }
  double tpr() const { return (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  double fpr() const { return (fp + tn) ? static_cast<double>(fp) / (fp + tn) : 0.0; }
};

// Threshold at 0.5, strictly greater counts as fake.
inline BinaryCounts classify_at_half(const std::vector<ScoredLabel>& set) {
  BinaryCounts c;
  for (const auto& s : set) {
    const bool pred_fake = s.score > 0.5;
    if (s.label) {
      (pred_fake ? c.tp : c.fn) += 1;
    } else {
      (pred_fake ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Localization metrics
// ---------------------------------------------------------------------------

struct VideoLocalization {
  std::vector<Segment> preds;
  std::vector<Interval> gt;
};

using LocalizationSet = std::vector<VideoLocalization>;

namespace detail {

inline std::size_t total_gt(const LocalizationSet& loc) {
  std::size_t n = 0;
  for (const auto& v : loc) n += v.gt.size();
  return n;
}

// Greedy matcher: predictions in score order claim the unmatched same-video
// ground truth with the highest IoU >= t (earliest on equal IoU).
struct PooledPred {
  double score;
  std::size_t video;
  std::size_t index;
};

inline std::vector<PooledPred> pooled_by_score(const LocalizationSet& loc) {
  std::vector<PooledPred> pool;
  for (std::size_t v = 0; v < loc.size(); ++v)
    for (std::size_t i = 0; i < loc[v].preds.size(); ++i)
      pool.push_back(PooledPred{loc[v].preds[i].score, v, i});
  std::stable_sort(pool.begin(), pool.end(),
                   [](const PooledPred& a, const PooledPred& b) {
                     return a.score > b.score;
                   });
  return pool;
}

}  // namespace detail

// Average precision at IoU threshold t with all-point interpolation
// (precision envelope).
inline double ap_at_iou(const LocalizationSet& loc, double t) {
  if (t <= 0.0 || t > 1.0) throw MetricError("ap_at_iou: threshold must be in (0,1]");
  const std::size_t n_gt = detail::total_gt(loc);
  if (n_gt == 0) throw MetricError("ap_at_iou: no ground-truth segments");
  const auto pool = detail::pooled_by_score(loc);
  if (pool.empty()) return 0.0;

  std::vector<std::vector<bool>> used(loc.size());
  for (std::size_t v = 0; v < loc.size(); ++v) used[v].assign(loc[v].gt.size(), false);

  std::vector<int> is_tp;
  is_tp.reserve(pool.size());
  for (const auto& p : pool) {
    const auto& video = loc[p.video];
    const Segment& seg = video.preds[p.index];
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t gti = 0; gti < video.gt.size(); ++gti) {
      if (used[p.video][gti]) continue;
      const double v = iou(seg.span, video.gt[gti]);
      if (v >= t && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(gti);
      }
    }
    if (best >= 0) {
      used[p.video][static_cast<std::size_t>(best)] = true;
      is_tp.push_back(1);
    } else {
      is_tp.push_back(0);
    }
  }

  // Precision envelope over the ranked list.
  std::vector<double> precision(is_tp.size()), recall(is_tp.size());
  int tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    tp += is_tp[i];
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    if (is_tp[i]) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

// Average recall with the top-k predictions per video, averaged over the
// IoU grid 0.5:0.05:0.95, then over videos that have ground truth.
inline double ar_at_k(const LocalizationSet& loc, int k) {
  if (k < 1) throw MetricError("ar_at_k: k must be >= 1");
  if (detail::total_gt(loc) == 0) throw MetricError("ar_at_k: no ground-truth segments");
  double sum_videos = 0.0;
  std::size_t n_videos = 0;
  for (const auto& video : loc) {
    if (video.gt.empty()) continue;
    ++n_videos;
    std::vector<Segment> top = video.preds;
    std::stable_sort(top.begin(), top.end(),
                     [](const Segment& a, const Segment& b) { return a.score > b.score; });
    if (static_cast<int>(top.size()) > k) top.resize(static_cast<std::size_t>(k));
    double sum_thresholds = 0.0;
    for (int step = 0; step < 10; ++step) {
      const double t = (50 + 5 * step) / 100.0;
      std::vector<bool> used(video.gt.size(), false);
      int matched = 0;
      for (const Segment& seg : top) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t gti = 0; gti < video.gt.size(); ++gti) {
          if (used[gti]) continue;
          const double v = iou(seg.span, video.gt[gti]);
          if (v >= t && v > best_iou) {
            best_iou = v;
            best = static_cast<int>(gti);
          }
        }
        if (best >= 0) {
          used[static_cast<std::size_t>(best)] = true;
          ++matched;
        }
      }
      sum_thresholds += static_cast<double>(matched) / static_cast<double>(video.gt.size());
    }
    sum_videos += sum_thresholds / 10.0;
  }
  return sum_videos / static_cast<double>(n_videos);
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

// Ordered "name = value" lines with 4-decimal fixed formatting.
inline std::string format_metrics_report(
    const std::vector<std::pair<std::string, double>>& entries) {
  std::string out;
  char buf[64];
  for (const auto& [name, value] : entries) {
    std::snprintf(buf, sizeof(buf), "%s = %.4f\n", name.c_str(), value);
    out += buf;
  }
  return out;
}

}  // namespace mmba
