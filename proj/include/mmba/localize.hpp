#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/interval.hpp"
#include "mmba/model.hpp"

namespace mmba {

enum class NmsMode { Hard, Gaussian };

inline NmsMode parse_nms_mode(const std::string& s) {
  if (s == "hard") return NmsMode::Hard;
  if (s == "gaussian") return NmsMode::Gaussian;
  throw ConfigError("unknown NMS mode: " + s);
}

struct NmsConfig {
  NmsMode mode = NmsMode::Gaussian;
  double iou_thresh = 0.5;   // hard mode
  double sigma = 0.5;        // gaussian decay
  double min_score = 0.001;
};

// Maps fake-classified sequences to absolute candidate segments. Window i
// starts at i*stride; offsets are added to that and the result is clipped
// to the video.
inline std::vector<Segment> extract_segments(
    const std::vector<SequencePrediction>& preds, double stride,
    double video_duration, double score_threshold = 0.5) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const SequencePrediction& p = preds[i];
    if (!(p.p_fake > score_threshold)) continue;
    const double ws = static_cast<double>(i) * stride;
    double s = std::clamp(ws + p.start_offset, 0.0, video_duration);
    double e = std::clamp(ws + p.end_offset, 0.0, video_duration);
    e = std::max(e, s);
    out.push_back(Segment{Interval{s, e}, p.p_fake});
  }
  return out;
}

// Classic (soft) non-maximum suppression over 1-D segments. Each round the
// highest-scoring candidate is kept; hard mode drops overlapping rivals at
// IoU >= iou_thresh, gaussian mode decays their scores by exp(-IoU^2/sigma).
// Scores below min_score are dropped from the result.
inline std::vector<Segment> soft_nms(std::vector<Segment> segs, const NmsConfig& cfg) {
  if (cfg.mode == NmsMode::Gaussian && cfg.sigma <= 0.0)
    throw ConfigError("gaussian NMS requires sigma > 0");
  std::vector<Segment> kept;
  kept.reserve(segs.size());
  while (!segs.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].score > segs[best].score) best = i;
    Segment top = segs[best];
    segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(best));
    kept.push_back(top);
    std::vector<Segment> rest;
    rest.reserve(segs.size());
    for (Segment& s : segs) {
      const double v = iou(top.span, s.span);
      if (cfg.mode == NmsMode::Hard) {
        if (v >= cfg.iou_thresh) continue;
      } else {
        s.score *= std::exp(-(v * v) / cfg.sigma);
      }
      rest.push_back(s);
    }
    segs = std::move(rest);
  }
  std::vector<Segment> out;
  out.reserve(kept.size());
  for (const Segment& s : kept)
    if (s.score >= cfg.min_score) out.push_back(s);
  std::stable_sort(out.begin(), out.end(),
                   [](const Segment& a, const Segment& b) { return a.score > b.score; });
  return out;
}

}  // namespace mmba
