#pragma once

#include <algorithm>
#include <string>

#include "mmba/errors.hpp"

namespace mmba {

// Closed time interval [start, end] in seconds. Degenerate (start == end)
// intervals are allowed and have zero length.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool valid() const { return end >= start; }
};

inline double intersection_length(const Interval& a, const Interval& b) {
  return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

inline double union_length(const Interval& a, const Interval& b) {
  return a.length() + b.length() - intersection_length(a, b);
}

// Temporal IoU. A pair with zero union (two degenerate intervals) scores 0.
inline double iou(const Interval& a, const Interval& b) {
  const double u = union_length(a, b);
  if (u <= 0.0) return 0.0;
  return intersection_length(a, b) / u;
}

// Smallest interval enclosing both.
inline Interval hull(const Interval& a, const Interval& b) {
  return Interval{std::min(a.start, b.start), std::max(a.end, b.end)};
}

// A scored interval, as produced by localization.
struct Segment {
  Interval span;
  double score = 0.0;
};

}  // namespace mmba
