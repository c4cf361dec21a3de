#include "anchorcov/geometry.hpp"

#include <algorithm>

namespace anchorcov {

double aligned_scale_iou(double alpha) {
  if (!std::isfinite(alpha) || !(alpha >= 1.0))
    throw std::invalid_argument("aligned_scale_iou: alpha must be >= 1");
  return 1.0 / (alpha * alpha);
}

double worst_case_displaced_iou(double side, Stride stride) {
  if (!std::isfinite(side) || !(side > 0.0))
    throw std::invalid_argument("worst_case_displaced_iou: side must be > 0");
  const double d = stride.d;
  if (side <= 0.5 * d) return 0.0;
  const double e = side - 0.5 * d;
  // Intersection (side - d/2)^2 over union side^2 + d*side - d^2/4.
  return (e * e) / (side * side + d * side - 0.25 * d * d);
}

double min_detectable_size(Stride stride, IouThreshold t) {
  const double tt = t.t;
  return stride.d * ((tt + 1.0) + std::sqrt(2.0 * tt * (tt + 1.0))) / (2.0 - 2.0 * tt);
}

double next_anchor_scale(double scale, IouThreshold t) {
  if (!std::isfinite(scale) || !(scale > 0.0))
    throw std::invalid_argument("next_anchor_scale: scale must be > 0");
  return scale / std::sqrt(t.t);
}

double min_displaced_iou_brute(double side, Stride stride, double step) {
  if (!std::isfinite(side) || !(side > 0.0))
    throw std::invalid_argument("min_displaced_iou_brute: side must be > 0");
  if (!std::isfinite(step) || !(step > 0.0))
    throw std::invalid_argument("min_displaced_iou_brute: step must be > 0");
  const double half = 0.5 * stride.d;
  const long n = std::max(1L, static_cast<long>(std::llround(half / step)));
  const Box ref(0.0, 0.0, side, side);
  double worst = 1.0;
  for (long i = 0; i <= n; ++i) {
    const double dx = half * static_cast<double>(i) / static_cast<double>(n);
    for (long j = 0; j <= n; ++j) {
      const double dy = half * static_cast<double>(j) / static_cast<double>(n);
      worst = std::min(worst, iou(ref, Box(dx, dy, side, side)));
    }
  }
  return worst;
}

}  // namespace anchorcov
