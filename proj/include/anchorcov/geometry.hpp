#pragma once

#include <cmath>
#include <stdexcept>

#include "anchorcov/box.hpp"

namespace anchorcov {

// IoU acceptance threshold, strictly inside (0, 1).
struct IouThreshold {
  double t;
  explicit IouThreshold(double value) : t(value) {
    if (!std::isfinite(t) || !(t > 0.0) || !(t < 1.0))
      throw std::invalid_argument("IouThreshold: must satisfy 0 < t < 1");
  }
};

// Spacing of the anchor grid in image pixels.
struct Stride {
  double d;
  explicit Stride(double value) : d(value) {
    if (!std::isfinite(d) || !(d > 0.0))
      throw std::invalid_argument("Stride: must be > 0");
  }
};

// IoU of two concentric squares whose sides differ by the factor alpha >= 1.
// Evaluates to 1/alpha^2.
double aligned_scale_iou(double alpha);

// IoU of a square object of the given side against an equal-sized anchor
// displaced by half a stride in each axis, the largest center offset a grid
// with spacing d can force. Zero once side <= d/2.
double worst_case_displaced_iou(double side, Stride stride);

// Smallest square side whose worst-case displaced IoU still reaches t.
// Closed form: d * ((t+1) + sqrt(2 t (t+1))) / (2 - 2 t).
double min_detectable_size(Stride stride, IouThreshold t);

// Next larger anchor scale such that consecutive scales stay within IoU t
// of each other under concentric placement: scale / sqrt(t).
double next_anchor_scale(double scale, IouThreshold t);

// Brute-force counterpart of worst_case_displaced_iou: minimum IoU over all
// displacements in [0, d/2]^2 sampled at the given step. Used for --verify.
double min_displaced_iou_brute(double side, Stride stride, double step = 0.01);

}  // namespace anchorcov
