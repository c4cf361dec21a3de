#pragma once

#include <cmath>
#include <stdexcept>

namespace anchorcov {

// Axis-aligned rectangle in real-valued pixel coordinates. (x, y) is the
// top-left corner, y grows downward. Width and height must stay > 0.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  Box() = default;
  Box(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
      throw std::invalid_argument("Box: coordinates must be finite");
    if (!(w > 0.0) || !(h > 0.0))
      throw std::invalid_argument("Box: width and height must be > 0");
  }

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  // Side of the square with the same area.
  double side() const { return std::sqrt(w * h); }
  double aspect() const { return w / h; }

  bool operator==(const Box&) const = default;
};

double intersection_area(const Box& a, const Box& b);

// Zero for disjoint or merely edge-touching boxes, 1 iff the boxes coincide.
double iou(const Box& a, const Box& b);

// IoU of two box shapes placed on a common center point.
double concentric_iou(double wa, double ha, double wb, double hb);

}  // namespace anchorcov
