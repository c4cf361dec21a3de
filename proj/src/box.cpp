#include "anchorcov/box.hpp"

#include <algorithm>

namespace anchorcov {

double intersection_area(const Box& a, const Box& b) {
  const double ox = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double oy = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (ox <= 0.0 || oy <= 0.0) return 0.0;
  return ox * oy;
}

double iou(const Box& a, const Box& b) {
  // Corner arithmetic puts coinciding boxes a few ulp off exact 1; the
  // contract (1 iff equal) matters to perfect-proposal evaluation.
  if (a == b) return 1.0;
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

double concentric_iou(double wa, double ha, double wb, double hb) {
  if (!(wa > 0.0) || !(ha > 0.0) || !(wb > 0.0) || !(hb > 0.0))
    throw std::invalid_argument("concentric_iou: sides must be > 0");
  const double inter = std::min(wa, wb) * std::min(ha, hb);
  return inter / (wa * ha + wb * hb - inter);
}

}  // namespace anchorcov
