#include "anchorcov/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace anchorcov {

AnchorSpec::AnchorSpec(double scale_, double aspect_) : scale(scale_), aspect(aspect_) {
  if (!std::isfinite(scale) || !(scale > 0.0))
    throw std::invalid_argument("AnchorSpec: scale must be > 0");
  if (!std::isfinite(aspect) || !(aspect > 0.0))
    throw std::invalid_argument("AnchorSpec: aspect must be > 0");
}

Box AnchorSpec::box_at(double cx, double cy) const {
  const double w = width();
  const double h = height();
  return Box(cx - 0.5 * w, cy - 0.5 * h, w, h);
}

AnchorSet synthesize_anchor_set(double s_min, double s_max, IouThreshold t,
                                AnchorScheme scheme) {
  if (!std::isfinite(s_min) || !std::isfinite(s_max) || !(s_min >= 1.0) || !(s_min <= s_max))
    throw std::invalid_argument("synthesize_anchor_set: need 1 <= s_min <= s_max");
  double ratio = 0.0;
  switch (scheme) {
    case AnchorScheme::geometric:
      ratio = 1.0 / std::sqrt(t.t);
      break;
    case AnchorScheme::powers_of_two:
      ratio = 2.0;
      break;
    default:
      throw std::invalid_argument(
          "synthesize_anchor_set: scheme must be geometric or powers_of_two");
  }
  AnchorSet set;
  set.scheme = scheme;
  for (int k = 0;; ++k) {
    const double raw = s_min * std::pow(ratio, k);
    const double s = std::floor(raw + 1e-9);
    if (s > s_max) break;
    // Flooring can collapse neighbors for very small s_min; keep the set
    // strictly increasing.
    if (set.scales.empty() || s > set.scales.back()) set.scales.push_back(s);
  }
  return set;
}

AnchorSet preset_anchor_set(const std::string& name) {
  const IouThreshold half(0.5);
  if (name == "A_paper")
    return synthesize_anchor_set(32.0, 256.0, half, AnchorScheme::geometric);
  if (name == "A_prop") {
    AnchorSet set;
    set.scales = {32.0, 45.0, 64.0, 90.0, 128.0, 256.0};
    set.scheme = AnchorScheme::explicit_list;
    return set;
  }
  if (name == "A_ext")
    return synthesize_anchor_set(32.0, 256.0, half, AnchorScheme::powers_of_two);
  if (name == "A_orig")
    return synthesize_anchor_set(128.0, 512.0, half, AnchorScheme::powers_of_two);
  throw std::invalid_argument("preset_anchor_set: unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"A_paper", "A_prop", "A_ext", "A_orig"};
}

const char* to_string(LevelName level) {
  switch (level) {
    case LevelName::conv3: return "conv3";
    case LevelName::conv4: return "conv4";
    case LevelName::conv5: return "conv5";
  }
  return "?";
}

std::optional<LevelName> level_from_string(const std::string& name) {
  if (name == "conv3") return LevelName::conv3;
  if (name == "conv4") return LevelName::conv4;
  if (name == "conv5") return LevelName::conv5;
  return std::nullopt;
}

FeatureLevel LevelMap::assign(double scale) const {
  if (!std::isfinite(scale) || !(scale > 0.0))
    throw std::invalid_argument("LevelMap::assign: scale must be > 0");
  if (scale <= conv3_max) return {LevelName::conv3, strides[0]};
  if (scale < conv5_min) return {LevelName::conv4, strides[1]};
  return {LevelName::conv5, strides[2]};
}

double LevelMap::stride_of(LevelName level) const {
  return strides[static_cast<int>(level)];
}

namespace {

long center_count(double extent, double stride) {
  // Centers (i + 1/2) * stride strictly inside [0, extent).
  if (!(extent > 0.0)) return 0;
  const long n = static_cast<long>(std::ceil(extent / stride - 0.5));
  return std::max(0L, n);
}

// Box clipped to the image; empty optional when nothing remains.
std::optional<Box> clipped(const Box& b, double width, double height) {
  const double x1 = std::max(b.x, 0.0);
  const double y1 = std::max(b.y, 0.0);
  const double x2 = std::min(b.x2(), width);
  const double y2 = std::min(b.y2(), height);
  if (!(x2 > x1) || !(y2 > y1)) return std::nullopt;
  return Box(x1, y1, x2 - x1, y2 - y1);
}

}  // namespace

long AnchorGrid::centers_x() const { return center_count(width, level.stride); }
long AnchorGrid::centers_y() const { return center_count(height, level.stride); }

std::vector<GridAnchor> enumerate_anchors(const AnchorGrid& grid) {
  const long nx = grid.centers_x();
  const long ny = grid.centers_y();
  std::vector<GridAnchor> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, nx * ny)) * grid.specs.size());
  const double d = grid.level.stride;
  for (long j = 0; j < ny; ++j) {
    const double cy = (static_cast<double>(j) + 0.5) * d;
    for (long i = 0; i < nx; ++i) {
      const double cx = (static_cast<double>(i) + 0.5) * d;
      const long center = j * nx + i;
      for (int s = 0; s < static_cast<int>(grid.specs.size()); ++s) {
        Box b = grid.specs[static_cast<std::size_t>(s)].box_at(cx, cy);
        if (grid.clip_to_image) {
          auto c = clipped(b, grid.width, grid.height);
          if (!c) continue;
          b = *c;
        }
        out.push_back(GridAnchor{b, s, center});
      }
    }
  }
  return out;
}

BestAnchor best_grid_iou(const Box& gt, const AnchorGrid& grid) {
  const long nx = grid.centers_x();
  const long ny = grid.centers_y();
  if (nx == 0 || ny == 0 || grid.specs.empty()) return BestAnchor{};

  const double d = grid.level.stride;
  const auto anchor_box = [&](const AnchorSpec& spec, long i, long j) -> std::optional<Box> {
    const Box b = spec.box_at((static_cast<double>(i) + 0.5) * d,
                              (static_cast<double>(j) + 0.5) * d);
    if (!grid.clip_to_image) return b;
    return clipped(b, grid.width, grid.height);
  };

  BestAnchor best;
  const auto consider = [&](double v, const Box& b, long center, int spec) {
    if (v > best.iou ||
        (v == best.iou && best.box &&
         (center < best.center_index ||
          (center == best.center_index && spec < best.spec_index)))) {
      best = BestAnchor{v, b, center, spec};
    }
  };

  for (int s = 0; s < static_cast<int>(grid.specs.size()); ++s) {
    const AnchorSpec& spec = grid.specs[static_cast<std::size_t>(s)];
    // Centers farther than half the summed extents cannot overlap; the +-1
    // margin absorbs rounding at the window edge.
    const double reach_x = 0.5 * (spec.width() + gt.w);
    const double reach_y = 0.5 * (spec.height() + gt.h);
    const long ilo = std::clamp(
        static_cast<long>(std::floor((gt.cx() - reach_x) / d - 0.5)) - 1, 0L, nx - 1);
    const long ihi = std::clamp(
        static_cast<long>(std::ceil((gt.cx() + reach_x) / d - 0.5)) + 1, 0L, nx - 1);
    const long jlo = std::clamp(
        static_cast<long>(std::floor((gt.cy() - reach_y) / d - 0.5)) - 1, 0L, ny - 1);
    const long jhi = std::clamp(
        static_cast<long>(std::ceil((gt.cy() + reach_y) / d - 0.5)) + 1, 0L, ny - 1);
    for (long j = jlo; j <= jhi; ++j) {
      for (long i = ilo; i <= ihi; ++i) {
        const auto b = anchor_box(spec, i, j);
        if (!b) continue;
        consider(iou(gt, *b), *b, j * nx + i, s);
      }
    }
  }

  if (!(best.iou > 0.0)) {
    // Every anchor ties at zero; exhaustive search would return the first
    // one in enumeration order.
    for (long j = 0; j < ny && !best.box; ++j)
      for (long i = 0; i < nx && !best.box; ++i)
        for (int s = 0; s < static_cast<int>(grid.specs.size()); ++s) {
          const auto b = anchor_box(grid.specs[static_cast<std::size_t>(s)], i, j);
          if (b) {
            best = BestAnchor{0.0, *b, j * nx + i, s};
            break;
          }
        }
  }
  return best;
}

double best_ideal_iou(const Box& gt, const AnchorSpec& spec) {
  return concentric_iou(gt.w, gt.h, spec.width(), spec.height());
}

}  // namespace anchorcov
