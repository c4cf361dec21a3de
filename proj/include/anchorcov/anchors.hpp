#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "anchorcov/box.hpp"
#include "anchorcov/geometry.hpp"

namespace anchorcov {

// One anchor shape: scale is the side of the equivalent square, aspect is
// w/h. Realized width/height preserve the area scale^2.
struct AnchorSpec {
  double scale;
  double aspect;

  AnchorSpec(double scale_, double aspect_);
  double width() const { return scale * std::sqrt(aspect); }
  double height() const { return scale / std::sqrt(aspect); }
  Box box_at(double cx, double cy) const;
};

enum class AnchorScheme { geometric, powers_of_two, explicit_list };

struct AnchorSet {
  std::vector<double> scales;  // strictly increasing, all >= 1
  std::vector<double> aspects{0.5, 1.0, 2.0};
  AnchorScheme scheme = AnchorScheme::explicit_list;
};

// Generates scales from s_min up to s_max. The geometric scheme steps by
// t^(-1/2) so consecutive scales stay within IoU t of each other before
// rounding; every value is floored (with 1e-9 slack against fp noise).
AnchorSet synthesize_anchor_set(double s_min, double s_max, IouThreshold t,
                                AnchorScheme scheme);

// Named sets used throughout the reports: A_paper, A_prop, A_ext, A_orig.
AnchorSet preset_anchor_set(const std::string& name);
std::vector<std::string> preset_names();

enum class LevelName { conv3, conv4, conv5 };
const char* to_string(LevelName level);
std::optional<LevelName> level_from_string(const std::string& name);

struct FeatureLevel {
  LevelName name;
  double stride;
};

// Scale-to-feature-level rule. First match wins: scale <= conv3_max goes to
// conv3, scale < conv5_min to conv4, everything else to conv5.
struct LevelMap {
  double conv3_max = 45.0;
  double conv5_min = 90.0;
  std::array<double, 3> strides{4.0, 8.0, 16.0};  // conv3, conv4, conv5

  FeatureLevel assign(double scale) const;
  double stride_of(LevelName level) const;
};

inline FeatureLevel assign_level(double scale, const LevelMap& map = {}) {
  return map.assign(scale);
}

// A regular anchor placement over an image extent: every spec is stamped at
// every center ((i+1/2)d, (j+1/2)d) that falls inside the extent. Anchors may
// overhang the image unless clip_to_image is set.
struct AnchorGrid {
  double width = 0.0;
  double height = 0.0;
  FeatureLevel level{LevelName::conv5, 16.0};
  std::vector<AnchorSpec> specs;
  bool clip_to_image = false;

  long centers_x() const;
  long centers_y() const;
};

struct GridAnchor {
  Box box;
  int spec_index;
  long center_index;  // row-major over centers
};

// Row-major center order, specs in declared order within each center.
// With clip_to_image, boxes are intersected with the image and empty
// results are dropped.
std::vector<GridAnchor> enumerate_anchors(const AnchorGrid& grid);

struct BestAnchor {
  double iou = 0.0;
  std::optional<Box> box;  // empty only when the grid has no anchors
  long center_index = -1;
  int spec_index = -1;
};

// Highest-IoU anchor for one groundtruth box. Ties resolve to the smallest
// center index, then the earliest spec. Prunes to centers that can overlap;
// exact because everything farther has IoU zero.
BestAnchor best_grid_iou(const Box& gt, const AnchorGrid& grid);

// Upper bound with the placement constraint removed: the anchor shape
// centered on the groundtruth box.
double best_ideal_iou(const Box& gt, const AnchorSpec& spec);

}  // namespace anchorcov
