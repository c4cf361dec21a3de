#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorcov/anchors.hpp"
#include "anchorcov/dataset.hpp"

namespace anchorcov {

enum class AnchorLabel : std::uint8_t { negative = 0, positive = 1 };

// Training-style labels: an anchor is positive iff it reaches IoU >= t with
// at least one groundtruth box. Order matches enumerate_anchors.
std::vector<AnchorLabel> label_anchors(const AnchorGrid& grid,
                                       const std::vector<GroundtruthObject>& gts,
                                       IouThreshold t);

struct ClassStats {
  double abo = 0.0;  // mean best overlap across the class's groundtruth
  std::size_t n_gt = 0;
};

struct PerGtResult {
  std::string image_id;
  std::string class_name;
  Box gt{0, 0, 1, 1};
  double best_iou = 0.0;
  std::optional<Box> best_box;
};

// MABO is the unweighted mean of per-class ABO over classes that actually
// occur; recall counts groundtruth covered at IoU >= threshold.
struct CoverageReport {
  double mabo = 0.0;
  double recall = 0.0;
  double threshold = 0.5;
  std::map<std::string, ClassStats> per_class;
  std::vector<PerGtResult> per_gt;  // images in sorted-id order
};

// Scores a fixed per-image proposal list against the dataset. Every key of
// `proposals` must name an image in the dataset.
CoverageReport evaluate_boxes(const Dataset& ds,
                              const std::map<std::string, std::vector<Box>>& proposals,
                              IouThreshold t, int threads = 0);

// Anchor placement for grid evaluation: either one uniform stride for the
// whole set, or per-level strides with scales routed through the level map.
struct GridPlacement {
  std::optional<Stride> flat_stride;
  LevelMap levels;
  bool clip_to_image = false;
};

// Scores the full anchor grid itself, i.e. the coverage an RPN could reach
// before any learning. Equivalent to evaluate_boxes on the enumerated
// anchors, but searches each groundtruth's neighborhood instead of
// materializing the grid.
CoverageReport evaluate_grid(const Dataset& ds, const AnchorSet& set,
                             const GridPlacement& placement, IouThreshold t,
                             int threads = 0);

struct SweepPoint {
  double object_size;
  double metric;
};

struct SweepCurve {
  double anchor_scale;
  std::vector<SweepPoint> points;
};

enum class SweepMode { grid, ideal };

// One curve per anchor scale: MABO of each size variant when only that scale
// is available. Grid mode places the scale at its assigned level's stride;
// ideal mode removes the placement constraint entirely.
std::vector<SweepCurve> size_sweep(const std::map<double, Dataset>& variants,
                                   const AnchorSet& set, SweepMode mode,
                                   const LevelMap& levels = {},
                                   IouThreshold t = IouThreshold(0.5),
                                   int threads = 0);

}  // namespace anchorcov
