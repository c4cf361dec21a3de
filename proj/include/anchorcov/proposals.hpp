#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorcov/anchors.hpp"
#include "anchorcov/box.hpp"

namespace anchorcov {

struct ScoredBox {
  Box box{0, 0, 1, 1};
  double score = 0.0;
  std::optional<LevelName> level;
};

struct ProposalSet {
  std::string image_id;
  std::vector<ScoredBox> items;
};

// Greedy suppression under a total order: score descending, ties by larger
// area, then input position. A survivor removes everything overlapping it at
// IoU >= threshold. Output keeps the sorted order.
std::vector<ScoredBox> nms(std::vector<ScoredBox> items, double threshold);

// Per-level NMS, concatenation in level order, then a second NMS across
// levels (same threshold unless merge_threshold overrides it), truncated to
// the top_n best scores.
std::vector<ScoredBox> hierarchical_merge(
    const std::map<LevelName, std::vector<ScoredBox>>& per_level, double threshold,
    std::size_t top_n = 2000, std::optional<double> merge_threshold = std::nullopt);

}  // namespace anchorcov
