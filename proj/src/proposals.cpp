#include "anchorcov/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace anchorcov {

std::vector<ScoredBox> nms(std::vector<ScoredBox> items, double threshold) {
  if (!std::isfinite(threshold) || !(threshold > 0.0) || !(threshold <= 1.0))
    throw std::invalid_argument("nms: threshold must be in (0, 1]");
  for (const auto& it : items)
    if (!std::isfinite(it.score))
      throw std::invalid_argument("nms: scores must be finite");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (items[a].score != items[b].score) return items[a].score > items[b].score;
    const double aa = items[a].box.area();
    const double ab = items[b].box.area();
    if (aa != ab) return aa > ab;
    return a < b;
  });

  std::vector<char> removed(items.size(), 0);
  std::vector<ScoredBox> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (removed[a]) continue;
    kept.push_back(items[a]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t b = order[j];
      if (!removed[b] && iou(items[a].box, items[b].box) >= threshold) removed[b] = 1;
    }
  }
  return kept;
}

std::vector<ScoredBox> hierarchical_merge(
    const std::map<LevelName, std::vector<ScoredBox>>& per_level, double threshold,
    std::size_t top_n, std::optional<double> merge_threshold) {
  if (top_n == 0) throw std::invalid_argument("hierarchical_merge: top_n must be >= 1");
  std::vector<ScoredBox> merged;
  for (const auto& [level, boxes] : per_level) {
    (void)level;
    auto kept = nms(boxes, threshold);
    merged.insert(merged.end(), kept.begin(), kept.end());
  }
  auto out = nms(std::move(merged), merge_threshold.value_or(threshold));
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

}  // namespace anchorcov
