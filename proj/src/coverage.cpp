#include "anchorcov/coverage.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include "anchorcov/parallel.hpp"

namespace anchorcov {

std::vector<AnchorLabel> label_anchors(const AnchorGrid& grid,
                                       const std::vector<GroundtruthObject>& gts,
                                       IouThreshold t) {
  const auto anchors = enumerate_anchors(grid);
  std::vector<AnchorLabel> labels(anchors.size(), AnchorLabel::negative);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (const auto& gt : gts) {
      if (iou(anchors[i].box, gt.box) >= t.t) {
        labels[i] = AnchorLabel::positive;
        break;
      }
    }
  }
  return labels;
}

namespace {

// Shared aggregation: eval_image produces the per-groundtruth results for
// one image; images are processed in sorted-id order so per-class sums do
// not depend on dataset order or thread count.
CoverageReport aggregate(
    const Dataset& ds, IouThreshold t,
    const std::function<std::vector<PerGtResult>(const ImageAnnotation&)>& eval_image,
    int threads) {
  std::vector<std::size_t> order(ds.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.images[a].id < ds.images[b].id;
  });

  std::vector<std::vector<PerGtResult>> partial(order.size());
  parallel_for_index(order.size(), threads, [&](std::size_t k) {
    partial[k] = eval_image(ds.images[order[k]]);
  });

  CoverageReport report;
  report.threshold = t.t;
  struct Accum {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Accum> per_class;
  std::size_t hits = 0;
  std::size_t total = 0;
  for (auto& results : partial) {
    for (auto& r : results) {
      auto& acc = per_class[r.class_name];
      acc.sum += r.best_iou;
      acc.n += 1;
      total += 1;
      if (r.best_iou >= t.t) hits += 1;
      report.per_gt.push_back(std::move(r));
    }
  }
  double mabo_sum = 0.0;
  for (const auto& [name, acc] : per_class) {
    report.per_class[name] = ClassStats{acc.sum / static_cast<double>(acc.n), acc.n};
    mabo_sum += report.per_class[name].abo;
  }
  report.mabo =
      per_class.empty() ? 0.0 : mabo_sum / static_cast<double>(per_class.size());
  report.recall = total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  return report;
}

}  // namespace

CoverageReport evaluate_boxes(const Dataset& ds,
                              const std::map<std::string, std::vector<Box>>& proposals,
                              IouThreshold t, int threads) {
  std::set<std::string> known;
  for (const auto& img : ds.images) known.insert(img.id);
  for (const auto& [id, boxes] : proposals) {
    (void)boxes;
    if (!known.count(id))
      throw std::invalid_argument("proposals reference unknown image id '" + id + "'");
  }

  const auto eval_image = [&](const ImageAnnotation& img) {
    static const std::vector<Box> kNone;
    const auto it = proposals.find(img.id);
    const std::vector<Box>& cand = it == proposals.end() ? kNone : it->second;
    std::vector<PerGtResult> results;
    results.reserve(img.objects.size());
    for (const auto& obj : img.objects) {
      PerGtResult r{img.id, obj.class_name, obj.box, 0.0, std::nullopt};
      for (const Box& p : cand) {
        const double v = iou(obj.box, p);
        if (v > r.best_iou || !r.best_box) {
          r.best_iou = v;
          r.best_box = p;
        }
      }
      results.push_back(std::move(r));
    }
    return results;
  };
  return aggregate(ds, t, eval_image, threads);
}

namespace {

// Grids the placement induces for one image extent, in level order.
std::vector<AnchorGrid> build_grids(double width, double height, const AnchorSet& set,
                                    const GridPlacement& placement) {
  std::vector<AnchorGrid> grids;
  if (placement.flat_stride) {
    AnchorGrid g;
    g.width = width;
    g.height = height;
    g.level = FeatureLevel{LevelName::conv5, placement.flat_stride->d};
    g.clip_to_image = placement.clip_to_image;
    for (double s : set.scales)
      for (double a : set.aspects) g.specs.emplace_back(s, a);
    grids.push_back(std::move(g));
    return grids;
  }
  for (LevelName name : {LevelName::conv3, LevelName::conv4, LevelName::conv5}) {
    AnchorGrid g;
    g.width = width;
    g.height = height;
    g.level = FeatureLevel{name, placement.levels.stride_of(name)};
    g.clip_to_image = placement.clip_to_image;
    for (double s : set.scales) {
      if (placement.levels.assign(s).name != name) continue;
      for (double a : set.aspects) g.specs.emplace_back(s, a);
    }
    if (!g.specs.empty()) grids.push_back(std::move(g));
  }
  return grids;
}

// Best anchor across several grids, matching what evaluate_boxes would do on
// the concatenated enumeration: strictly better wins, and the first grid's
// zero-overlap fallback is kept over later ones.
BestAnchor best_over_grids(const Box& gt, const std::vector<AnchorGrid>& grids) {
  BestAnchor best;
  for (const auto& grid : grids) {
    BestAnchor b = best_grid_iou(gt, grid);
    if (!b.box) continue;
    if (b.iou > best.iou || !best.box) best = b;
  }
  return best;
}

}  // namespace

CoverageReport evaluate_grid(const Dataset& ds, const AnchorSet& set,
                             const GridPlacement& placement, IouThreshold t,
                             int threads) {
  if (set.scales.empty())
    throw std::invalid_argument("evaluate_grid: anchor set has no scales");
  if (set.aspects.empty())
    throw std::invalid_argument("evaluate_grid: anchor set has no aspects");
  const auto eval_image = [&](const ImageAnnotation& img) {
    const auto grids = build_grids(img.width, img.height, set, placement);
    std::vector<PerGtResult> results;
    results.reserve(img.objects.size());
    for (const auto& obj : img.objects) {
      const BestAnchor best = best_over_grids(obj.box, grids);
      results.push_back(
          PerGtResult{img.id, obj.class_name, obj.box, best.iou, best.box});
    }
    return results;
  };
  return aggregate(ds, t, eval_image, threads);
}

std::vector<SweepCurve> size_sweep(const std::map<double, Dataset>& variants,
                                   const AnchorSet& set, SweepMode mode,
                                   const LevelMap& levels, IouThreshold t,
                                   int threads) {
  if (variants.empty())
    throw std::invalid_argument("size_sweep: need at least one size variant");
  if (set.scales.empty() || set.aspects.empty())
    throw std::invalid_argument("size_sweep: anchor set must have scales and aspects");

  std::vector<SweepCurve> curves;
  curves.reserve(set.scales.size());
  for (double scale : set.scales) {
    SweepCurve curve{scale, {}};
    AnchorSet single;
    single.scales = {scale};
    single.aspects = set.aspects;
    for (const auto& [size, ds] : variants) {
      double metric = 0.0;
      if (mode == SweepMode::grid) {
        GridPlacement placement;
        placement.levels = levels;
        metric = evaluate_grid(ds, single, placement, t, threads).mabo;
      } else {
        const auto eval_image = [&](const ImageAnnotation& img) {
          std::vector<PerGtResult> results;
          results.reserve(img.objects.size());
          for (const auto& obj : img.objects) {
            PerGtResult r{img.id, obj.class_name, obj.box, 0.0, std::nullopt};
            for (double a : set.aspects) {
              const AnchorSpec spec(scale, a);
              const double v = best_ideal_iou(obj.box, spec);
              if (v > r.best_iou || !r.best_box) {
                r.best_iou = v;
                r.best_box = spec.box_at(obj.box.cx(), obj.box.cy());
              }
            }
            results.push_back(std::move(r));
          }
          return results;
        };
        metric = aggregate(ds, t, eval_image, threads).mabo;
      }
      curve.points.push_back(SweepPoint{size, metric});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace anchorcov
