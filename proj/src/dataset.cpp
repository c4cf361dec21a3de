#include "anchorcov/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "anchorcov/numfmt.hpp"
#include "anchorcov/parallel.hpp"

namespace anchorcov {

namespace {

// Serialized coordinates are quantized to 1e-6; allow that much slop when
// checking containment so written files re-validate.
constexpr double kBoundsEps = 1e-5;

}  // namespace

void validate_image(const ImageAnnotation& img) {
  if (img.id.empty()) throw std::invalid_argument("image id must be non-empty");
  if (!std::isfinite(img.width) || !std::isfinite(img.height) ||
      !(img.width > 0.0) || !(img.height > 0.0))
    throw std::invalid_argument("image '" + img.id + "': extent must be > 0");
  for (const auto& obj : img.objects) {
    if (obj.class_name.empty())
      throw std::invalid_argument("image '" + img.id + "': class name must be non-empty");
    const Box& b = obj.box;
    if (b.x < -kBoundsEps || b.y < -kBoundsEps || b.x2() > img.width + kBoundsEps ||
        b.y2() > img.height + kBoundsEps)
      throw std::invalid_argument("image '" + img.id + "': object box exceeds image extent");
  }
  if (img.provenance) {
    if (img.provenance->source_id.empty())
      throw std::invalid_argument("image '" + img.id + "': provenance source_id must be non-empty");
    if (!std::isfinite(img.provenance->scale) || !(img.provenance->scale > 0.0))
      throw std::invalid_argument("image '" + img.id + "': provenance scale must be > 0");
  }
}

void validate_dataset(const Dataset& ds) {
  std::set<std::string> ids;
  for (const auto& img : ds.images) {
    validate_image(img);
    if (!ids.insert(img.id).second)
      throw std::invalid_argument("duplicate image id '" + img.id + "'");
  }
}

namespace {

// Shortest connecting segment between two boxes along one axis: gap length
// (zero when the intervals overlap) and the coordinate of its midpoint. When
// intervals overlap the shortest segment is axis-aligned and ambiguous; the
// midpoint of the overlap picks the one through the rectangle-gap center.
void axis_gap(double a1, double a2, double b1, double b2, double& gap, double& mid) {
  if (a2 < b1) {
    gap = b1 - a2;
    mid = 0.5 * (a2 + b1);
  } else if (b2 < a1) {
    gap = a1 - b2;
    mid = 0.5 * (b2 + a1);
  } else {
    gap = 0.0;
    mid = 0.5 * (std::max(a1, b1) + std::min(a2, b2));
  }
}

struct PairCandidate {
  double dist;
  int i, j;  // original object indices, i < j
  double px, py;
};

struct PartitionRun {
  const ImageAnnotation& src;
  PartitionStats* stats;
  std::vector<ImageAnnotation> out;
  int emitted = 0;

  void emit(const Box& region, const std::vector<int>& members) {
    ImageAnnotation img;
    img.id = src.id + "#" + std::to_string(emitted++);
    img.width = region.w;
    img.height = region.h;
    for (int m : members) {
      const auto& obj = src.objects[static_cast<std::size_t>(m)];
      img.objects.push_back(GroundtruthObject{
          obj.class_name,
          Box(obj.box.x - region.x, obj.box.y - region.y, obj.box.w, obj.box.h)});
    }
    if (src.provenance) {
      const Provenance& p = *src.provenance;
      img.provenance = Provenance{
          p.source_id,
          Box(p.crop.x + region.x / p.scale, p.crop.y + region.y / p.scale,
              region.w / p.scale, region.h / p.scale),
          p.scale};
    } else {
      img.provenance = Provenance{src.id, region, 1.0};
    }
    out.push_back(std::move(img));
  }

  void recurse(const Box& region, const std::vector<int>& members) {
    if (members.size() == 1) {
      emit(region, members);
      return;
    }

    std::vector<PairCandidate> candidates;
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Box& ba = src.objects[static_cast<std::size_t>(members[a])].box;
        const Box& bb = src.objects[static_cast<std::size_t>(members[b])].box;
        if (intersection_area(ba, bb) > 0.0) continue;
        double gx, mx, gy, my;
        axis_gap(ba.x, ba.x2(), bb.x, bb.x2(), gx, mx);
        axis_gap(ba.y, ba.y2(), bb.y, bb.y2(), gy, my);
        candidates.push_back(
            PairCandidate{std::hypot(gx, gy), members[a], members[b], mx, my});
      }
    }
    if (candidates.empty()) {
      if (stats) stats->regions_no_pair++;
      return;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const PairCandidate& a, const PairCandidate& b) {
                if (a.dist != b.dist) return a.dist > b.dist;
                if (a.i != b.i) return a.i < b.i;
                return a.j < b.j;
              });

    const PairCandidate* chosen = nullptr;
    for (const auto& cand : candidates) {
      bool ok = true;
      for (int m : members) {
        const Box& b = src.objects[static_cast<std::size_t>(m)].box;
        const bool clear_v = b.x2() < cand.px || b.x > cand.px;
        const bool clear_h = b.y2() < cand.py || b.y > cand.py;
        if (!clear_v || !clear_h) {
          ok = false;
          break;
        }
      }
      if (ok) {
        chosen = &cand;
        break;
      }
    }
    if (!chosen) {
      if (stats) stats->regions_no_valid_axes++;
      return;
    }
    if (stats)
      stats->splits.push_back(SplitRecord{src.id, chosen->px, chosen->py, region});

    // Both axes clear every box, so each member falls wholly inside one of
    // the four sub-rectangles.
    std::vector<int> q[4];
    for (int m : members) {
      const Box& b = src.objects[static_cast<std::size_t>(m)].box;
      const int right = b.x > chosen->px ? 1 : 0;
      const int below = b.y > chosen->py ? 1 : 0;
      q[below * 2 + right].push_back(m);
    }
    const Box rects[4] = {
        Box(region.x, region.y, chosen->px - region.x, chosen->py - region.y),
        Box(chosen->px, region.y, region.x2() - chosen->px, chosen->py - region.y),
        Box(region.x, chosen->py, chosen->px - region.x, region.y2() - chosen->py),
        Box(chosen->px, chosen->py, region.x2() - chosen->px, region.y2() - chosen->py)};
    for (int k = 0; k < 4; ++k) {
      if (!q[k].empty()) recurse(rects[k], q[k]);
    }
  }
};

}  // namespace

std::vector<ImageAnnotation> partition_image(const ImageAnnotation& img,
                                             PartitionStats* stats) {
  validate_image(img);
  if (stats) {
    stats->images_in++;
    stats->objects_in += img.objects.size();
  }
  if (img.objects.empty()) {
    if (stats) stats->images_empty++;
    return {};
  }
  if (img.objects.size() == 1) {
    if (stats) {
      stats->images_out++;
      stats->objects_out++;
    }
    return {img};
  }
  PartitionRun run{img, stats, {}, 0};
  std::vector<int> all(img.objects.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  run.recurse(Box(0.0, 0.0, img.width, img.height), all);
  if (stats) {
    if (run.out.empty()) {
      stats->images_discarded++;
    } else {
      stats->images_out += run.out.size();
      for (const auto& o : run.out) stats->objects_out += o.objects.size();
    }
  }
  return run.out;
}

Dataset partition_dataset(const Dataset& ds, PartitionStats* stats, int threads) {
  const std::size_t n = ds.images.size();
  std::vector<std::vector<ImageAnnotation>> outs(n);
  std::vector<PartitionStats> partial(n);
  parallel_for_index(n, threads, [&](std::size_t i) {
    outs[i] = partition_image(ds.images[i], &partial[i]);
  });

  Dataset result;
  result.name = ds.name;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& img : outs[i]) {
      if (!ids.insert(img.id).second)
        throw std::invalid_argument("partition produced duplicate image id '" + img.id +
                                    "'; source ids must not collide");
      result.images.push_back(std::move(img));
    }
    if (stats) {
      stats->images_in += partial[i].images_in;
      stats->images_out += partial[i].images_out;
      stats->images_empty += partial[i].images_empty;
      stats->images_discarded += partial[i].images_discarded;
      stats->regions_no_pair += partial[i].regions_no_pair;
      stats->regions_no_valid_axes += partial[i].regions_no_valid_axes;
      stats->objects_in += partial[i].objects_in;
      stats->objects_out += partial[i].objects_out;
      stats->splits.insert(stats->splits.end(), partial[i].splits.begin(),
                           partial[i].splits.end());
    }
  }
  return result;
}

ImageAnnotation rescale_to_target(const ImageAnnotation& img, double target_side) {
  if (img.objects.size() != 1)
    throw std::invalid_argument("rescale_to_target: image '" + img.id +
                                "' must contain exactly one object");
  if (!std::isfinite(target_side) || !(target_side > 0.0))
    throw std::invalid_argument("rescale_to_target: target side must be > 0");
  const double f = target_side / img.objects[0].box.side();
  ImageAnnotation out = img;
  out.width = img.width * f;
  out.height = img.height * f;
  const Box& b = img.objects[0].box;
  out.objects[0].box = Box(b.x * f, b.y * f, b.w * f, b.h * f);
  if (img.provenance) {
    out.provenance->scale = img.provenance->scale * f;
  } else {
    out.provenance = Provenance{img.id, Box(0.0, 0.0, img.width, img.height), f};
  }
  return out;
}

std::vector<double> default_test_sizes() {
  std::vector<double> sizes;
  for (int x = 20; x <= 120; x += 10) sizes.push_back(static_cast<double>(x));
  return sizes;
}

namespace {

void check_sizes(const std::vector<double>& sizes) {
  if (sizes.empty()) throw std::invalid_argument("variant sizes must be non-empty");
  for (double s : sizes)
    if (!std::isfinite(s) || !(s > 0.0))
      throw std::invalid_argument("variant sizes must be > 0");
}

std::vector<ImageAnnotation> rescale_all(const std::vector<ImageAnnotation>& survivors,
                                         const std::vector<double>& targets,
                                         int threads) {
  std::vector<ImageAnnotation> out(survivors.size());
  parallel_for_index(survivors.size(), threads, [&](std::size_t i) {
    out[i] = rescale_to_target(survivors[i], targets[i]);
  });
  return out;
}

}  // namespace

std::map<double, Dataset> make_test_variants(const Dataset& ds,
                                             const std::vector<double>& sizes,
                                             PartitionStats* stats, int threads) {
  check_sizes(sizes);
  const Dataset base = partition_dataset(ds, stats, threads);
  std::map<double, Dataset> variants;
  for (double x : sizes) {
    if (variants.count(x)) continue;
    Dataset v;
    v.name = "F_test," + format_compact(x);
    v.images = rescale_all(base.images, std::vector<double>(base.images.size(), x),
                           threads);
    variants.emplace(x, std::move(v));
  }
  return variants;
}

Dataset make_train_variant(const Dataset& ds, double min_side, double max_side,
                           std::uint64_t seed, PartitionStats* stats, int threads) {
  if (!std::isfinite(min_side) || !std::isfinite(max_side) || !(min_side > 0.0) ||
      !(min_side < max_side))
    throw std::invalid_argument("make_train_variant: need 0 < min_side < max_side");
  const Dataset base = partition_dataset(ds, stats, threads);
  // One draw per survivor in dataset order. The unit double is built from
  // the raw 64-bit output so the sequence is identical on every platform.
  std::mt19937_64 rng(seed);
  std::vector<double> targets(base.images.size());
  for (auto& t : targets) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    t = min_side + u * (max_side - min_side);
  }
  Dataset v;
  v.name = "F_train," + format_compact(min_side) + "," + format_compact(max_side);
  v.images = rescale_all(base.images, targets, threads);
  return v;
}

}  // namespace anchorcov
