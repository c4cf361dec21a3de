#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorcov/box.hpp"

namespace anchorcov {

struct GroundtruthObject {
  std::string class_name;
  Box box;
};

// Where a derived image came from: crop rectangle in source-image
// coordinates and the scale factor applied after cropping. A source box b
// maps to the derived image as (b - crop.origin) * scale, so the original
// coordinates are recovered as crop.origin + local / scale.
struct Provenance {
  std::string source_id;
  Box crop{0, 0, 1, 1};
  double scale = 1.0;
};

struct ImageAnnotation {
  std::string id;
  double width = 0.0;
  double height = 0.0;
  std::vector<GroundtruthObject> objects;
  std::optional<Provenance> provenance;
};

struct Dataset {
  std::string name;
  std::vector<ImageAnnotation> images;
};

// Throw std::invalid_argument when an invariant is broken (empty id,
// non-positive extent, object outside the image, ...).
void validate_image(const ImageAnnotation& img);
void validate_dataset(const Dataset& ds);

// One recorded partition cut, in the coordinates of the image it was made in.
struct SplitRecord {
  std::string image_id;
  double x = 0.0;
  double y = 0.0;
  Box region{0, 0, 1, 1};
};

struct PartitionStats {
  std::size_t images_in = 0;
  std::size_t images_out = 0;
  std::size_t images_empty = 0;      // inputs without objects
  std::size_t images_discarded = 0;  // inputs with objects but no output
  std::size_t regions_no_pair = 0;   // region had no non-overlapping pair
  std::size_t regions_no_valid_axes = 0;
  std::size_t objects_in = 0;
  std::size_t objects_out = 0;
  std::vector<SplitRecord> splits;
};

// Recursively cuts a multi-object image into single-object regions. Each cut
// goes through the midpoint of the widest gap between two non-overlapping
// objects and is only accepted when both axes clear every object in the
// region; otherwise the next-farthest pair is tried. Regions that cannot be
// cut lose their objects. Emitted images are re-based to local coordinates
// and carry provenance.
std::vector<ImageAnnotation> partition_image(const ImageAnnotation& img,
                                             PartitionStats* stats = nullptr);

Dataset partition_dataset(const Dataset& ds, PartitionStats* stats = nullptr,
                          int threads = 0);

// Uniformly rescales a single-object image so the object side (sqrt of its
// area) becomes target_side. Image extent scales along; the factor is
// recorded in provenance.
ImageAnnotation rescale_to_target(const ImageAnnotation& img, double target_side);

std::vector<double> default_test_sizes();  // 20, 30, ..., 120

// Partitions once, then produces one dataset per requested size with every
// surviving object rescaled to exactly that side.
std::map<double, Dataset> make_test_variants(
    const Dataset& ds, const std::vector<double>& sizes = default_test_sizes(),
    PartitionStats* stats = nullptr, int threads = 0);

// Partitions once, then rescales each survivor to a target drawn uniformly
// from [min_side, max_side]. Draws come from a seeded generator in survivor
// order, so identical seeds give identical datasets.
Dataset make_train_variant(const Dataset& ds, double min_side, double max_side,
                           std::uint64_t seed, PartitionStats* stats = nullptr,
                           int threads = 0);

}  // namespace anchorcov
