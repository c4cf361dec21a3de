#include "anchorcov/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anchorcov/io.hpp"
#include "synthetic.hpp"

namespace anchorcov {
namespace {

ImageAnnotation image(std::string id, double w, double h,
                      std::vector<GroundtruthObject> objects) {
  ImageAnnotation img;
  img.id = std::move(id);
  img.width = w;
  img.height = h;
  img.objects = std::move(objects);
  return img;
}

GroundtruthObject obj(const char* cls, double x, double y, double w, double h) {
  return GroundtruthObject{cls, Box(x, y, w, h)};
}

// Maps a box of a derived image back into its source image's coordinates.
Box to_source(const Box& local, const Provenance& p) {
  return Box(p.crop.x + local.x / p.scale, p.crop.y + local.y / p.scale,
             local.w / p.scale, local.h / p.scale);
}

// ============================================================================
// Validation
// ============================================================================

TEST(ValidateTest, CatchesBrokenImages) {
  EXPECT_NO_THROW(validate_image(image("a", 100, 100, {obj("c", 0, 0, 100, 100)})));
  EXPECT_THROW(validate_image(image("", 100, 100, {})), std::invalid_argument);
  EXPECT_THROW(validate_image(image("a", 0, 100, {})), std::invalid_argument);
  EXPECT_THROW(validate_image(image("a", 100, 100, {obj("c", 90, 0, 20, 20)})),
               std::invalid_argument);
  EXPECT_THROW(validate_image(image("a", 100, 100, {obj("", 0, 0, 10, 10)})),
               std::invalid_argument);
  // A hair over the edge is tolerated: serialized coordinates are quantized.
  EXPECT_NO_THROW(
      validate_image(image("a", 100, 100, {obj("c", 0, 0, 100.000001, 100)})));
}

TEST(ValidateTest, RejectsDuplicateIds) {
  Dataset ds;
  ds.images.push_back(image("same", 100, 100, {}));
  ds.images.push_back(image("same", 200, 200, {}));
  try {
    validate_dataset(ds);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("same"), std::string::npos);
  }
}

// ============================================================================
// partition_image
// ============================================================================

TEST(PartitionImageTest, TwoSeparatedObjects) {
  const auto img = image("pic", 200, 200,
                         {obj("alpha", 10, 10, 20, 20), obj("bravo", 100, 100, 20, 20)});
  PartitionStats stats;
  const auto parts = partition_image(img, &stats);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].id, "pic#0");
  EXPECT_EQ(parts[1].id, "pic#1");

  // The gap runs from (30,30) to (100,100); the cut goes through (65,65).
  ASSERT_EQ(stats.splits.size(), 1u);
  EXPECT_DOUBLE_EQ(stats.splits[0].x, 65.0);
  EXPECT_DOUBLE_EQ(stats.splits[0].y, 65.0);

  // First quadrant: [0,65)^2 with the first object re-based (unchanged here).
  EXPECT_DOUBLE_EQ(parts[0].width, 65.0);
  EXPECT_DOUBLE_EQ(parts[0].height, 65.0);
  ASSERT_EQ(parts[0].objects.size(), 1u);
  EXPECT_EQ(parts[0].objects[0].box, Box(10, 10, 20, 20));
  // Second: [65,200)^2, object shifted to local coordinates.
  ASSERT_EQ(parts[1].objects.size(), 1u);
  EXPECT_EQ(parts[1].objects[0].box, Box(35, 35, 20, 20));

  // Provenance points back at the source.
  ASSERT_TRUE(parts[1].provenance.has_value());
  EXPECT_EQ(parts[1].provenance->source_id, "pic");
  EXPECT_EQ(parts[1].provenance->crop, Box(65, 65, 135, 135));
  EXPECT_DOUBLE_EQ(parts[1].provenance->scale, 1.0);

  EXPECT_EQ(stats.images_out, 2u);
  EXPECT_EQ(stats.objects_out, 2u);
}

TEST(PartitionImageTest, SingleObjectPassesThroughUntouched) {
  const auto img = image("solo", 100, 100, {obj("alpha", 10, 10, 30, 30)});
  PartitionStats stats;
  const auto parts = partition_image(img, &stats);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].id, "solo");
  EXPECT_FALSE(parts[0].provenance.has_value());
  EXPECT_EQ(stats.images_out, 1u);
  EXPECT_TRUE(stats.splits.empty());
}

TEST(PartitionImageTest, EmptyAndOverlappingInputs) {
  PartitionStats stats;
  EXPECT_TRUE(partition_image(image("none", 50, 50, {}), &stats).empty());
  EXPECT_EQ(stats.images_empty, 1u);

  // Two overlapping boxes: no candidate pair, the image is discarded.
  const auto overlapping = image(
      "pair", 100, 100, {obj("alpha", 10, 10, 30, 30), obj("bravo", 20, 20, 30, 30)});
  EXPECT_TRUE(partition_image(overlapping, &stats).empty());
  EXPECT_EQ(stats.images_discarded, 1u);
  EXPECT_EQ(stats.regions_no_pair, 1u);
}

TEST(PartitionImageTest, PinwheelHasNoValidAxes) {
  // Four pairwise disjoint boxes whose x-projections cover the whole image:
  // no vertical line clears all of them, so every candidate cut fails.
  const auto img = image("pin", 50, 50,
                         {obj("a", 0, 0, 30, 10), obj("b", 40, 0, 10, 30),
                          obj("c", 20, 40, 30, 10), obj("d", 0, 20, 10, 30)});
  PartitionStats stats;
  EXPECT_TRUE(partition_image(img, &stats).empty());
  EXPECT_EQ(stats.images_discarded, 1u);
  EXPECT_EQ(stats.regions_no_valid_axes, 1u);
}

TEST(PartitionImageTest, RecursesIntoQuadrants) {
  // Three objects on a diagonal. The widest-gap pair (a, c) splits at
  // (180, 180), leaving b and c together in the bottom-right quadrant; that
  // region splits again at (310, 310).
  const auto img = image("tri", 400, 400,
                         {obj("a", 10, 10, 20, 20), obj("b", 250, 250, 40, 40),
                          obj("c", 330, 330, 40, 40)});
  PartitionStats stats;
  const auto parts = partition_image(img, &stats);
  ASSERT_EQ(parts.size(), 3u);
  ASSERT_EQ(stats.splits.size(), 2u);
  EXPECT_DOUBLE_EQ(stats.splits[0].x, 180.0);
  EXPECT_DOUBLE_EQ(stats.splits[1].x, 310.0);
  EXPECT_EQ(stats.splits[1].region, Box(180, 180, 220, 220));
  for (const auto& p : parts) {
    ASSERT_EQ(p.objects.size(), 1u);
    // Object ends up inside its crop.
    EXPECT_GE(p.objects[0].box.x, 0.0);
    EXPECT_GE(p.objects[0].box.y, 0.0);
    EXPECT_LE(p.objects[0].box.x2(), p.width);
    EXPECT_LE(p.objects[0].box.y2(), p.height);
  }
}

TEST(PartitionImageTest, InvariantsOnSyntheticCorpus) {
  const Dataset corpus = testing::make_corpus(20260814, {.n_images = 200});
  PartitionStats stats;
  const Dataset out = partition_dataset(corpus, &stats);
  ASSERT_GT(out.images.size(), corpus.images.size() / 2);

  std::map<std::string, const ImageAnnotation*> sources;
  for (const auto& img : corpus.images) sources[img.id] = &img;

  for (const auto& img : out.images) {
    ASSERT_EQ(img.objects.size(), 1u);
    const Box& b = img.objects[0].box;
    EXPECT_GE(b.x, 0.0);
    EXPECT_GE(b.y, 0.0);
    EXPECT_LE(b.x2(), img.width + 1e-9);
    EXPECT_LE(b.y2(), img.height + 1e-9);

    // Recomposition: the provenance mapping recovers the original box.
    if (!img.provenance) continue;
    const Box src = to_source(b, *img.provenance);
    const ImageAnnotation* source = sources.at(img.provenance->source_id);
    const bool found = std::any_of(
        source->objects.begin(), source->objects.end(), [&](const GroundtruthObject& o) {
          return std::fabs(o.box.x - src.x) < 1e-6 && std::fabs(o.box.y - src.y) < 1e-6 &&
                 std::fabs(o.box.w - src.w) < 1e-6 && std::fabs(o.box.h - src.h) < 1e-6 &&
                 o.class_name == img.objects[0].class_name;
        });
    EXPECT_TRUE(found) << img.id;
  }

  // Every recorded cut clears every retained box of its region strictly.
  std::map<std::string, std::vector<Box>> retained;  // source id -> source-space boxes
  for (const auto& img : out.images) {
    if (img.provenance)
      retained[img.provenance->source_id].push_back(
          to_source(img.objects[0].box, *img.provenance));
    else
      retained[img.id].push_back(img.objects[0].box);
  }
  ASSERT_FALSE(stats.splits.empty());
  for (const auto& split : stats.splits) {
    const auto it = retained.find(split.image_id);
    if (it == retained.end()) continue;
    for (const Box& b : it->second) {
      // Only boxes inside the region this cut divided.
      if (b.x < split.region.x - 1e-9 || b.x2() > split.region.x2() + 1e-9 ||
          b.y < split.region.y - 1e-9 || b.y2() > split.region.y2() + 1e-9)
        continue;
      EXPECT_TRUE(b.x2() < split.x || b.x > split.x) << split.image_id;
      EXPECT_TRUE(b.y2() < split.y || b.y > split.y) << split.image_id;
    }
  }

  // Ledger numbers add up.
  EXPECT_EQ(stats.images_in, corpus.images.size());
  EXPECT_EQ(stats.images_out, out.images.size());
  std::size_t gt_in = 0;
  for (const auto& img : corpus.images) gt_in += img.objects.size();
  EXPECT_EQ(stats.objects_in, gt_in);
  EXPECT_EQ(stats.objects_out, out.images.size());
}

TEST(PartitionDatasetTest, ThreadCountDoesNotChangeOutput) {
  const Dataset corpus = testing::make_corpus(8, {.n_images = 60});
  const Dataset a = partition_dataset(corpus, nullptr, 1);
  const Dataset b = partition_dataset(corpus, nullptr, 8);
  EXPECT_EQ(write_annotations(a), write_annotations(b));
}

TEST(PartitionDatasetTest, RejectsCollidingDerivedIds) {
  Dataset ds;
  // "x" splitting yields x#0/x#1, which collides with a literal "x#0" image.
  ds.images.push_back(
      image("x", 200, 200, {obj("a", 0, 0, 10, 10), obj("b", 100, 100, 10, 10)}));
  ds.images.push_back(image("x#0", 50, 50, {obj("c", 0, 0, 10, 10)}));
  EXPECT_THROW(partition_dataset(ds), std::invalid_argument);
}

// ============================================================================
// rescale_to_target
// ============================================================================

TEST(RescaleToTargetTest, ScalesEverythingUniformly) {
  // 50x32 object: side sqrt(1600) = 40; target 80 doubles the image.
  const auto img = image("r", 200, 100, {obj("alpha", 10, 20, 50, 32)});
  const auto out = rescale_to_target(img, 80.0);
  EXPECT_DOUBLE_EQ(out.width, 400.0);
  EXPECT_DOUBLE_EQ(out.height, 200.0);
  EXPECT_EQ(out.objects[0].box, Box(20, 40, 100, 64));
  ASSERT_TRUE(out.provenance.has_value());
  EXPECT_DOUBLE_EQ(out.provenance->scale, 2.0);
  EXPECT_EQ(out.provenance->crop, Box(0, 0, 200, 100));

  // Identity when the target equals the current side.
  const auto same = rescale_to_target(img, 40.0);
  EXPECT_DOUBLE_EQ(same.width, 200.0);
  EXPECT_EQ(same.objects[0].box, Box(10, 20, 50, 32));

  // Downscale lands exactly on the target side.
  const auto small = rescale_to_target(image("s", 90, 90, {obj("a", 5, 5, 30, 30)}), 20.0);
  EXPECT_NEAR(small.objects[0].box.side(), 20.0, 1e-9);
}

TEST(RescaleToTargetTest, ComposesWithPartitionProvenance) {
  const auto img = image("pic", 200, 200,
                         {obj("alpha", 10, 10, 20, 20), obj("bravo", 100, 100, 20, 20)});
  const auto parts = partition_image(img, nullptr);
  ASSERT_EQ(parts.size(), 2u);
  const auto scaled = rescale_to_target(parts[1], 40.0);  // side 20 -> 40, f = 2
  ASSERT_TRUE(scaled.provenance.has_value());
  EXPECT_DOUBLE_EQ(scaled.provenance->scale, 2.0);
  EXPECT_EQ(scaled.provenance->crop, parts[1].provenance->crop);
  // Round trip back to the original coordinates.
  const Box src = to_source(scaled.objects[0].box, *scaled.provenance);
  EXPECT_NEAR(src.x, 100.0, 1e-9);
  EXPECT_NEAR(src.y, 100.0, 1e-9);
  EXPECT_NEAR(src.w, 20.0, 1e-9);
}

TEST(RescaleToTargetTest, RejectsBadInput) {
  EXPECT_THROW(rescale_to_target(image("m", 100, 100, {}), 40.0), std::invalid_argument);
  EXPECT_THROW(rescale_to_target(
                   image("m", 100, 100, {obj("a", 0, 0, 10, 10), obj("b", 50, 50, 10, 10)}),
                   40.0),
               std::invalid_argument);
  EXPECT_THROW(rescale_to_target(image("m", 100, 100, {obj("a", 0, 0, 10, 10)}), 0.0),
               std::invalid_argument);
}

// ============================================================================
// Variants
// ============================================================================

TEST(MakeTestVariantsTest, ElevenSizesWithExactSides) {
  const Dataset corpus = testing::make_corpus(3, {.n_images = 50});
  PartitionStats stats;
  const auto variants = make_test_variants(corpus, default_test_sizes(), &stats);
  ASSERT_EQ(variants.size(), 11u);

  std::size_t survivors = variants.at(20.0).images.size();
  EXPECT_GT(survivors, 0u);
  for (const auto& [size, ds] : variants) {
    EXPECT_EQ(ds.images.size(), survivors);  // same survivors, every size
    for (const auto& img : ds.images) {
      ASSERT_EQ(img.objects.size(), 1u);
      EXPECT_NEAR(img.objects[0].box.side(), size, 1e-6);
    }
  }
  EXPECT_EQ(variants.at(60.0).name, "F_test,60");
}

TEST(MakeTrainVariantTest, SeededAndBounded) {
  const Dataset corpus = testing::make_corpus(5, {.n_images = 80});
  const Dataset a = make_train_variant(corpus, 20.0, 120.0, 42);
  const Dataset b = make_train_variant(corpus, 20.0, 120.0, 42);
  EXPECT_EQ(write_annotations(a), write_annotations(b));
  EXPECT_EQ(a.name, "F_train,20,120");

  const Dataset c = make_train_variant(corpus, 20.0, 120.0, 43);
  EXPECT_NE(write_annotations(a), write_annotations(c));

  for (const auto& img : a.images) {
    const double side = img.objects[0].box.side();
    EXPECT_GE(side, 20.0 - 1e-9);
    EXPECT_LE(side, 120.0 + 1e-9);
  }

  for (const auto [lo, hi] : {std::pair{20.0, 60.0}, {40.0, 80.0}, {60.0, 100.0},
                              {80.0, 120.0}}) {
    const Dataset v = make_train_variant(corpus, lo, hi, 42);
    for (const auto& img : v.images) {
      EXPECT_GE(img.objects[0].box.side(), lo - 1e-9);
      EXPECT_LE(img.objects[0].box.side(), hi + 1e-9);
    }
  }

  EXPECT_THROW(make_train_variant(corpus, 120.0, 20.0, 42), std::invalid_argument);
  EXPECT_THROW(make_train_variant(corpus, 0.0, 20.0, 42), std::invalid_argument);
}

TEST(MakeTrainVariantTest, SidesAreUniformlyDistributed) {
  // 10^4 single-object images survive partition 1:1; the drawn sides must
  // track the uniform CDF closely (Kolmogorov-Smirnov distance below 0.02).
  const Dataset corpus = testing::make_single_object_corpus(13, 10000);
  const Dataset v = make_train_variant(corpus, 20.0, 120.0, 42);
  ASSERT_EQ(v.images.size(), 10000u);

  std::vector<double> u;
  u.reserve(v.images.size());
  for (const auto& img : v.images)
    u.push_back((img.objects[0].box.side() - 20.0) / 100.0);
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / n - u[i]));
    ks = std::max(ks, std::fabs(u[i] - static_cast<double>(i) / n));
  }
  EXPECT_LT(ks, 0.02);
}

}  // namespace
}  // namespace anchorcov
