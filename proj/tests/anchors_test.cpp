#include "anchorcov/anchors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "synthetic.hpp"

namespace anchorcov {
namespace {

using testing::TestRng;

// ============================================================================
// AnchorSpec
// ============================================================================

TEST(AnchorSpecTest, AreaPreservingShape) {
  const AnchorSpec square(64.0, 1.0);
  EXPECT_DOUBLE_EQ(square.width(), 64.0);
  EXPECT_DOUBLE_EQ(square.height(), 64.0);

  const AnchorSpec wide(64.0, 2.0);
  EXPECT_NEAR(wide.width() * wide.height(), 64.0 * 64.0, 1e-9);
  EXPECT_NEAR(wide.width() / wide.height(), 2.0, 1e-12);

  const Box b = wide.box_at(100.0, 50.0);
  EXPECT_NEAR(b.cx(), 100.0, 1e-12);
  EXPECT_NEAR(b.cy(), 50.0, 1e-12);

  EXPECT_THROW(AnchorSpec(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(AnchorSpec(32.0, -1.0), std::invalid_argument);
}

// ============================================================================
// Scale synthesis and presets
// ============================================================================

TEST(SynthesizeAnchorSetTest, GeometricHalfOverlapSet) {
  const AnchorSet set = synthesize_anchor_set(32, 256, IouThreshold(0.5),
                                              AnchorScheme::geometric);
  const std::vector<double> want = {32, 45, 64, 90, 128, 181, 256};
  EXPECT_EQ(set.scales, want);
  EXPECT_EQ(set.scheme, AnchorScheme::geometric);
}

TEST(SynthesizeAnchorSetTest, PowersOfTwo) {
  const AnchorSet a = synthesize_anchor_set(32, 256, IouThreshold(0.5),
                                            AnchorScheme::powers_of_two);
  EXPECT_EQ(a.scales, (std::vector<double>{32, 64, 128, 256}));
  const AnchorSet b = synthesize_anchor_set(128, 512, IouThreshold(0.5),
                                            AnchorScheme::powers_of_two);
  EXPECT_EQ(b.scales, (std::vector<double>{128, 256, 512}));
}

TEST(SynthesizeAnchorSetTest, ConsecutiveRatiosTrackTheThreshold) {
  // Before flooring, consecutive scales differ by t^(-1/2), so their
  // aligned-scale IoU is t. Flooring shrinks a scale by less than one pixel
  // out of at least s_min, so the floored ratio exceeds the ideal one by at
  // most a factor s_min/(s_min - 1), costing that factor squared on the IoU.
  TestRng rng(11);
  for (int n = 0; n < 100; ++n) {
    const double t = rng.uniform(0.3, 0.7);
    const double ratio = 1.0 / std::sqrt(t);
    EXPECT_NEAR(aligned_scale_iou(ratio), t, 1e-12);

    const double s_min = rng.uniform(16.0, 64.0);
    const AnchorSet set = synthesize_anchor_set(s_min, s_min * 40.0, IouThreshold(t),
                                                AnchorScheme::geometric);
    ASSERT_GE(set.scales.size(), 2u);
    const double floor_loss = (s_min - 1.0) / s_min;
    for (std::size_t i = 1; i < set.scales.size(); ++i) {
      EXPECT_GE(aligned_scale_iou(set.scales[i] / set.scales[i - 1]),
                t * floor_loss * floor_loss - 1e-9)
          << "t=" << t << " step " << set.scales[i - 1] << "->" << set.scales[i];
    }
  }

  // The reference half-overlap ladder stays within a hundredth of t = 0.5.
  const AnchorSet canon =
      synthesize_anchor_set(32, 256, IouThreshold(0.5), AnchorScheme::geometric);
  ASSERT_EQ(canon.scales.size(), 7u);
  for (std::size_t i = 1; i < canon.scales.size(); ++i) {
    const double v = aligned_scale_iou(canon.scales[i] / canon.scales[i - 1]);
    EXPECT_GE(v, 0.49) << canon.scales[i - 1] << "->" << canon.scales[i];
    EXPECT_LE(v, 0.51) << canon.scales[i - 1] << "->" << canon.scales[i];
  }
}

TEST(SynthesizeAnchorSetTest, RejectsBadRanges) {
  EXPECT_THROW(synthesize_anchor_set(0.5, 256, IouThreshold(0.5), AnchorScheme::geometric),
               std::invalid_argument);
  EXPECT_THROW(synthesize_anchor_set(64, 32, IouThreshold(0.5), AnchorScheme::geometric),
               std::invalid_argument);
  EXPECT_THROW(
      synthesize_anchor_set(32, 256, IouThreshold(0.5), AnchorScheme::explicit_list),
      std::invalid_argument);
}

TEST(PresetAnchorSetTest, NamedSets) {
  EXPECT_EQ(preset_anchor_set("A_paper").scales,
            (std::vector<double>{32, 45, 64, 90, 128, 181, 256}));
  EXPECT_EQ(preset_anchor_set("A_prop").scales,
            (std::vector<double>{32, 45, 64, 90, 128, 256}));
  EXPECT_EQ(preset_anchor_set("A_ext").scales, (std::vector<double>{32, 64, 128, 256}));
  EXPECT_EQ(preset_anchor_set("A_orig").scales, (std::vector<double>{128, 256, 512}));
  EXPECT_THROW(preset_anchor_set("A_nope"), std::invalid_argument);
  EXPECT_EQ(preset_names().size(), 4u);
}

// ============================================================================
// Level assignment
// ============================================================================

TEST(LevelMapTest, DefaultBoundaries) {
  EXPECT_EQ(assign_level(32.0).name, LevelName::conv3);
  EXPECT_EQ(assign_level(45.0).name, LevelName::conv3);  // boundary inclusive
  EXPECT_EQ(assign_level(45.1).name, LevelName::conv4);
  EXPECT_EQ(assign_level(64.0).name, LevelName::conv4);
  EXPECT_EQ(assign_level(89.9).name, LevelName::conv4);
  EXPECT_EQ(assign_level(90.0).name, LevelName::conv5);  // boundary exclusive
  EXPECT_EQ(assign_level(512.0).name, LevelName::conv5);

  EXPECT_DOUBLE_EQ(assign_level(32.0).stride, 4.0);
  EXPECT_DOUBLE_EQ(assign_level(64.0).stride, 8.0);
  EXPECT_DOUBLE_EQ(assign_level(128.0).stride, 16.0);
}

TEST(LevelMapTest, CustomMapAndStrideLookup) {
  LevelMap map;
  map.conv3_max = 30.0;
  map.conv5_min = 200.0;
  map.strides = {2.0, 4.0, 32.0};
  EXPECT_EQ(map.assign(30.0).name, LevelName::conv3);
  EXPECT_EQ(map.assign(128.0).name, LevelName::conv4);
  EXPECT_EQ(map.assign(200.0).name, LevelName::conv5);
  EXPECT_DOUBLE_EQ(map.stride_of(LevelName::conv4), 4.0);
  EXPECT_THROW(map.assign(0.0), std::invalid_argument);
}

TEST(LevelMapTest, EveryScaleMapsToExactlyOneLevel) {
  const LevelMap map;
  for (double s = 1.0; s <= 600.0; s += 0.5) {
    const LevelName name = map.assign(s).name;
    const int hits = (s <= map.conv3_max ? 1 : 0) +
                     (s > map.conv3_max && s < map.conv5_min ? 1 : 0) +
                     (s >= map.conv5_min ? 1 : 0);
    EXPECT_EQ(hits, 1);
    EXPECT_EQ(map.stride_of(name), map.assign(s).stride);
  }
}

TEST(LevelNameTest, StringRoundTrip) {
  EXPECT_STREQ(to_string(LevelName::conv4), "conv4");
  EXPECT_EQ(level_from_string("conv5"), LevelName::conv5);
  EXPECT_EQ(level_from_string("conv6"), std::nullopt);
}

// ============================================================================
// Grid enumeration
// ============================================================================

TEST(EnumerateAnchorsTest, CountsAndOrder) {
  AnchorGrid grid;
  grid.width = 640.0;
  grid.height = 480.0;
  grid.level = {LevelName::conv5, 16.0};
  grid.specs = {AnchorSpec(64, 0.5), AnchorSpec(64, 1.0), AnchorSpec(64, 2.0)};

  EXPECT_EQ(grid.centers_x(), 40);
  EXPECT_EQ(grid.centers_y(), 30);
  const auto anchors = enumerate_anchors(grid);
  ASSERT_EQ(anchors.size(), 40u * 30u * 3u);

  // Row-major centers, specs innermost; first center sits at (8, 8).
  EXPECT_EQ(anchors[0].center_index, 0);
  EXPECT_EQ(anchors[0].spec_index, 0);
  EXPECT_EQ(anchors[1].spec_index, 1);
  EXPECT_EQ(anchors[3].center_index, 1);
  EXPECT_NEAR(anchors[0].box.cx(), 8.0, 1e-12);
  EXPECT_NEAR(anchors[0].box.cy(), 8.0, 1e-12);
  EXPECT_NEAR(anchors[3].box.cx(), 24.0, 1e-12);
  // Second row starts after 40 centers.
  EXPECT_NEAR(anchors[40u * 3u].box.cy(), 24.0, 1e-12);
}

TEST(EnumerateAnchorsTest, TinyExtents) {
  AnchorGrid grid;
  grid.level = {LevelName::conv5, 16.0};
  grid.specs = {AnchorSpec(32, 1.0)};
  grid.width = 7.0;  // first center (8) falls outside
  grid.height = 100.0;
  EXPECT_EQ(grid.centers_x(), 0);
  EXPECT_TRUE(enumerate_anchors(grid).empty());
  grid.width = 8.1;  // barely inside
  EXPECT_EQ(grid.centers_x(), 1);
}

TEST(EnumerateAnchorsTest, ClippingKeepsBoxesInside) {
  AnchorGrid grid;
  grid.width = 64.0;
  grid.height = 64.0;
  grid.level = {LevelName::conv5, 16.0};
  grid.specs = {AnchorSpec(128, 1.0)};
  grid.clip_to_image = true;
  const auto anchors = enumerate_anchors(grid);
  ASSERT_FALSE(anchors.empty());
  for (const auto& a : anchors) {
    EXPECT_GE(a.box.x, 0.0);
    EXPECT_GE(a.box.y, 0.0);
    EXPECT_LE(a.box.x2(), 64.0);
    EXPECT_LE(a.box.y2(), 64.0);
  }
  // Unclipped, the same grid overhangs.
  grid.clip_to_image = false;
  EXPECT_LT(enumerate_anchors(grid)[0].box.x, 0.0);
}

// ============================================================================
// Best anchor search
// ============================================================================

AnchorGrid square_grid(double extent, double stride, std::vector<AnchorSpec> specs) {
  AnchorGrid grid;
  grid.width = extent;
  grid.height = extent;
  grid.level = {LevelName::conv5, stride};
  grid.specs = std::move(specs);
  return grid;
}

TEST(BestGridIouTest, WorstCasePlacementHandCase) {
  // 64px square centered at (16,16): exactly (8,8) away from the four nearest
  // centers of a 16px grid. Overlap (64-8)^2 = 3136, union 2*4096 - 3136.
  const auto grid = square_grid(640.0, 16.0, {AnchorSpec(64, 1.0)});
  const Box gt(16.0 - 32.0, 16.0 - 32.0, 64.0, 64.0);
  const BestAnchor best = best_grid_iou(gt, grid);
  EXPECT_NEAR(best.iou, 3136.0 / 5056.0, 1e-12);
  ASSERT_TRUE(best.box.has_value());
  // Tie across four equidistant centers resolves to the smallest index.
  EXPECT_EQ(best.center_index, 0);
}

TEST(BestGridIouTest, AlignedGroundtruthIsPerfect) {
  const auto grid = square_grid(640.0, 16.0, {AnchorSpec(64, 1.0), AnchorSpec(64, 2.0)});
  const Box gt(24.0 - 32.0, 24.0 - 32.0, 64.0, 64.0);  // centered on (24, 24)
  const BestAnchor best = best_grid_iou(gt, grid);
  EXPECT_DOUBLE_EQ(best.iou, 1.0);
  EXPECT_EQ(best.spec_index, 0);
}

TEST(BestGridIouTest, EmptyGridReturnsDisengaged) {
  const auto grid = square_grid(7.0, 16.0, {AnchorSpec(64, 1.0)});
  const BestAnchor best = best_grid_iou(Box(0, 0, 5, 5), grid);
  EXPECT_EQ(best.iou, 0.0);
  EXPECT_FALSE(best.box.has_value());
}

TEST(BestGridIouTest, ZeroOverlapFallsBackToFirstAnchor) {
  // Groundtruth far from every anchor of a tiny grid: everything ties at 0
  // and enumeration order decides.
  const auto grid = square_grid(64.0, 16.0, {AnchorSpec(8, 1.0)});
  const BestAnchor best = best_grid_iou(Box(60.0, 60.0, 3.0, 3.0), grid);
  EXPECT_EQ(best.iou, 0.0);
  ASSERT_TRUE(best.box.has_value());
  EXPECT_EQ(best.center_index, 0);
  EXPECT_EQ(best.spec_index, 0);
}

TEST(BestGridIouTest, MatchesExhaustiveEnumeration) {
  TestRng rng(20260814);
  for (int n = 0; n < 500; ++n) {
    std::vector<AnchorSpec> specs;
    const long n_specs = rng.uniform_int(1, 3);
    for (long s = 0; s < n_specs; ++s)
      specs.emplace_back(rng.uniform(8.0, 200.0), rng.log_uniform(0.5, 2.0));
    const double stride = rng.uniform(4.0, 32.0);
    const double extent = rng.uniform(40.0, 400.0);
    const auto grid = square_grid(extent, stride, specs);
    if (grid.centers_x() == 0 || grid.centers_y() == 0) continue;

    const Box gt = testing::random_object_box(rng, extent, extent, 0.0, 5.0, 150.0,
                                              0.5, 2.0);
    const BestAnchor got = best_grid_iou(gt, grid);
    const auto want = testing::exhaustive_best_anchor(gt, grid);
    ASSERT_TRUE(want.any);
    ASSERT_TRUE(got.box.has_value());
    EXPECT_EQ(got.iou, want.iou) << "instance " << n;
    EXPECT_EQ(got.center_index, want.center_index) << "instance " << n;
    EXPECT_EQ(got.spec_index, want.spec_index) << "instance " << n;
    EXPECT_EQ(*got.box, want.box) << "instance " << n;
  }
}

TEST(BestGridIouTest, AddingSpecsNeverHurts) {
  TestRng rng(99);
  for (int n = 0; n < 200; ++n) {
    const double extent = 320.0;
    std::vector<AnchorSpec> specs = {AnchorSpec(rng.uniform(16.0, 128.0), 1.0)};
    auto small = square_grid(extent, 16.0, specs);
    specs.emplace_back(rng.uniform(16.0, 128.0), rng.log_uniform(0.5, 2.0));
    const auto big = square_grid(extent, 16.0, specs);
    const Box gt =
        testing::random_object_box(rng, extent, extent, 0.0, 10.0, 120.0, 0.6, 1.6);
    EXPECT_LE(best_grid_iou(gt, small).iou, best_grid_iou(gt, big).iou);
  }
}

TEST(BestIdealIouTest, UpperBoundsGridPlacement) {
  EXPECT_NEAR(best_ideal_iou(Box(0, 0, 32, 32), AnchorSpec(32.0 * std::sqrt(2.0), 1.0)),
              0.5, 1e-12);
  EXPECT_DOUBLE_EQ(best_ideal_iou(Box(0, 0, 64, 64), AnchorSpec(32, 1.0)), 0.25);

  TestRng rng(5);
  for (int n = 0; n < 200; ++n) {
    const AnchorSpec spec(rng.uniform(16.0, 128.0), rng.log_uniform(0.5, 2.0));
    const auto grid = square_grid(320.0, 16.0, {spec});
    const Box gt =
        testing::random_object_box(rng, 320.0, 320.0, 0.0, 10.0, 120.0, 0.6, 1.6);
    EXPECT_GE(best_ideal_iou(gt, spec) + 1e-12, best_grid_iou(gt, grid).iou);
  }
}

}  // namespace
}  // namespace anchorcov
