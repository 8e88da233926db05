#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "hipseg/postprocess/components.hpp"
#include "oracles.hpp"

using namespace hipseg;

namespace {

LabelMask random_mask(Extent3 e, double density, unsigned seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution b(density);
  LabelMask m(e);
  for (auto& v : m.data.values()) v = b(rng);
  return m;
}

std::vector<std::uint8_t> bytes(const LabelMask& m) { return {m.data.values().begin(), m.data.values().end()}; }

LabelMask from_points(Extent3 e, const std::vector<Index3>& pts) {
  LabelMask m(e);
  for (const auto& p : pts) m.data(p[0], p[1], p[2]) = 1;
  return m;
}

}  // namespace

TEST(Components, MatchesFloodFillOnRandomVolumes) {
  for (unsigned seed = 0; seed < 40; ++seed) {
    const LabelMask m = random_mask({16, 16, 16}, 0.15 + 0.01 * (seed % 20), seed);
    for (int conn : {6, 26}) {
      std::vector<int> ref_labels;
      const auto ref = oracle::flood_fill(bytes(m), 16, 16, 16, conn, &ref_labels);
      const ComponentSet cs = label_components(m, parse_connectivity(conn));
      ASSERT_EQ(cs.sizes, ref) << "seed " << seed << " conn " << conn;
      // Same partition: both label in raster order of first voxel, so labels agree exactly.
      for (std::size_t i = 0; i < ref_labels.size(); ++i) ASSERT_EQ(static_cast<int>(cs.labels[i]), ref_labels[i]);
    }
  }
}

TEST(Components, SixVersusTwentySixOnDiagonal) {
  const LabelMask m = from_points({4, 4, 4}, {{0, 0, 0}, {1, 1, 0}, {2, 2, 1}});
  EXPECT_EQ(label_components(m, Connectivity::six).count(), 3u);
  EXPECT_EQ(label_components(m, Connectivity::twenty_six).count(), 1u);
  const LabelMask edge = from_points({4, 4, 4}, {{0, 0, 0}, {1, 0, 1}});
  EXPECT_EQ(label_components(edge, Connectivity::six).count(), 2u);
  EXPECT_EQ(label_components(edge, Connectivity::twenty_six).count(), 1u);
}

TEST(Components, EmptyAndFull) {
  EXPECT_EQ(label_components(LabelMask({5, 5, 5})).count(), 0u);
  LabelMask full({5, 4, 3});
  std::fill(full.data.values().begin(), full.data.values().end(), 1);
  const ComponentSet cs = label_components(full, Connectivity::six);
  ASSERT_EQ(cs.count(), 1u);
  EXPECT_EQ(cs.sizes[0], 60u);
}

TEST(Components, UShapeMergesLateLabels) {
  // Two arms joined only at the far end: provisional labels must be merged.
  std::vector<Index3> pts;
  for (int j = 0; j < 6; ++j) pts.push_back({0, j, 0}), pts.push_back({4, j, 0});
  for (int i = 0; i <= 4; ++i) pts.push_back({i, 6, 0});
  const ComponentSet cs = label_components(from_points({5, 7, 1}, pts), Connectivity::six);
  ASSERT_EQ(cs.count(), 1u);
  EXPECT_EQ(cs.sizes[0], 17u);
}

TEST(KeepLargest, KeepsTwoLargestOnRandomVolumes) {
  for (unsigned seed = 100; seed < 130; ++seed) {
    const LabelMask m = random_mask({16, 16, 16}, 0.2, seed);
    std::vector<int> labels;
    const auto sizes = oracle::flood_fill(bytes(m), 16, 16, 16, 26, &labels);
    // Oracle ranking: by size desc, ties by first-voxel order.
    std::vector<int> order(sizes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i) + 1;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sizes[a - 1] > sizes[b - 1]; });
    const LabelMask kept = keep_largest(m, 2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool expect = labels[i] != 0 && (labels[i] == order[0] || (order.size() > 1 && labels[i] == order[1]));
      ASSERT_EQ(kept.data[i], expect ? 1 : 0) << "seed " << seed;
    }
  }
}

TEST(KeepLargest, TieBreaksByFirstVoxelInRasterOrder) {
  // Sizes 3, 3, 3 (raster order A, B, C): the first two are kept.
  const LabelMask m = from_points({9, 3, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0},
                                              {4, 2, 0}, {5, 2, 0}, {6, 2, 0},
                                              {8, 0, 0}, {8, 1, 0}, {8, 2, 0}});
  const ComponentSet cs = label_components(m, Connectivity::six);
  ASSERT_EQ(cs.sizes, (std::vector<std::size_t>{3, 3, 3}));
  const LabelMask kept = keep_largest(cs, 2);
  EXPECT_EQ(kept.data(0, 0, 0), 1);
  EXPECT_EQ(kept.data(8, 0, 0), 1);   // C starts at x=8,y=0: before B (y=2) in raster order
  EXPECT_EQ(kept.data(4, 2, 0), 0);
  EXPECT_EQ(kept.count(), 6u);
}

TEST(KeepLargest, FewerComponentsThanRequested) {
  const LabelMask m = from_points({4, 4, 4}, {{1, 1, 1}});
  EXPECT_EQ(keep_largest(m, 2), m);
  EXPECT_EQ(keep_largest(m, 0).count(), 0u);
  EXPECT_EQ(keep_largest(LabelMask({3, 3, 3}), 2).count(), 0u);
}

TEST(Connectivity, Parse) {
  EXPECT_EQ(parse_connectivity(6), Connectivity::six);
  EXPECT_EQ(parse_connectivity(26), Connectivity::twenty_six);
  EXPECT_THROW(parse_connectivity(18), std::invalid_argument);
}
