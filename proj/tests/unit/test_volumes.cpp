#include <gtest/gtest.h>

#include "hipseg/common/random.hpp"
#include "hipseg/volumes/orientation.hpp"
#include "hipseg/volumes/slicing.hpp"

using namespace hipseg;

namespace {

Volume random_volume(Extent3 e, std::uint64_t seed, const char* axes = "RAS") {
  Volume v;
  v.data = Grid3<float>(e);
  Rng rng(seed);
  for (auto& x : v.data.values()) x = static_cast<float>(uniform(rng, -3, 5));
  v.axes = AxisCode::parse(axes);
  v.source = "random.nii";
  return v;
}

}  // namespace

TEST(Normalize, AffineEndpoints) {
  Volume v;
  v.data = Grid3<float>({3, 1, 1}, std::vector<float>{2, 4, 6});
  const Volume n = normalize_minmax(v);
  EXPECT_EQ(n.data.storage(), (std::vector<float>{0.0f, 0.5f, 1.0f}));
}

TEST(Normalize, ConstantBecomesZero) {
  Volume v;
  v.data = Grid3<float>({4, 3, 2}, 7.0f);
  const Volume n = normalize_minmax(v);
  for (float x : n.data.values()) EXPECT_EQ(x, 0.0f);
}

TEST(Normalize, AlreadyNormalizedUnchanged) {
  Volume v;
  v.data = Grid3<float>({2, 1, 1}, std::vector<float>{0, 1});
  EXPECT_EQ(normalize_minmax(v).data, v.data);
}

TEST(Normalize, IdempotentOnRandomVolumes) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Volume once = normalize_minmax(random_volume({7, 5, 6}, s));
    const Volume twice = normalize_minmax(once);
    EXPECT_EQ(once.data, twice.data);
    const auto [lo, hi] = std::minmax_element(once.data.values().begin(), once.data.values().end());
    EXPECT_EQ(*lo, 0.0f);
    EXPECT_EQ(*hi, 1.0f);
  }
}

TEST(Canonical, IdentityForCanonicalInput) {
  const Volume v = random_volume({5, 6, 7}, 1);
  const auto r = to_canonical(v);
  EXPECT_TRUE(r.transform.is_identity());
  EXPECT_EQ(r.volume.data, v.data);
}

TEST(Canonical, SwappedAxesRoundTrip) {
  // array axis 0 runs superior, axis 2 runs right
  Volume v = random_volume({4, 6, 9}, 2, "SAR");
  v.spacing = {3.0, 2.0, 1.0};
  const auto r = to_canonical(v);
  EXPECT_EQ(r.volume.extent(), (Extent3{9, 6, 4}));
  EXPECT_EQ(r.volume.spacing, (Spacing3{1.0, 2.0, 3.0}));
  EXPECT_EQ(r.volume.data(8, 5, 3), v.data(3, 5, 8));
  EXPECT_EQ(r.transform.invert(r.volume.data), v.data);
}

TEST(Canonical, FlippedAxisReversesData) {
  const Volume v = random_volume({5, 4, 3}, 3, "LAS");
  const auto r = to_canonical(v);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.volume.data(i, 1, 2), v.data(4 - i, 1, 2));
  EXPECT_EQ(r.transform.invert(r.volume.data), v.data);
  // applying the flip twice is the identity
  const auto again = r.transform.apply(r.transform.apply(v.data));
  EXPECT_EQ(again, v.data);
}

TEST(Canonical, RoundTripAllAxisCodes) {
  const std::string letters[3] = {"RL", "AP", "SI"};
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::uint64_t seed = 10;
  for (const auto& perm : perms)
    for (int flips = 0; flips < 8; ++flips) {
      std::string code;
      for (int i = 0; i < 3; ++i) code += letters[perm[i]][(flips >> i) & 1];
      const Volume v = random_volume({3, 4, 5}, seed++, code.c_str());
      LabelMask m(v.extent());
      m.data(1, 2, 3) = 1;
      const auto r = to_canonical(v, m);
      EXPECT_EQ(r.transform.invert(r.volume.data), v.data) << code;
      EXPECT_EQ(r.transform.invert(r.mask->data), m.data) << code;
    }
}

TEST(Canonical, MissingMetadataNamesFile) {
  Volume v = random_volume({3, 3, 3}, 4);
  v.axes.reset();
  v.source = "subject_07.nii.gz";
  try {
    to_canonical(v);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("subject_07.nii.gz"), std::string::npos);
  }
}

TEST(Canonical, AmbiguousAxesNameFile) {
  Volume v = random_volume({3, 3, 3}, 5, "RLS");
  v.source = "bad.nii";
  try {
    to_canonical(v);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("bad.nii"), std::string::npos);
  }
}

TEST(Triplet, InteriorChannelsAreNeighbourSlices) {
  const Volume v = random_volume({6, 7, 8}, 6);
  for (Orientation o : kOrientations) {
    const auto t = extract_slice_triplet(v, {o, 2});
    for (int ch = 0; ch < 3; ++ch) {
      const auto s = extract_slice(v.data, o, 1 + ch);
      for (int r = 0; r < s.rows(); ++r)
        for (int c = 0; c < s.cols(); ++c) EXPECT_EQ(t(ch, r, c), s(0, r, c));
    }
  }
}

TEST(Triplet, EdgesReplicate) {
  const Volume v = random_volume({6, 7, 8}, 7);
  for (Orientation o : kOrientations) {
    const int n = v.extent()[static_cast<std::size_t>(axis_of(o))];
    const auto first = extract_slice_triplet(v, {o, 0});
    const auto last = extract_slice_triplet(v, {o, n - 1});
    EXPECT_TRUE(std::equal(first.channel(0).begin(), first.channel(0).end(), first.channel(1).begin()));
    EXPECT_TRUE(std::equal(last.channel(2).begin(), last.channel(2).end(), last.channel(1).begin()));
  }
}

TEST(Triplet, ZeroEdgeMode) {
  const Volume v = random_volume({6, 7, 8}, 8);
  const auto t = extract_slice_triplet(v, {Orientation::axial, 0}, EdgeMode::zero);
  for (float x : t.channel(0)) EXPECT_EQ(x, 0.0f);
}

TEST(Triplet, CentreChannelIsRawSlice) {
  const Volume v = random_volume({5, 9, 4}, 9);
  for (Orientation o : kOrientations) {
    const int n = v.extent()[static_cast<std::size_t>(axis_of(o))];
    for (int i = 0; i < n; ++i) {
      const auto t = extract_slice_triplet(v, {o, i});
      const auto s = extract_slice(v.data, o, i);
      EXPECT_TRUE(std::equal(s.values().begin(), s.values().end(), t.channel(1).begin()));
    }
  }
}

TEST(Triplet, InvalidIndexThrows) {
  const Volume v = random_volume({4, 4, 4}, 10);
  EXPECT_THROW(extract_slice_triplet(v, {Orientation::coronal, 4}), std::out_of_range);
  EXPECT_THROW(extract_slice_triplet(v, {Orientation::coronal, -1}), std::out_of_range);
}

TEST(CropPad, Identity) {
  Planes<int> img(1, 10, 10);
  for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] = static_cast<int>(i);
  const auto [out, p] = center_crop_pad(img, 10, 10);
  EXPECT_EQ(out, img);
}

TEST(CropPad, CropTakesCentralWindow) {
  Planes<int> img(1, 12, 12);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 12; ++c) img(0, r, c) = r * 100 + c;
  const auto [out, p] = center_crop_pad(img, 8, 8);
  EXPECT_EQ(p.src_row0, 2);
  EXPECT_EQ(p.src_col0, 2);
  EXPECT_EQ(out(0, 0, 0), 202);
  EXPECT_EQ(out(0, 7, 7), 909);
}

TEST(CropPad, PadAddsZeroBorder) {
  Planes<int> img(1, 6, 6, 5);
  const auto [out, p] = center_crop_pad(img, 8, 8);
  EXPECT_EQ(p.dst_row0, 1);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const bool inside = r >= 1 && r <= 6 && c >= 1 && c <= 6;
      EXPECT_EQ(out(0, r, c), inside ? 5 : 0);
    }
}

TEST(CropPad, RestoreRecoversOverlap) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + static_cast<int>(uniform_index(rng, 20)), cols = 1 + static_cast<int>(uniform_index(rng, 20));
    const int tr = 1 + static_cast<int>(uniform_index(rng, 20)), tc = 1 + static_cast<int>(uniform_index(rng, 20));
    Planes<float> img(2, rows, cols);
    for (auto& x : img.values()) x = static_cast<float>(uniform(rng, 1, 2));
    const auto [out, p] = center_crop_pad(img, tr, tc);
    const auto back = restore_placement(out, p);
    for (int ch = 0; ch < 2; ++ch)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const bool kept = r >= p.src_row0 && r < p.src_row0 + p.copy_rows && c >= p.src_col0 && c < p.src_col0 + p.copy_cols;
          EXPECT_EQ(back(ch, r, c), kept ? img(ch, r, c) : 0.0f);
        }
  }
}
