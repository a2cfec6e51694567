#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "toothseg/watershed.hpp"

using namespace toothseg;

namespace {

// Two discs on a 16x16 grid: radius 4 at (4.5, 4.5), radius 3 at (11.5, 11.5).
BinaryMask two_blobs() {
  BinaryMask m(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double a = std::hypot(x - 4.0, y - 4.0), b = std::hypot(x - 11.0, y - 11.0);
      if (a <= 3.5 || b <= 2.5) m(x, y) = 1;
    }
  }
  return m;
}

ScalarMap zeros_like(const BinaryMask& m) { return ScalarMap(m.width(), m.height(), 0.0F); }

}  // namespace

TEST(Boost, AutoAlphaIsDistanceMax) {
  ScalarMap dist(2, 1, std::vector<float>{1.0F, 3.0F});
  ScalarMap heat(2, 1, std::vector<float>{1.0F, 0.5F});
  const ScalarMap t = boost_topography(dist, heat, std::nullopt);
  EXPECT_FLOAT_EQ(t(0, 0), 4.0F);
  EXPECT_FLOAT_EQ(t(1, 0), 4.5F);
  const ScalarMap z = boost_topography(ScalarMap(2, 1, 0.0F), heat, std::nullopt);
  EXPECT_FLOAT_EQ(z(0, 0), 1.0F);
  const ScalarMap fixed = boost_topography(dist, heat, 2.0);
  EXPECT_FLOAT_EQ(fixed(1, 0), 4.0F);
}

TEST(Markers, TwoBlobsTwoKeypoints) {
  const BinaryMask fg = two_blobs();
  const ScalarMap dist = distance_transform(fg);
  const std::vector<Keypoint> kps{{4.5, 4.5, 1.0}, {11.5, 11.5, 1.0}};
  const MarkerSet ms = select_markers(dist, fg, kps, WatershedParams{});
  EXPECT_EQ(ms.tooth_count, 2u);
  EXPECT_EQ(ms.background_label, 3u);
  EXPECT_EQ(ms.labels(4, 4), 1u);  // taller peak first
  EXPECT_EQ(ms.labels(11, 11), 2u);
  EXPECT_EQ(ms.labels(0, 15), 3u);

  WatershedParams one;
  one.expected_count = 1;
  const MarkerSet single = select_markers(dist, fg, kps, one);
  EXPECT_EQ(single.tooth_count, 1u);
  EXPECT_EQ(single.labels(4, 4), 1u);
  EXPECT_EQ(single.labels(11, 11), 0u);
}

TEST(Markers, EmptyForeground) {
  const BinaryMask fg(8, 8);
  try {
    select_markers(zeros_like(fg), fg, {}, WatershedParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoForeground);
  }
}

TEST(Markers, PlateauIsOneMarker) {
  BinaryMask fg(9, 5, 1);
  ScalarMap topo(9, 5, 1.0F);
  topo(3, 2) = topo(4, 2) = topo(5, 2) = 5.0F;
  const MarkerSet ms = select_markers(topo, fg, {}, WatershedParams{});
  EXPECT_EQ(ms.tooth_count, 1u);
  EXPECT_EQ(ms.labels(3, 2), 1u);
  EXPECT_EQ(ms.labels(5, 2), 1u);
}

TEST(Markers, ShallowBumpIsNotAPeak) {
  BinaryMask fg(11, 1, 1);
  ScalarMap topo(11, 1, std::vector<float>{1, 2, 3, 4, 5, 4.5F, 4.8F, 3, 2, 1, 0.5F});
  EXPECT_EQ(select_markers(topo, fg, {}, WatershedParams{}).tooth_count, 1u);
  WatershedParams loose;
  loose.min_prominence = 0.0;
  EXPECT_EQ(select_markers(topo, fg, {}, loose).tooth_count, 2u);
}

TEST(Prominence, SimpleProfile) {
  BinaryMask fg(7, 1, 1);
  ScalarMap topo(7, 1, std::vector<float>{1, 5, 2, 3, 1, 4, 0});
  const ScalarMap p = peak_prominence(topo, fg);
  EXPECT_FLOAT_EQ(p(1, 0), 5.0F);
  EXPECT_FLOAT_EQ(p(3, 0), 1.0F);
  EXPECT_FLOAT_EQ(p(5, 0), 3.0F);
  EXPECT_FLOAT_EQ(p(2, 0), 0.0F);
}

TEST(Flood, TwoBlobsMatchHandLabels) {
  const BinaryMask fg = two_blobs();
  const ScalarMap dist = distance_transform(fg);
  const std::vector<Keypoint> kps{{4.5, 4.5, 1.0}, {11.5, 11.5, 1.0}};
  const MarkerSet ms = select_markers(dist, fg, kps, WatershedParams{});
  const LabelMap out = watershed_flood(dist, ms.labels, fg, Connectivity::Four, ms.background_label);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const std::uint32_t want = !fg(x, y) ? 3u : (x < 8 ? 1u : 2u);
      EXPECT_EQ(out(x, y), want) << x << "," << y;
    }
  }
  EXPECT_EQ(labels_to_mask(out, ms.background_label), fg);
}

TEST(Flood, SingleMarkerFillsBlob) {
  BinaryMask fg(6, 6);
  for (int y = 1; y < 5; ++y) {
    for (int x = 1; x < 4; ++x) fg(x, y) = 1;
  }
  LabelMap markers(6, 6, 0);
  markers(2, 2) = 1;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (!fg[i]) markers[i] = 2;
  }
  const LabelMap out = watershed_flood(distance_transform(fg), markers, fg, Connectivity::Four, 2);
  EXPECT_EQ(labels_to_mask(out, 2), fg);
}

TEST(Flood, AllMarkersIsIdentity) {
  std::mt19937_64 rng(41);
  LabelMap markers(7, 5);
  std::uniform_int_distribution<int> lab(1, 4);
  for (auto& v : markers.pixels()) v = static_cast<std::uint32_t>(lab(rng));
  const BinaryMask fg(7, 5, 1);
  EXPECT_EQ(watershed_flood(ScalarMap(7, 5, 0.0F), markers, fg, Connectivity::Eight), markers);
}

TEST(Flood, NoMarkers) {
  const BinaryMask fg(4, 4, 1);
  try {
    watershed_flood(ScalarMap(4, 4, 0.0F), LabelMap(4, 4, 0), fg, Connectivity::Four);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoMarkers);
  }
}

TEST(Flood, MatchesNaivePriorityFlood) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<float> u(0.0F, 4.0F);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 14, h = 11;
    ScalarMap topo(w, h);
    // Coarse levels force plenty of ties, which exercises the FIFO rule.
    for (auto& v : topo.pixels()) v = std::floor(u(rng));
    const BinaryMask fg = oracle::random_mask(rng, w, h, 0.7);
    LabelMap markers(w, h, 0);
    std::uniform_int_distribution<int> px(0, w * h - 1);
    for (std::uint32_t k = 1; k <= 3; ++k) markers[static_cast<std::size_t>(px(rng))] = k;
    const bool eight = trial % 2 == 1;
    const Connectivity conn = eight ? Connectivity::Eight : Connectivity::Four;
    const std::uint32_t bg = trial % 3 == 0 ? 0u : 4u;
    if (bg) {
      for (std::size_t i = 0; i < fg.size(); ++i) {
        if (!fg[i] && !markers[i]) markers[i] = bg;
      }
    }
    EXPECT_EQ(watershed_flood(topo, markers, fg, conn, bg), oracle::naive_flood(topo, markers, fg, eight, bg))
        << "trial " << trial;
  }
}

TEST(Watershed, ZeroHeatmapIsClassicalMarkerWatershed) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const BinaryMask fg = oracle::random_blobs(rng, 24, 20, 4, 2.5, 5.0);
    if (count_foreground(fg) == 0) continue;
    std::uint32_t count = 0;
    const LabelMap expected = oracle::classical_marker_watershed(fg, 0.2, &count);

    WatershedParams p;
    p.min_prominence = 0.0;
    const ScalarMap topo = boost_topography(distance_transform(fg), zeros_like(fg), p.alpha);
    const MarkerSet ms = select_markers(topo, fg, {}, p);
    EXPECT_EQ(ms.tooth_count, count);
    EXPECT_EQ(watershed_flood(topo, ms.labels, fg, p.connectivity, ms.background_label), expected);
  }
}

TEST(Watershed, LabelsRoundTripThroughComponents) {
  std::mt19937_64 rng(44);
  const BinaryMask fg = two_blobs();
  const Components c = connected_components(fg, Connectivity::Four);
  EXPECT_EQ(labels_to_mask(c.labels, c.count + 1), fg);
  EXPECT_EQ(count_foreground(labels_to_mask(LabelMap(4, 4, 7), 7)), 0u);
}

TEST(Watershed, ValidateParams) {
  WatershedParams p;
  p.peak_fraction = 0.0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.expected_count = 0;
  EXPECT_THROW(validate(p), Error);
}
