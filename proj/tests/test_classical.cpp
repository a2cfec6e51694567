#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "toothseg/classical.hpp"
#include "toothseg/inpaint.hpp"

using namespace toothseg;

namespace {

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

BinaryMask from_rows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) m(x, y) = rows[y][x] == '#' ? 1 : 0;
  }
  return m;
}

}  // namespace

TEST(Otsu, TwoLevelsTieGoesLow) {
  Histogram h{};
  h[0] = 4;
  h[255] = 4;
  EXPECT_EQ(otsu_threshold(h), 0);
}

TEST(Otsu, SkewedTwoLevels) {
  Histogram h{};
  h[50] = 90;
  h[200] = 10;
  EXPECT_EQ(otsu_threshold(h), oracle::otsu_scan(h));
  EXPECT_EQ(otsu_threshold(h), 50);
}

TEST(Otsu, ConstantInputThrows) {
  const GrayImage img(4, 4, 128);
  try {
    otsu_threshold(img);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConstantInput);
  }
}

TEST(Otsu, MatchesExhaustiveScan) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 150; ++trial) {
    Histogram h{};
    std::uniform_int_distribution<int> bins(2, 12), bin(0, 255), count(1, 1000);
    const int k = bins(rng);
    for (int i = 0; i < k; ++i) h[bin(rng)] += count(rng);
    if (oracle::otsu_scan(h) < 0) continue;
    EXPECT_EQ(otsu_threshold(h), oracle::otsu_scan(h)) << "trial " << trial;
  }
}

TEST(Morphology, CloseFillsSinglePixelHole) {
  BinaryMask m(5, 5, 1);
  m(2, 2) = 0;
  const BinaryMask closed = morphology(m, MorphOp::Close, {SeShape::Square, 1});
  EXPECT_EQ(count_foreground(closed), 25u);
}

TEST(Morphology, EmptyStaysEmpty) {
  const BinaryMask m(6, 4);
  for (MorphOp op : {MorphOp::Dilate, MorphOp::Erode, MorphOp::Close, MorphOp::Open}) {
    EXPECT_EQ(count_foreground(morphology(m, op, {SeShape::Disk, 2})), 0u);
  }
}

TEST(Morphology, KnownDilation) {
  const BinaryMask m = from_rows({".....", ".....", "..#..", ".....", "....."});
  EXPECT_EQ(dilate(m, {SeShape::Square, 1}), from_rows({".....", ".###.", ".###.", ".###.", "....."}));
  EXPECT_EQ(dilate(m, {SeShape::Disk, 1}), from_rows({".....", "..#..", ".###.", "..#..", "....."}));
}

TEST(Morphology, OrderingProperties) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, 17, 13, 0.5);
    const StructuringElement se{trial % 2 ? SeShape::Disk : SeShape::Square, 1 + trial % 3};
    const BinaryMask d = dilate(m, se), e = erode(m, se), c = morphology(m, MorphOp::Close, se);
    EXPECT_TRUE(subset(m, d));
    EXPECT_TRUE(subset(e, m));
    EXPECT_TRUE(subset(m, c));
    EXPECT_EQ(morphology(c, MorphOp::Close, se), c);
    EXPECT_TRUE(subset(morphology(m, MorphOp::Open, se), m));
  }
}

TEST(Morphology, DiskMatchesDirectDefinition) {
  std::mt19937_64 rng(23);
  const BinaryMask m = oracle::random_mask(rng, 12, 12, 0.2);
  const int r = 2;
  const BinaryMask d = dilate(m, {SeShape::Disk, r});
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) {
      bool any = false;
      for (int yy = 0; yy < 12; ++yy) {
        for (int xx = 0; xx < 12; ++xx) {
          if (m(xx, yy) && (xx - x) * (xx - x) + (yy - y) * (yy - y) <= r * r) any = true;
        }
      }
      EXPECT_EQ(d(x, y) != 0, any);
    }
  }
}

TEST(FillHoles, RingBecomesDisk) {
  const BinaryMask ring = from_rows({".......", ".#####.", ".#...#.", ".#...#.", ".#...#.", ".#####.", "......."});
  const BinaryMask solid = from_rows({".......", ".#####.", ".#####.", ".#####.", ".#####.", ".#####.", "......."});
  EXPECT_EQ(fill_holes(ring), solid);
}

TEST(FillHoles, Trivial) {
  const BinaryMask blob = from_rows({"....", ".##.", ".##.", "...."});
  EXPECT_EQ(fill_holes(blob), blob);
  EXPECT_EQ(count_foreground(fill_holes(BinaryMask(5, 5))), 0u);
}

TEST(FillHoles, DiagonalGapIsNotAnOpening) {
  // The interior touches the outside only through a diagonal step.
  const BinaryMask m = from_rows({"#####", "#...#", "#...#", "#..##", "###.#"});
  EXPECT_EQ(count_foreground(fill_holes(m)), count_foreground(m) + 8);
}

TEST(FillHoles, NeverRemovesForeground) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, 15, 11, 0.55);
    const BinaryMask f = fill_holes(m);
    EXPECT_TRUE(subset(m, f));
    EXPECT_EQ(fill_holes(f), f);
  }
}

TEST(Components, FourVersusEight) {
  const BinaryMask m = from_rows({"#.#", ".#.", "#.#"});
  EXPECT_EQ(connected_components(m, Connectivity::Four).count, 5u);
  EXPECT_EQ(connected_components(m, Connectivity::Eight).count, 1u);
}

TEST(Components, LabelsAreContiguousAndFirstEncounter) {
  const BinaryMask m = from_rows({"..##", "#...", "#..#"});
  const Components c = connected_components(m, Connectivity::Four);
  EXPECT_EQ(c.count, 3u);
  EXPECT_EQ(c.labels(2, 0), 1u);
  EXPECT_EQ(c.labels(0, 1), 2u);
  EXPECT_EQ(c.labels(3, 2), 3u);
}

TEST(DistanceTransform, MatchesBruteForce) {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_real_distribution<double> dens(0.3, 0.98);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, dim(rng), dim(rng), dens(rng));
    EXPECT_EQ(squared_distance_transform(m), oracle::brute_force_sq_edt(m)) << "trial " << trial;
  }
}

TEST(DistanceTransform, FullMaskUsesImageBorder) {
  const BinaryMask m(5, 3, 1);
  const auto d = squared_distance_transform(m);
  EXPECT_EQ(d(2, 1), 4);
  EXPECT_EQ(d(0, 0), 1);
  EXPECT_FLOAT_EQ(distance_transform(m)(2, 1), 2.0F);
}

TEST(Inpaint, ConstantImageRestored) {
  ImageRGB img(20, 20, Rgb{100, 100, 100});
  BinaryMask spots(20, 20);
  for (int y = 7; y < 12; ++y) {
    for (int x = 8; x < 13; ++x) {
      spots(x, y) = 1;
      img(x, y) = {255, 255, 255};
    }
  }
  for (InpaintMethod method : {InpaintMethod::Harmonic, InpaintMethod::NavierStokes}) {
    InpaintConfig cfg;
    cfg.method = method;
    const ImageRGB out = inpaint(img, spots, cfg);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 20; ++x) {
        EXPECT_LE(std::abs(out(x, y).r - 100), 2);
        EXPECT_LE(std::abs(out(x, y).b - 100), 2);
      }
    }
  }
}

TEST(Inpaint, HarmonicReproducesRamp) {
  ImageRGB img(32, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 32; ++x) {
      const auto v = static_cast<std::uint8_t>(40 + 5 * x);
      img(x, y) = {v, v, v};
    }
  }
  const ImageRGB truth = img;
  BinaryMask spots(32, 16);
  for (int y = 5; y < 10; ++y) {
    for (int x = 12; x < 18; ++x) {
      spots(x, y) = 1;
      img(x, y) = {250, 0, 250};
    }
  }
  InpaintConfig cfg;
  cfg.method = InpaintMethod::Harmonic;
  cfg.iterations = 500;
  const ImageRGB out = inpaint(img, spots, cfg);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 32; ++x) {
      EXPECT_LE(std::abs(out(x, y).g - truth(x, y).g), 3) << x << "," << y;
    }
  }
}

TEST(Inpaint, OnlySpotPixelsChange) {
  std::mt19937_64 rng(26);
  std::uniform_int_distribution<int> byte(0, 255);
  ImageRGB img(24, 18);
  for (auto& px : img.pixels()) {
    px = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
          static_cast<std::uint8_t>(byte(rng))};
  }
  const BinaryMask spots = oracle::random_blobs(rng, 24, 18, 3, 1.0, 3.0);
  const ImageRGB out = inpaint(img, spots, InpaintConfig{});
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!spots[i]) EXPECT_EQ(out[i], img[i]);
  }
}

TEST(Inpaint, ErrorCases) {
  const ImageRGB img(4, 4, Rgb{1, 2, 3});
  try {
    inpaint(img, BinaryMask(4, 4, 1), InpaintConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpotTouchesFullImage);
  }
  EXPECT_EQ(inpaint(img, BinaryMask(4, 4), InpaintConfig{}), img);
  EXPECT_THROW(inpaint(img, BinaryMask(3, 4), InpaintConfig{}), Error);
  InpaintConfig bad;
  bad.dt = 0.0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Inpaint, DetectsSaturatedSpots) {
  ImageRGB img(9, 9, Rgb{120, 80, 80});
  img(4, 4) = {250, 248, 245};
  img(0, 0) = {255, 255, 200};  // one channel below threshold
  InpaintConfig cfg;
  cfg.spot_dilation = 1;
  const BinaryMask s = detect_bright_spots(img, cfg);
  EXPECT_EQ(count_foreground(s), 9u);
  EXPECT_EQ(s(0, 0), 0);
}
