#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "toothseg/hungarian.hpp"
#include "toothseg/keypoint_io.hpp"
#include "toothseg/keypoints.hpp"

using namespace toothseg;

TEST(Hungarian, SquareExample) {
  const CostMatrix c(3, 3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
  const Assignment a = hungarian(c);
  EXPECT_DOUBLE_EQ(a.total_cost, 5.0);  // (0,1) (1,0) (2,2)
  ASSERT_EQ(a.pairs.size(), 3u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(a.pairs[1], std::make_pair(1, 0));
  EXPECT_EQ(a.pairs[2], std::make_pair(2, 2));
}

TEST(Hungarian, RectangularBothWays) {
  const CostMatrix wide(2, 3, {5, 1, 9, 1, 7, 9});
  EXPECT_DOUBLE_EQ(hungarian(wide).total_cost, 2.0);
  const CostMatrix tall(3, 2, {5, 1, 1, 7, 9, 9});
  const Assignment a = hungarian(tall);
  EXPECT_DOUBLE_EQ(a.total_cost, 2.0);
  EXPECT_EQ(a.pairs.size(), 2u);
}

TEST(Hungarian, EmptyAndNonFinite) {
  EXPECT_TRUE(hungarian(CostMatrix(0, 4)).pairs.empty());
  CostMatrix c(2, 2, 1.0);
  c(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(hungarian(c), Error);
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng), m = dim(rng);
    CostMatrix c(n, m);
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < m; ++k) c(r, k) = std::round(val(rng));
    }
    const Assignment a = hungarian(c);
    EXPECT_DOUBLE_EQ(a.total_cost, oracle::brute_force_assignment(c));
    EXPECT_EQ(static_cast<int>(a.pairs.size()), std::min(n, m));
    double sum = 0.0;
    std::vector<int> used_cols;
    for (const auto& [r, k] : a.pairs) {
      sum += c(r, k);
      used_cols.push_back(k);
    }
    EXPECT_DOUBLE_EQ(sum, a.total_cost);
    std::sort(used_cols.begin(), used_cols.end());
    EXPECT_EQ(std::adjacent_find(used_cols.begin(), used_cols.end()), used_cols.end());
  }
}

TEST(Heatmap, PeakAtKeypointCell) {
  const std::vector<Keypoint> kps{{10.0, 6.0, 1.0}};
  const HeatmapBundle b = render_heatmap(kps, 8, 8, 4, 1.0);
  EXPECT_FLOAT_EQ(b.heatmap(2, 1), 1.0F);
  EXPECT_FLOAT_EQ(b.offset_x(2, 1), 0.5F);
  EXPECT_FLOAT_EQ(b.offset_y(2, 1), 0.5F);
  for (float v : b.heatmap.pixels()) {
    EXPECT_GE(v, 0.0F);
    EXPECT_LE(v, 1.0F);
  }
}

TEST(Heatmap, OutOfBoundsKeypoint) {
  const std::vector<Keypoint> kps{{32.0, 1.0, 1.0}};
  try {
    render_heatmap(kps, 8, 8, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KeypointOutOfBounds);
  }
}

TEST(Heatmap, RoundTripWellSeparated) {
  std::mt19937_64 rng(12);
  const double sigma = 2.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 256.0);
    std::vector<Keypoint> kps;
    for (int attempt = 0; attempt < 400 && kps.size() < 8; ++attempt) {
      const Keypoint k{u(rng), u(rng), 1.0};
      bool ok = true;
      for (const Keypoint& o : kps) {
        // Separation in heatmap cells must exceed 6 sigma.
        if (std::hypot(k.x - o.x, k.y - o.y) / 4.0 <= 6.0 * sigma + 1.0) ok = false;
      }
      if (ok) kps.push_back(k);
    }
    const HeatmapBundle b = render_heatmap(kps, 64, 64, 4, sigma);
    const auto found = decode_heatmap(b, 0.3, 32);
    ASSERT_EQ(found.size(), kps.size());
    const MatchResult m = match_keypoints(found, kps);
    for (const MatchPair& p : m.pairs) EXPECT_LE(p.distance, 0.5);
  }
}

TEST(Decode, PlateauYieldsFirstCell) {
  HeatmapBundle b;
  b.heatmap = ScalarMap(5, 5, 0.0F);
  b.offset_x = ScalarMap(5, 5, 0.0F);
  b.offset_y = ScalarMap(5, 5, 0.0F);
  b.stride = 1;
  b.heatmap(2, 2) = b.heatmap(3, 2) = b.heatmap(3, 3) = 0.8F;
  const auto kps = decode_heatmap(b, 0.3, 10);
  ASSERT_EQ(kps.size(), 1u);
  EXPECT_DOUBLE_EQ(kps[0].x, 2.0);
  EXPECT_DOUBLE_EQ(kps[0].y, 2.0);
}

TEST(Decode, ThresholdAndCap) {
  HeatmapBundle b;
  b.heatmap = ScalarMap(9, 1, 0.0F);
  b.offset_x = b.offset_y = ScalarMap(9, 1, 0.0F);
  b.stride = 2;
  b.heatmap(0, 0) = 0.2F;
  b.heatmap(3, 0) = 0.9F;
  b.heatmap(6, 0) = 0.5F;
  b.heatmap(8, 0) = 0.7F;
  const auto all = decode_heatmap(b, 0.3, 32);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_DOUBLE_EQ(all[0].x, 6.0);
  EXPECT_DOUBLE_EQ(all[1].x, 16.0);
  EXPECT_NEAR(all[2].score, 0.5, 1e-6);
  EXPECT_EQ(decode_heatmap(b, 0.3, 2).size(), 2u);
}

TEST(Match, SymmetricUnderSwap) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Keypoint> a(trial % 5 + 1), b(trial % 7 + 2);
    for (auto& k : a) k = {u(rng), u(rng), 1.0};
    for (auto& k : b) k = {u(rng), u(rng), 1.0};
    const MatchResult ab = match_keypoints(a, b);
    const MatchResult ba = match_keypoints(b, a);
    EXPECT_EQ(ab.unmatched_pred, ba.unmatched_gt);
    EXPECT_EQ(ab.unmatched_gt, ba.unmatched_pred);
    std::vector<double> da, db;
    for (const auto& p : ab.pairs) da.push_back(p.distance);
    for (const auto& p : ba.pairs) db.push_back(p.distance);
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    ASSERT_EQ(da.size(), db.size());
    for (std::size_t i = 0; i < da.size(); ++i) EXPECT_NEAR(da[i], db[i], 1e-9);
  }
}

TEST(Stats, MeanAndMedian) {
  const std::vector<double> odd{3, 4, 8};
  EXPECT_DOUBLE_EQ(distance_stats(odd).mean, 5.0);
  EXPECT_DOUBLE_EQ(distance_stats(odd).median, 4.0);
  const std::vector<double> even{2, 4};
  EXPECT_DOUBLE_EQ(distance_stats(even).mean, 3.0);
  EXPECT_DOUBLE_EQ(distance_stats(even).median, 3.0);
  EXPECT_THROW(distance_stats(std::vector<double>{}), Error);
}

TEST(Sweep, SinglePairAtDistanceFive) {
  MatchResult m;
  m.pairs.push_back({0, 0, 5.0});
  const ThresholdSweep s = threshold_sweep(m, 29);
  ASSERT_EQ(s.thresholds.size(), 30u);
  for (int t = 0; t <= 29; ++t) {
    const double want = t >= 6 ? 1.0 : 0.0;
    EXPECT_EQ(s.precision[t], want);
    EXPECT_EQ(s.recall[t], want);
    EXPECT_EQ(s.f1[t], want);
  }
}

TEST(Sweep, EmptyPredictions) {
  MatchResult m;
  m.unmatched_gt = {0, 1};
  const ThresholdSweep s = threshold_sweep(m, 5);
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    EXPECT_EQ(s.precision[i], 0.0);
    EXPECT_EQ(s.recall[i], 0.0);
    EXPECT_EQ(s.f1[i], 0.0);
  }
}

TEST(Sweep, RecallMonotoneAndF1Consistent) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Keypoint> a(trial % 6 + 1), b(trial % 4 + 1);
    for (auto& k : a) k = {u(rng), u(rng), 1.0};
    for (auto& k : b) k = {u(rng), u(rng), 1.0};
    const ThresholdSweep s = threshold_sweep(match_keypoints(a, b), 29);
    EXPECT_EQ(s.precision[0], 0.0);
    for (std::size_t t = 1; t < s.recall.size(); ++t) EXPECT_GE(s.recall[t], s.recall[t - 1]);
    for (std::size_t t = 0; t < s.f1.size(); ++t) {
      const double p = s.precision[t], r = s.recall[t];
      EXPECT_NEAR(s.f1[t], p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
    }
  }
}

TEST(KeypointIo, JsonRoundTrip) {
  const std::vector<KeypointSet> sets{{"a", {{1.5, 2.25, 1.0}}}, {"b", {}}};
  const auto back = keypoint_sets_from_json(keypoint_sets_to_json(sets));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].image_id, "a");
  EXPECT_DOUBLE_EQ(back[0].keypoints[0].y, 2.25);
  EXPECT_TRUE(back[1].keypoints.empty());
}

TEST(KeypointIo, RejectsMalformed) {
  EXPECT_THROW(keypoint_sets_from_json(Json::parse(R"({"imgs":[]})")), Error);
  EXPECT_THROW(keypoint_sets_from_json(Json::parse(R"({"images":[{"image_id":"a","keypoints":[[1]]}]})")), Error);
}
