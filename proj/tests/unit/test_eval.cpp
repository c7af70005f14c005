#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "foj/eval.hpp"
#include "foj/rng.hpp"

namespace foj {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Dataset, Deterministic) {
  for (int type = 1; type <= 3; ++type) {
    const DatasetItem a = generate_item(type, 9, 4);
    const DatasetItem b = generate_item(type, 9, 4);
    EXPECT_TRUE(std::equal(a.image.data().begin(), a.image.data().end(), b.image.data().begin()));
    EXPECT_EQ(a.truth.boundary, b.truth.boundary);
    const DatasetItem c = generate_item(type, 10, 4);
    EXPECT_FALSE(std::equal(a.image.data().begin(), a.image.data().end(), c.image.data().begin()));
  }
}

TEST(Dataset, TypeThreeStructure) {
  for (int i = 0; i < 20; ++i) {
    const DatasetItem item = generate_item(3, 1, i);
    EXPECT_EQ(item.image.width(), kDatasetImageSize);
    std::set<double> levels(item.image.data().begin(), item.image.data().end());
    EXPECT_EQ(levels, (std::set<double>{0.0, 85.0 / 255, 170.0 / 255, 1.0}));
    ASSERT_EQ(item.truth.vertices.size(), 2u);
    const Point a = item.truth.vertices[0].position, b = item.truth.vertices[1].position;
    const double length = std::hypot(a.x - b.x, a.y - b.y);
    EXPECT_GE(length, 24.0 - 1e-9);
    EXPECT_LE(length, 32.0 + 1e-9);
    for (const auto& v : item.truth.vertices) {
      EXPECT_EQ(v.angles.size(), 3u);
      EXPECT_GE(std::min({v.position.x, v.position.y, 63 - v.position.x, 63 - v.position.y}), 14.0 - 1e-9);
    }
  }
}

TEST(Dataset, AxisAlignedSquare) {
  const Square s{{20.0, 20.0}, 10.0, 0.0, 1.0};
  const DatasetItem item = render_squares(40, 40, std::span<const Square>(&s, 1));
  int inside = 0;
  for (double v : item.image.data()) inside += v > 0.5;
  // Centers strictly inside [15, 25]² plus the boundary row/column ties.
  EXPECT_GE(inside, 100);
  EXPECT_LE(inside, 121);
  EXPECT_TRUE(item.truth.is_boundary(15, 20));
  EXPECT_FALSE(item.truth.is_boundary(20, 20));
  EXPECT_EQ(item.truth.vertices.size(), 4u);
}

TEST(Dataset, BlobTruthIsOnRadius) {
  const Blob b{{30.0, 30.0}, 12.0, 0.1, 0.3, 0.05, 1.0, 1.0};
  const DatasetItem item = render_blobs(60, 60, std::span<const Blob>(&b, 1));
  EXPECT_TRUE(item.truth.vertices.empty());
  const int x = int(std::lround(30.0 + b.radius(0.0)));
  EXPECT_TRUE(item.truth.is_boundary(x, 30));
  EXPECT_FALSE(item.truth.is_boundary(30, 30));
}

TEST(Noise, MeanAndSpread) {
  const Image clean(100, 100, 1, 0.5);
  const Image noisy = add_noise(clean, 0.2, 42);
  double mean = 0.0, sq = 0.0;
  for (double v : noisy.data()) mean += v - 0.5, sq += (v - 0.5) * (v - 0.5);
  mean /= 1e4;
  const double sd = std::sqrt(sq / 1e4 - mean * mean);
  EXPECT_LT(std::abs(mean), 4 * 0.2 / 100);  // 4 standard errors
  EXPECT_NEAR(sd, 0.2, 0.01);
  const Image again = add_noise(clean, 0.2, 42);
  EXPECT_TRUE(std::equal(noisy.data().begin(), noisy.data().end(), again.data().begin()));
}

// Maximum matching by exhaustive search over assignments (tiny inputs only).
int exhaustive_matching(const std::vector<Point>& p, const std::vector<Point>& t, double dist,
                        std::size_t i = 0, std::vector<bool>* used = nullptr) {
  std::vector<bool> local(t.size(), false);
  if (!used) used = &local;
  if (i == p.size()) return 0;
  int best = exhaustive_matching(p, t, dist, i + 1, used);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if ((*used)[j] || std::hypot(p[i].x - t[j].x, p[i].y - t[j].y) > dist) continue;
    (*used)[j] = true;
    best = std::max(best, 1 + exhaustive_matching(p, t, dist, i + 1, used));
    (*used)[j] = false;
  }
  return best;
}

TEST(BoundaryMatching, MatchesExhaustiveOracle) {
  Rng rng(3);
  const int w = 6, h = 5;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> pred(w * h), truth(w * h);
    std::vector<Point> pp, tp;
    for (int i = 0; i < w * h; ++i) {
      pred[i] = rng.uniform() < 0.2;
      truth[i] = rng.uniform() < 0.2;
      if (pred[i]) pp.push_back({double(i % w), double(i / w)});
      if (truth[i]) tp.push_back({double(i % w), double(i / w)});
    }
    if (pp.size() > 8 || tp.size() > 8) continue;
    const double dist = 1.5;
    const Scores s = match_boundaries(pred, truth, w, h, dist);
    const int m = exhaustive_matching(pp, tp, dist);
    const double precision = pp.empty() ? 0.0 : double(m) / pp.size();
    const double recall = tp.empty() ? 0.0 : double(m) / tp.size();
    if (!pp.empty()) EXPECT_NEAR(s.precision, precision, 1e-12);
    if (!tp.empty()) EXPECT_NEAR(s.recall, recall, 1e-12);
    if (precision + recall > 0) EXPECT_NEAR(s.f, 2 * precision * recall / (precision + recall), 1e-12);
  }
}

TEST(BoundaryMatching, SymmetricAndMonotoneInDistance) {
  Rng rng(4);
  const int w = 20, h = 20;
  std::vector<std::uint8_t> a(w * h), b(w * h);
  for (int i = 0; i < w * h; ++i) a[i] = rng.uniform() < 0.1, b[i] = rng.uniform() < 0.1;
  const Scores ab = match_boundaries(a, b, w, h, 2.0), ba = match_boundaries(b, a, w, h, 2.0);
  EXPECT_NEAR(ab.f, ba.f, 1e-12);
  EXPECT_NEAR(ab.precision, ba.recall, 1e-12);
  double last = -1.0;
  for (double d : {0.0, 1.0, 1.5, 2.0, 3.0, 5.0}) {
    const double f = match_boundaries(a, b, w, h, d).f;
    EXPECT_GE(f, last);
    last = f;
  }
  EXPECT_DOUBLE_EQ(match_boundaries(a, a, w, h, 0.0).f, 1.0);
}

TEST(BoundaryFscore, PerfectMapScoresOne) {
  const DatasetItem item = generate_item(2, 3, 0);
  ScalarMap map(item.truth.width, item.truth.height);
  for (int i = 0; i < int(map.values.size()); ++i) map.values[i] = item.truth.boundary[i] ? 0.95 : 0.02;
  const BestScores best = best_boundary_fscore(map, item.truth, 2.0);
  EXPECT_DOUBLE_EQ(best.scores.f, 1.0);
  EXPECT_DOUBLE_EQ(best.threshold, 0.1);
}

TEST(VertexFscore, Examples) {
  const std::vector<Point> truth{{10, 10}, {30, 10}};
  const std::vector<Point> all{{10.5, 10}, {29, 11}};
  EXPECT_DOUBLE_EQ(vertex_fscore(all, truth, 2.0).f, 1.0);
  const std::vector<Point> one{{10, 11}, {50, 50}};
  const Scores s = vertex_fscore(one, truth, 2.0);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(vertex_fscore(std::vector<Point>{}, truth, 2.0).f, 0.0);
  // Two predictions near one truth point only match once.
  const std::vector<Point> dup{{10, 10}, {10, 11}};
  EXPECT_DOUBLE_EQ(vertex_fscore(dup, std::vector<Point>{{10, 10}}, 2.0).precision, 0.5);
}

TEST(AngleError, InvariantToOrderAndWrap) {
  const std::vector<double> truth{0.1, 2.0, 4.0};
  const std::vector<double> shuffled{4.0 + kTwoPi, 0.1 - kTwoPi, 2.0};
  EXPECT_NEAR(angle_error(shuffled, truth), 0.0, 1e-12);
  const std::vector<double> off{0.1 + kPi / 180, 2.0 - 2 * kPi / 180, 4.0};
  EXPECT_NEAR(angle_error(off, truth), 1.0, 1e-9);
  EXPECT_NEAR(angle_error(std::vector<double>{kTwoPi - 0.01}, std::vector<double>{0.01}), 0.02 * 180 / kPi, 1e-9);
}

TEST(Psnr, Examples) {
  Image a(10, 10, 1, 0.5), b(10, 10, 1, 0.6);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Truth, JsonRoundTrip) {
  const DatasetItem item = generate_item(3, 2, 7);
  const GroundTruth back = truth_from_json(truth_to_json(item.truth));
  EXPECT_EQ(back.type, 3);
  EXPECT_EQ(back.boundary, item.truth.boundary);
  ASSERT_EQ(back.vertices.size(), item.truth.vertices.size());
  for (std::size_t i = 0; i < back.vertices.size(); ++i) {
    EXPECT_NEAR(back.vertices[i].position.x, item.truth.vertices[i].position.x, 1e-9);
    for (std::size_t j = 0; j < back.vertices[i].angles.size(); ++j)
      EXPECT_NEAR(back.vertices[i].angles[j], item.truth.vertices[i].angles[j], 1e-9);
  }
}

}  // namespace
}  // namespace foj
