#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foj/eval.hpp"
#include "foj/geometry.hpp"
#include "foj/init.hpp"
#include "foj/likelihood.hpp"
#include "foj/rng.hpp"

namespace foj {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Pixel-center rasterization of a junction with one level per wedge.
Image render(const JunctionParams& p, int size, const std::vector<double>& levels) {
  Image img(size, size, 1);
  const JunctionFrame frame(p);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(x, y) = levels[frame.hard_wedge({double(x), double(y)})];
  return img;
}

double circular_diff(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

// Largest per-angle error under the best matching of two 3-angle sets.
double set_distance(std::array<double, 3> a, std::array<double, 3> b) {
  std::sort(b.begin(), b.end());
  double best = 1e300;
  do {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, circular_diff(a[i], b[i]));
    best = std::min(best, worst);
  } while (std::next_permutation(b.begin(), b.end()));
  return best;
}

// True angles are drawn from the n-candidate search grid when n > 0.
JunctionParams random_junction(Rng& rng, int size, int n = 0) {
  JunctionParams p;
  // Angles at least 30° apart so every wedge has pixels.
  for (;;) {
    for (int j = 0; j < 3; ++j)
      p.angles[j] = n > 0 ? angle_candidate(rng.uniform_int(0, n - 1), n) : rng.uniform(0.0, kTwoPi);
    p = canonicalize(p);
    const double g0 = p.angles[1] - p.angles[0], g1 = p.angles[2] - p.angles[1];
    const double g2 = kTwoPi - p.angles[2] + p.angles[0];
    if (std::min({g0, g1, g2}) > 30 * kDeg) break;
  }
  const double c = 0.5 * (size - 1);
  p.vertex = {c + rng.uniform(-2.0, 2.0), c + rng.uniform(-2.0, 2.0)};
  return p;
}

// With the true angles among the candidates the greedy pass reaches the
// exhaustive minimum over all candidate triples.
TEST(OptimizeAngles, MatchesExhaustiveGridMinimum) {
  Rng rng(101);
  const int size = 17, n = 24;
  const PatchWindow w{0, 0, size};
  InitOptions options;
  options.angle_samples = n;
  for (int t = 0; t < 20; ++t) {
    const JunctionParams truth = random_junction(rng, size, n);
    const Image img = render(truth, size, {0.1, 0.55, 0.9});
    const JunctionParams got = optimize_angles(img, w, truth.vertex, options);
    double brute = 1e300;
    JunctionParams q = truth;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          q.angles = {angle_candidate(a, n), angle_candidate(b, n), angle_candidate(c, n), 0.0};
          brute = std::min(brute, hard_negloglik(img, w, q));
        }
    EXPECT_NEAR(hard_negloglik(img, w, got), brute, 1e-9 * (1.0 + brute)) << t;
  }
}

TEST(OptimizeAngles, RecoversKnownAnglesWithinOneBin) {
  const int size = 17;
  JunctionParams truth;
  truth.angles = {20 * kDeg, 140 * kDeg, 250 * kDeg};
  truth.vertex = {8.0, 8.0};
  const Image img = render(truth, size, {0.2, 0.5, 0.8});
  const JunctionParams got = optimize_angles(img, {0, 0, size}, truth.vertex, InitOptions{});
  EXPECT_LE(set_distance({got.angles[0], got.angles[1], got.angles[2]}, {truth.angles[0], truth.angles[1], truth.angles[2]}),
            3.6 * kDeg + 1e-12);
}

TEST(OptimizeAngles, UniformPatchKeepsZeroAngles) {
  const Image img(11, 11, 1, 0.4);
  const JunctionParams got = optimize_angles(img, {0, 0, 11}, {5.0, 5.0}, InitOptions{});
  for (int j = 0; j < 3; ++j) EXPECT_EQ(got.angles[j], 0.0);
}

TEST(OptimizeAngles, NeverWorseThanZeroStart) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    Image img(13, 13, 1);
    for (double& v : img.data()) v = rng.uniform();
    const Point vertex{rng.uniform(0.0, 12.0), rng.uniform(0.0, 12.0)};
    const JunctionParams got = optimize_angles(img, {0, 0, 13}, vertex, InitOptions{});
    JunctionParams zero;
    zero.vertex = vertex;
    EXPECT_LE(hard_negloglik(img, {0, 0, 13}, got), hard_negloglik(img, {0, 0, 13}, zero) + 1e-12);
  }
}

TEST(OptimizeVertexAndAngles, RecoversCenteredJunction) {
  Rng rng(11);
  const int size = 17;
  int good = 0;
  for (int t = 0; t < 20; ++t) {
    JunctionParams truth = random_junction(rng, size);
    truth.vertex = {8.0, 8.0};
    const Image img = render(truth, size, {0.0, 0.5, 1.0});
    const JunctionParams got = optimize_vertex_and_angles(img, {0, 0, size}, InitOptions{});
    const bool ok = std::abs(got.vertex.x - 8.0) <= 0.03 * size && std::abs(got.vertex.y - 8.0) <= 0.03 * size &&
                    set_distance({got.angles[0], got.angles[1], got.angles[2]},
                                 {truth.angles[0], truth.angles[1], truth.angles[2]}) <= 3.6 * kDeg + 1e-12;
    good += ok;
  }
  EXPECT_EQ(good, 20);
}

TEST(OptimizeVertexAndAngles, UniformPatchStaysAtCenter) {
  const Image img(11, 11, 1, 0.6);
  const JunctionParams got = optimize_vertex_and_angles(img, {0, 0, 11}, InitOptions{});
  EXPECT_EQ(got.vertex, (Point{5.0, 5.0}));
  for (int j = 0; j < 3; ++j) EXPECT_EQ(got.angles[j], 0.0);
}

TEST(OptimizeVertexAndAngles, ObservedObjectiveNeverIncreases) {
  Rng rng(12);
  for (bool refit : {false, true}) {
    Image img(15, 15, 1);
    for (double& v : img.data()) v = rng.uniform();
    std::vector<double> values;
    InitOptions options;
    options.refit_angles = refit;
    options.rounds = 5;
    options.on_update = [&](double v) { values.push_back(v); };
    const JunctionParams got = optimize_vertex_and_angles(img, {0, 0, 15}, options);
    ASSERT_FALSE(values.empty());
    for (std::size_t i = 1; i < values.size(); ++i) EXPECT_LE(values[i], values[i - 1]) << i;
    EXPECT_NEAR(values.back(), hard_negloglik(img, {0, 0, 15}, got), 1e-9 * (1.0 + values.back()));
  }
}

TEST(OptimizeVertexAndAngles, NoisyDatasetJunctions) {
  const int size = 21, trials = 100;
  int good = 0;
  for (int t = 0; t < trials; ++t) {
    const DatasetItem item = generate_item(3, 5, t);
    const TruthVertex& v = item.truth.vertices[t % 2];
    const Image noisy = add_noise(item.image, 0.2, 1000 + t);
    const int left = std::clamp(int(std::lround(v.position.x)) - size / 2, 0, noisy.width() - size);
    const int top = std::clamp(int(std::lround(v.position.y)) - size / 2, 0, noisy.height() - size);
    const JunctionParams got = optimize_vertex_and_angles(noisy, {left, top, size}, InitOptions{});
    const double dv = std::hypot(got.vertex.x - v.position.x, got.vertex.y - v.position.y);
    const double da = set_distance({got.angles[0], got.angles[1], got.angles[2]},
                                   {v.angles[0], v.angles[1], v.angles[2]});
    good += dv <= 1.0 && da <= 10 * kDeg;
  }
  EXPECT_GE(good, 90);
}

TEST(InitOptions, RejectsTooFewSamples) {
  const Image img(9, 9, 1);
  InitOptions options;
  options.angle_samples = 1;
  EXPECT_THROW(optimize_angles(img, {0, 0, 9}, {4, 4}, options), Error);
}

}  // namespace
}  // namespace foj
