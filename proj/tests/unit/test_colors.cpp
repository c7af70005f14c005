#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "foj/colors.hpp"
#include "foj/rng.hpp"

namespace foj {
namespace {

Image random_image(int w, int h, int k, Rng& rng) {
  Image img(w, h, k);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

std::vector<std::vector<double>> random_indicators(int wedges, int n, Rng& rng) {
  std::vector<std::vector<double>> u(wedges, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < wedges; ++j) total += (u[j][i] = rng.uniform(0.01, 1.0));
    for (int j = 0; j < wedges; ++j) u[j][i] /= total;
  }
  return u;
}

// Objective restricted to wedge j: Σ u (c - I)² + λ Σ u (c - Î)².
double wedge_objective(const Image& img, const Image* global, double lambda, PatchWindow w,
                       const std::vector<double>& u, const WedgeColors& c, int j) {
  const Point center = w.center();
  double total = 0.0;
  for (int py = 0; py < w.size; ++py)
    for (int px = 0; px < w.size; ++px) {
      const int x = w.left + px, y = w.top + py;
      if (!img.observed(x, y)) continue;
      for (int k = 0; k < img.channels(); ++k) {
        const double v = c.value(j, k, x - center.x, y - center.y);
        total += u[py * w.size + px] * (v - img.at(x, y, k)) * (v - img.at(x, y, k));
        if (global) total += lambda * u[py * w.size + px] * (v - global->at(x, y, k)) * (v - global->at(x, y, k));
      }
    }
  return total;
}

TEST(ConstantColors, UniformPatch) {
  const Image img(9, 9, 2, 0.3);
  Rng rng(1);
  const auto u = random_indicators(3, 81, rng);
  const WedgeColors c = optimal_constant_colors(img, {0, 0, 9}, u, nullptr, 0.0);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(c.value(j, k, 0, 0), 0.3, 1e-14);
}

TEST(ConstantColors, MatchesWeightedMeanOracle) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Image img = random_image(12, 11, 3, rng);
    const Image global = random_image(12, 11, 3, rng);
    const PatchWindow w{2, 1, 9};
    const auto u = random_indicators(3, 81, rng);
    const double lambda = 0.5;
    const WedgeColors c = optimal_constant_colors(img, w, u, &global, lambda);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double num = 0.0, den = 0.0;
        for (int py = 0; py < 9; ++py)
          for (int px = 0; px < 9; ++px) {
            const double weight = u[j][py * 9 + px];
            num += weight * (img.at(w.left + px, w.top + py, k) + lambda * global.at(w.left + px, w.top + py, k));
            den += weight;
          }
        EXPECT_NEAR(c.value(j, k, 0, 0), num / ((1.0 + lambda) * den), 1e-10);
      }
  }
}

TEST(ConstantColors, LargeLambdaApproachesGlobalMean) {
  Rng rng(3);
  const Image img = random_image(7, 7, 1, rng);
  const Image global = random_image(7, 7, 1, rng);
  const auto u = random_indicators(3, 49, rng);
  const WedgeColors c = optimal_constant_colors(img, {0, 0, 7}, u, &global, 1e9);
  for (int j = 0; j < 3; ++j) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 49; ++i) {
      num += u[j][i] * global.at(i % 7, i / 7);
      den += u[j][i];
    }
    EXPECT_NEAR(c.value(j, 0, 0, 0), num / den, 1e-8);
  }
}

TEST(ConstantColors, EmptyWedgeTakesPatchMean) {
  const Image img = [] {
    Image i(5, 5, 1);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) i.at(x, y) = 0.1 * x;
    return i;
  }();
  std::vector<std::vector<double>> u(3, std::vector<double>(25, 0.0));
  for (int i = 0; i < 25; ++i) u[0][i] = 1.0;
  const WedgeColors c = optimal_constant_colors(img, {0, 0, 5}, u, nullptr, 0.0);
  EXPECT_NEAR(c.value(1, 0, 0, 0), 0.2, 1e-14);
  EXPECT_NEAR(c.value(2, 0, 0, 0), 0.2, 1e-14);
}

TEST(ConstantColors, MaskedPixelsAreIgnored) {
  Image img(5, 5, 1, 0.2);
  img.at(1, 1) = 100.0;
  img.set_observed(1, 1, false);
  std::vector<std::vector<double>> u(2, std::vector<double>(25, 0.5));
  const WedgeColors c = optimal_constant_colors(img, {0, 0, 5}, u, nullptr, 0.0);
  EXPECT_NEAR(c.value(0, 0, 0, 0), 0.2, 1e-14);
}

TEST(LinearColors, RecoversPlaneExactly) {
  const PatchWindow w{0, 0, 9};
  Image img(9, 9, 1);
  const double a = 0.03, b = -0.02, d = 0.4;
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) img.at(x, y) = a * (x - 4) + b * (y - 4) + d;
  std::vector<std::vector<double>> u(3, std::vector<double>(81, 0.0));
  for (int i = 0; i < 81; ++i) u[(i % 9) < 5 ? 0 : 1][i] = 1.0;
  const WedgeColors c = optimal_linear_colors(img, w, u, nullptr, 0.0);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(c.coeff(j, 0)[0], a, 1e-8);
    EXPECT_NEAR(c.coeff(j, 0)[1], b, 1e-8);
    EXPECT_NEAR(c.coeff(j, 0)[2], d, 1e-8);
  }
}

TEST(LinearColors, ConstantDataGivesZeroSlopes) {
  Rng rng(4);
  const Image img(9, 9, 2, 0.65);
  const auto u = random_indicators(3, 81, rng);
  const WedgeColors c = optimal_linear_colors(img, {0, 0, 9}, u, nullptr, 0.0);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 2; ++k) {
      EXPECT_LT(std::abs(c.coeff(j, k)[0]), 1e-8);
      EXPECT_LT(std::abs(c.coeff(j, k)[1]), 1e-8);
      EXPECT_NEAR(c.coeff(j, k)[2], 0.65, 1e-8);
    }
}

TEST(LinearColors, MatchesDenseWeightedLeastSquares) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Image img = random_image(11, 11, 2, rng);
    const Image global = random_image(11, 11, 2, rng);
    const PatchWindow w{1, 2, 9};
    const auto u = random_indicators(4, 81, rng);
    const double lambda = 0.3;
    const WedgeColors c = optimal_linear_colors(img, w, u, &global, lambda);
    const Point center = w.center();
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd A(81, 3);
        Eigen::VectorXd rhs(81);
        for (int i = 0; i < 81; ++i) {
          const int x = w.left + i % 9, y = w.top + i / 9;
          const double s = std::sqrt(u[j][i]);
          A(i, 0) = s * (x - center.x);
          A(i, 1) = s * (y - center.y);
          A(i, 2) = s;
          rhs(i) = s * (img.at(x, y, k) + lambda * global.at(x, y, k)) / (1.0 + lambda);
        }
        const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
        for (int q = 0; q < 3; ++q) EXPECT_NEAR(c.coeff(j, k)[q], sol(q), 1e-8);
      }
  }
}

TEST(ColorSolvers, PerturbationNeverImproves) {
  Rng rng(6);
  for (ColorModel model : {ColorModel::kConstant, ColorModel::kLinear}) {
    const Image img = random_image(9, 9, 1, rng);
    const Image global = random_image(9, 9, 1, rng);
    const PatchWindow w{0, 0, 9};
    const auto u = random_indicators(3, 81, rng);
    const double lambda = 0.4;
    const WedgeColors c = optimal_colors(model, img, w, u, &global, lambda);
    const int free = model == ColorModel::kLinear ? 3 : 1;
    for (int j = 0; j < 3; ++j) {
      const double base = wedge_objective(img, &global, lambda, w, u[j], c, j);
      for (int q = 3 - free; q < 3; ++q)
        for (double step : {-1e-3, 1e-3}) {
          WedgeColors p = c;
          p.coeff(j, 0)[q] += step;
          EXPECT_GE(wedge_objective(img, &global, lambda, w, u[j], p, j), base);
        }
    }
  }
}

TEST(ColorSolvers, ChannelsAreSeparable) {
  Rng rng(7);
  const Image img = random_image(9, 9, 3, rng);
  const auto u = random_indicators(3, 81, rng);
  for (ColorModel model : {ColorModel::kConstant, ColorModel::kLinear}) {
    const WedgeColors all = optimal_colors(model, img, {0, 0, 9}, u, nullptr, 0.0);
    for (int k = 0; k < 3; ++k) {
      const WedgeColors one = optimal_colors(model, img.channel(k), {0, 0, 9}, u, nullptr, 0.0);
      for (int j = 0; j < 3; ++j)
        for (int q = 0; q < 3; ++q) EXPECT_NEAR(one.coeff(j, 0)[q], all.coeff(j, k)[q], 1e-12);
    }
  }
}

TEST(ColorSolvers, AccumulatorMatchesFieldSolver) {
  Rng rng(8);
  const Image img = random_image(9, 9, 2, rng);
  const auto u = random_indicators(3, 81, rng);
  ColorAccumulator acc(ColorModel::kLinear, 3, 2);
  for (int i = 0; i < 81; ++i) {
    const double w[3] = {u[0][i], u[1][i], u[2][i]};
    const double t[2] = {img.at(i % 9, i / 9, 0), img.at(i % 9, i / 9, 1)};
    acc.add(i % 9 - 4.0, i / 9 - 4.0, w, t);
  }
  const WedgeColors a = acc.solve();
  const WedgeColors b = optimal_linear_colors(img, {0, 0, 9}, u, nullptr, 0.0);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) EXPECT_NEAR(a.coeffs[i], b.coeffs[i], 1e-12);
}

}  // namespace
}  // namespace foj
