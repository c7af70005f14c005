#pragma once

#include <span>
#include <vector>

#include "foj/core.hpp"

namespace foj {

/// Wedges lighter than this take the whole-patch mean color.
inline constexpr double kMinWedgeMass = 1e-6;
/// Linear fits whose normal matrix is worse conditioned fall back to a constant.
inline constexpr double kMaxNormalCondition = 1e8;

/// Accumulates the weighted sums behind the closed-form wedge colors of one
/// patch. Targets are already blended: t = (I + λ_C Î) / (1 + λ_C).
class ColorAccumulator {
 public:
  ColorAccumulator(ColorModel model, int wedges, int channels);

  void reset();
  /// Adds one observed pixel at patch-local coordinates (lx, ly).
  void add(double lx, double ly, const double* weights, const double* target);
  WedgeColors solve() const;

 private:
  ColorModel model_;
  int wedges_;
  int channels_;
  double count_ = 0.0;
  std::vector<double> patch_sum_;  // [channel]
  std::vector<double> moments_;    // [wedge][xx, xy, x, yy, y, 1]
  std::vector<double> rhs_;        // [wedge][channel][x, y, 1]
};

/// Blended target (I + λ Î)/(1 + λ) for channel k of pixel (x, y).
inline double blended_target(const Image& image, const Image* global_color, double lambda_color,
                             int x, int y, int k) {
  if (!global_color || lambda_color == 0.0) return image.at(x, y, k);
  return (image.at(x, y, k) + lambda_color * global_color->at(x, y, k)) / (1.0 + lambda_color);
}

/// Optimal constant wedge colors for the given indicator fields (one R*R
/// row-major field per wedge). `global_color` is the full-image global color
/// map and is required when lambda_color > 0.
WedgeColors optimal_constant_colors(const Image& image, PatchWindow window,
                                    std::span<const std::vector<double>> indicators,
                                    const Image* global_color, double lambda_color);

/// Optimal per-wedge linear colors a·lx + b·ly + d from the 3x3 weighted
/// normal equations, one solve per wedge and channel.
WedgeColors optimal_linear_colors(const Image& image, PatchWindow window,
                                  std::span<const std::vector<double>> indicators,
                                  const Image* global_color, double lambda_color);

WedgeColors optimal_colors(ColorModel model, const Image& image, PatchWindow window,
                           std::span<const std::vector<double>> indicators,
                           const Image* global_color, double lambda_color);

}  // namespace foj
