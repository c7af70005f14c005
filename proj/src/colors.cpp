#include "foj/colors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace foj {

ColorAccumulator::ColorAccumulator(ColorModel model, int wedges, int channels)
    : model_(model), wedges_(wedges), channels_(channels) {
  patch_sum_.resize(channels);
  moments_.resize(std::size_t(wedges) * 6);
  rhs_.resize(std::size_t(wedges) * channels * 3);
}

void ColorAccumulator::reset() {
  count_ = 0.0;
  std::fill(patch_sum_.begin(), patch_sum_.end(), 0.0);
  std::fill(moments_.begin(), moments_.end(), 0.0);
  std::fill(rhs_.begin(), rhs_.end(), 0.0);
}

void ColorAccumulator::add(double lx, double ly, const double* weights, const double* target) {
  count_ += 1.0;
  for (int k = 0; k < channels_; ++k) patch_sum_[k] += target[k];
  if (model_ == ColorModel::kConstant) {
    for (int j = 0; j < wedges_; ++j) {
      const double w = weights[j];
      moments_[j * 6 + 5] += w;
      double* r = &rhs_[std::size_t(j) * channels_ * 3];
      for (int k = 0; k < channels_; ++k) r[k * 3 + 2] += w * target[k];
    }
    return;
  }
  for (int j = 0; j < wedges_; ++j) {
    const double w = weights[j];
    double* mo = &moments_[j * 6];
    const double wx = w * lx;
    const double wy = w * ly;
    mo[0] += wx * lx;
    mo[1] += wx * ly;
    mo[2] += wx;
    mo[3] += wy * ly;
    mo[4] += wy;
    mo[5] += w;
    double* r = &rhs_[std::size_t(j) * channels_ * 3];
    for (int k = 0; k < channels_; ++k) {
      r[k * 3 + 0] += wx * target[k];
      r[k * 3 + 1] += wy * target[k];
      r[k * 3 + 2] += w * target[k];
    }
  }
}

WedgeColors ColorAccumulator::solve() const {
  WedgeColors out(model_, wedges_, channels_);
  for (int j = 0; j < wedges_; ++j) {
    const double* mo = &moments_[j * 6];
    const double* r = &rhs_[std::size_t(j) * channels_ * 3];
    const double mass = mo[5];

    bool linear_ok = false;
    if (model_ == ColorModel::kLinear && mass >= kMinWedgeMass) {
      Eigen::Matrix3d normal;
      normal << mo[0], mo[1], mo[2], mo[1], mo[3], mo[4], mo[2], mo[4], mo[5];
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
      eig.computeDirect(normal, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (lo > 0.0 && hi / lo <= kMaxNormalCondition) {
        linear_ok = true;
        const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
        for (int k = 0; k < channels_; ++k) {
          const Eigen::Vector3d sol = ldlt.solve(Eigen::Vector3d(r[k * 3], r[k * 3 + 1], r[k * 3 + 2]));
          double* c = out.coeff(j, k);
          c[0] = sol[0];
          c[1] = sol[1];
          c[2] = sol[2];
        }
      }
    }
    if (linear_ok) continue;

    for (int k = 0; k < channels_; ++k) {
      double* c = out.coeff(j, k);
      c[0] = c[1] = 0.0;
      if (mass >= kMinWedgeMass)
        c[2] = r[k * 3 + 2] / mass;
      else
        c[2] = count_ > 0.0 ? patch_sum_[k] / count_ : 0.0;
    }
  }
  return out;
}

WedgeColors optimal_colors(ColorModel model, const Image& image, PatchWindow window,
                           std::span<const std::vector<double>> indicators,
                           const Image* global_color, double lambda_color) {
  if (lambda_color > 0.0 && !global_color)
    throw Error("color consistency requires a global color map");
  const int wedges = static_cast<int>(indicators.size());
  const int channels = image.channels();
  ColorAccumulator acc(model, wedges, channels);
  const Point center = window.center();
  std::vector<double> target(channels);
  double weights[kMaxWedges];
  for (int py = 0; py < window.size; ++py) {
    for (int px = 0; px < window.size; ++px) {
      const int x = window.left + px;
      const int y = window.top + py;
      if (!image.observed(x, y)) continue;
      const std::size_t idx = std::size_t(py) * window.size + px;
      for (int j = 0; j < wedges; ++j) weights[j] = indicators[j][idx];
      for (int k = 0; k < channels; ++k)
        target[k] = blended_target(image, global_color, lambda_color, x, y, k);
      acc.add(x - center.x, y - center.y, weights, target.data());
    }
  }
  return acc.solve();
}

WedgeColors optimal_constant_colors(const Image& image, PatchWindow window,
                                    std::span<const std::vector<double>> indicators,
                                    const Image* global_color, double lambda_color) {
  return optimal_colors(ColorModel::kConstant, image, window, indicators, global_color, lambda_color);
}

WedgeColors optimal_linear_colors(const Image& image, PatchWindow window,
                                  std::span<const std::vector<double>> indicators,
                                  const Image* global_color, double lambda_color) {
  return optimal_colors(ColorModel::kLinear, image, window, indicators, global_color, lambda_color);
}

}  // namespace foj
