#include "foj/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace foj {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0)
    throw SizeError("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

void Image::set_observed(int x, int y, bool value) {
  if (mask_.empty()) {
    if (value) return;
    mask_.assign(pixel_count(), 1);
  }
  mask_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
}

Image Image::channel(int k) const {
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) out.at(x, y) = at(x, y, k);
  out.mask_ = mask_;
  return out;
}

double ScalarMap::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double wrap_angle(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // Angles within rounding of 2π snap to 0 so their pseudo-angle key stays ordered.
  if (a >= kTwoPi - 1e-12) a = 0.0;
  return a;
}

JunctionParams canonicalize(JunctionParams params, std::array<int, kMaxWedges>* order) {
  std::array<int, kMaxWedges> idx{};
  std::iota(idx.begin(), idx.begin() + params.wedges, 0);
  std::array<double, kMaxWedges> wrapped{};
  for (int j = 0; j < params.wedges; ++j) wrapped[j] = wrap_angle(params.angles[j]);
  std::stable_sort(idx.begin(), idx.begin() + params.wedges,
                   [&](int a, int b) { return wrapped[a] < wrapped[b]; });
  for (int j = 0; j < params.wedges; ++j) params.angles[j] = wrapped[idx[j]];
  if (order) *order = idx;
  return params;
}

bool WedgeColors::finite() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double v) { return std::isfinite(v); });
}

namespace {

std::vector<int> axis_positions(int extent, int patch_size, int stride) {
  std::vector<int> pos;
  const int last = extent - patch_size;
  for (int p = 0; p < last; p += stride) pos.push_back(p);
  pos.push_back(last);
  return pos;
}

}  // namespace

PatchGrid::PatchGrid(int width, int height, int patch_size, int stride)
    : width_(width), height_(height), patch_size_(patch_size), stride_(stride) {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw SizeError("patch size must be an odd integer >= 3");
  if (stride < 1) throw SizeError("stride must be >= 1");
  if (patch_size > width || patch_size > height)
    throw SizeError("patch size " + std::to_string(patch_size) + " exceeds image size " +
                    std::to_string(width) + "x" + std::to_string(height));
  xs_ = axis_positions(width, patch_size, stride);
  ys_ = axis_positions(height, patch_size, stride);
}

std::pair<int, int> PatchGrid::covering(const std::vector<int>& starts, int v) const {
  // starts is sorted; a patch at p covers v iff p <= v <= p + R - 1.
  const auto lo = std::lower_bound(starts.begin(), starts.end(), v - patch_size_ + 1);
  const auto hi = std::upper_bound(starts.begin(), starts.end(), v);
  return {static_cast<int>(lo - starts.begin()), static_cast<int>(hi - starts.begin())};
}

int PatchGrid::coverage(int x, int y) const {
  const auto [c0, c1] = covering_cols(x);
  const auto [r0, r1] = covering_rows(y);
  return (c1 - c0) * (r1 - r0);
}

PatchGrid build_patch_grid(int width, int height, int patch_size, int stride) {
  return PatchGrid(width, height, patch_size, stride);
}

int Config::thread_count() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void Config::validate() const {
  if (patch_size < 3 || patch_size % 2 == 0) throw Error("--patch-size must be odd and >= 3");
  if (wedges != 3 && wedges != 4) throw Error("--m must be 3 or 4");
  if (lambda_boundary < 0.0 || lambda_color < 0.0) throw Error("consistency weights must be >= 0");
  if (stride < 1) throw Error("--stride must be >= 1");
  if (!(eta > 0.0) || !(delta > 0.0)) throw Error("--eta and --delta must be positive");
  if (n_init < 0 || n_iter < 0) throw Error("iteration counts must be >= 0");
  if (angle_samples < wedges) throw Error("--angle-samples must be >= M");
  if (vertex_samples < 2) throw Error("--vertex-samples must be >= 2");
  if (reinit_every < 0) throw Error("--reinit-every must be >= 0");
  if (gamma < 0.0 || nu_d < 0.0 || nu_e <= 0.0) throw Error("detector parameters must be positive");
  if (lr_vertex < 0.0 || lr_angle < 0.0) throw Error("learning rates must be >= 0");
}

}  // namespace foj
