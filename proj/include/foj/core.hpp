#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace foj {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kMaxWedges = 4;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a patch does not fit the image or a size is otherwise invalid.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Raised when optimization produces a non-finite value.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int patch) : Error(what), patch_(patch) {}
  int patch() const { return patch_; }

 private:
  int patch_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// K-channel raster with an optional per-pixel validity mask.
///
/// Pixel (x, y) has its center at integer image coordinates (x, y); x grows
/// to the right and y grows downwards (row index). Values are stored
/// interleaved, channel-fastest.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int k = 0) { return data_[index(x, y) + k]; }
  double at(int x, int y, int k = 0) const { return data_[index(x, y) + k]; }

  std::span<double> pixel(int x, int y) { return {data_.data() + index(x, y), std::size_t(channels_)}; }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + index(x, y), std::size_t(channels_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool has_mask() const { return !mask_.empty(); }
  bool observed(int x, int y) const {
    return mask_.empty() || mask_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  /// Marks a pixel as observed (true) or missing (false). Creates the mask lazily.
  void set_observed(int x, int y, bool value);
  void clear_mask() { mask_.clear(); }
  std::span<const std::uint8_t> mask() const { return mask_; }

  /// Returns a single-channel copy of channel k (mask preserved).
  Image channel(int k) const;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
  std::vector<std::uint8_t> mask_;
};

/// Real-valued map over the image support, row-major.
struct ScalarMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ScalarMap() = default;
  ScalarMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double max() const;
};

/// Generalized M-junction: M boundary ray angles around a vertex.
///
/// Angles are radians measured from the +x axis towards +y. The vertex is in
/// image coordinates and may lie outside the patch.
struct JunctionParams {
  int wedges = 3;
  std::array<double, kMaxWedges> angles{};
  Point vertex;

  std::span<const double> angle_span() const { return {angles.data(), std::size_t(wedges)}; }
  std::span<double> angle_span() { return {angles.data(), std::size_t(wedges)}; }

  friend bool operator==(const JunctionParams&, const JunctionParams&) = default;
};

/// Reduces an angle to [0, 2π).
double wrap_angle(double angle);

/// Wraps every angle into [0, 2π) and sorts them, keeping input order on ties.
/// If `order` is non-null it receives, for each output slot, the input slot it
/// came from.
JunctionParams canonicalize(JunctionParams params, std::array<int, kMaxWedges>* order = nullptr);

enum class ColorModel { kConstant, kLinear };

/// Per-wedge color functions c_j(x) = a_j * lx + b_j * ly + d_j in patch-local
/// coordinates (lx, ly) relative to the patch center. The constant model keeps
/// a = b = 0.
struct WedgeColors {
  ColorModel model = ColorModel::kConstant;
  int wedges = 0;
  int channels = 0;
  std::vector<double> coeffs;  // [wedge][channel][a, b, d]

  WedgeColors() = default;
  WedgeColors(ColorModel m, int wedge_count, int channel_count)
      : model(m), wedges(wedge_count), channels(channel_count),
        coeffs(static_cast<std::size_t>(wedge_count) * channel_count * 3, 0.0) {}

  double* coeff(int wedge, int channel) { return &coeffs[(std::size_t(wedge) * channels + channel) * 3]; }
  const double* coeff(int wedge, int channel) const {
    return &coeffs[(std::size_t(wedge) * channels + channel) * 3];
  }
  double value(int wedge, int channel, double lx, double ly) const {
    const double* c = coeff(wedge, channel);
    return c[0] * lx + c[1] * ly + c[2];
  }
  bool finite() const;
};

/// R×R window of the image; (left, top) is the top-left pixel.
struct PatchWindow {
  int left = 0;
  int top = 0;
  int size = 0;

  Point center() const {
    const double h = 0.5 * (size - 1);
    return {left + h, top + h};
  }
};

/// Dense grid of overlapping R×R patches with stride s. Patch positions along
/// each axis are 0, s, 2s, ... plus a final position clamped so the last patch
/// ends on the image border.
class PatchGrid {
 public:
  PatchGrid() = default;
  PatchGrid(int width, int height, int patch_size, int stride);

  int width() const { return width_; }
  int height() const { return height_; }
  int patch_size() const { return patch_size_; }
  int stride() const { return stride_; }
  int cols() const { return static_cast<int>(xs_.size()); }
  int rows() const { return static_cast<int>(ys_.size()); }
  int size() const { return cols() * rows(); }

  PatchWindow window(int i) const { return {xs_[i % cols()], ys_[i / cols()], patch_size_}; }
  Point center(int i) const { return window(i).center(); }

  /// Half-open range of patch columns whose support contains column x.
  std::pair<int, int> covering_cols(int x) const { return covering(xs_, x); }
  std::pair<int, int> covering_rows(int y) const { return covering(ys_, y); }
  int coverage(int x, int y) const;

  /// Calls f(patch_index) for every patch containing pixel (x, y).
  template <class F>
  void for_each_covering(int x, int y, F&& f) const {
    const auto [c0, c1] = covering_cols(x);
    const auto [r0, r1] = covering_rows(y);
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) f(r * cols() + c);
  }

 private:
  std::pair<int, int> covering(const std::vector<int>& starts, int v) const;

  int width_ = 0;
  int height_ = 0;
  int patch_size_ = 0;
  int stride_ = 1;
  std::vector<int> xs_;
  std::vector<int> ys_;
};

PatchGrid build_patch_grid(int width, int height, int patch_size, int stride);

struct FieldOfJunctions {
  PatchGrid grid;
  std::vector<JunctionParams> params;
  std::vector<WedgeColors> colors;

  int size() const { return grid.size(); }
};

struct GlobalMaps {
  ScalarMap boundary;
  Image color;
  ScalarMap vertex_likelihood;
};

/// Every tunable of the analysis. Defaults follow the published settings;
/// detector parameters left at zero are derived from the patch size.
///
/// eta, delta and lr_vertex are lengths in patch units, where one unit is half
/// the patch width ((R - 1) / 2 pixels). gamma, nu_d and nms_radius are pixels.
struct Config {
  int patch_size = 21;
  int wedges = 3;
  ColorModel color_model = ColorModel::kConstant;
  double lambda_boundary = 0.5;
  double lambda_color = 0.1;
  int stride = 1;

  double eta = 0.01;
  double delta = 0.1;

  int n_init = 30;
  int n_iter = 1000;
  double lr_vertex = 0.03;
  double lr_angle = 0.003;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int angle_samples = 100;
  int vertex_samples = 100;
  int reinit_every = 50;
  bool refit_angles = true;  // angle pass per vertex candidate in the init search

  double gamma = 0.0;  // 0 => R/2
  double nu_d = 0.0;   // 0 => R/2
  double nu_e = 2.0;
  double vertex_threshold = 0.3;
  double nms_radius = 0.0;  // 0 => R/2
  double boundary_delta = 0.0;  // output boundary map width; 0 => delta

  std::uint64_t seed = 0;
  int threads = 0;  // 0 => hardware concurrency

  double patch_unit() const { return 0.5 * (patch_size - 1); }
  double eta_pixels() const { return eta * patch_unit(); }
  double delta_pixels() const { return delta * patch_unit(); }
  double output_delta_pixels() const { return (boundary_delta > 0.0 ? boundary_delta : delta) * patch_unit(); }
  double gamma_value() const { return gamma > 0.0 ? gamma : 0.5 * patch_size; }
  double nu_d_value() const { return nu_d > 0.0 ? nu_d : 0.5 * patch_size; }
  double nms_radius_value() const { return nms_radius > 0.0 ? nms_radius : 0.5 * patch_size; }
  int thread_count() const;

  /// Throws Error describing the first invalid setting.
  void validate() const;
};

}  // namespace foj
