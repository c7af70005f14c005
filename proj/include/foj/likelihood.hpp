#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "foj/core.hpp"

namespace foj {

/// Σ_j Σ_x u_j(x) ‖c_j(x) − I(x)‖² over the observed pixels of the window,
/// with hard indicators when `hard` is set and relaxed (width eta) otherwise.
double patch_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                       const WedgeColors& colors, bool hard, double eta = 0.01);

/// Hard-indicator negative log-likelihood with the angle in slot `j` replaced
/// by `angle` and constant wedge colors re-solved for that partition. With
/// lambda_color > 0 the colors blend toward `global_color` and the color
/// consistency term Σ u‖c − Î‖² is added. Direct O(R²) evaluation.
double restricted_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                            int j, double angle, const Image* global_color = nullptr,
                            double lambda_color = 0.0);

/// Same objective evaluated at the current angles.
double hard_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                      const Image* global_color = nullptr, double lambda_color = 0.0);

/// Observed pixels of a patch with mean-centered targets: per pixel the
/// blended sum t = v + λg and ‖v‖² + λ‖g‖², where v and g are the image and
/// global color minus the patch mean. Shared by every vertex candidate.
struct PatchPixels {
  PatchPixels(const Image& image, PatchWindow window, const Image* global_color = nullptr,
              double lambda_color = 0.0);

  int channels = 1;
  double lambda = 0.0;
  std::vector<int> xs;
  std::vector<int> ys;
  std::vector<double> sums;  // [i * channels + k]
  std::vector<double> sq;
  double total_sq = 0.0;
};

/// Angular statistics of a patch around a fixed vertex: observed pixels sorted
/// by their direction from the vertex, with prefix sums of count, Σt and Σ‖t‖².
/// Any hard partition into angular sectors is then scored in O(M log R²),
/// exactly matching the direct per-pixel evaluation for every angle.
class AngularHistogram {
 public:
  AngularHistogram(const Image& image, PatchWindow window, Point vertex,
                   const Image* global_color = nullptr, double lambda_color = 0.0);
  AngularHistogram(const PatchPixels& pixels, Point vertex);
  AngularHistogram() = default;

  /// Rebuilds for another vertex, reusing storage.
  void reset(const PatchPixels& pixels, Point vertex);

  int channels() const { return channels_; }
  std::size_t pixel_count() const { return keys_.size() + (has_vertex_pixel_ ? 1 : 0); }

  /// Optimal-constant-color cost of the hard partition defined by `angles`
  /// (any order, any range).
  double negloglik(std::span<const double> angles) const;

  /// negloglik with slot `j` of `angles` replaced by each angle whose key is
  /// listed in `candidate_keys` (keys from angle_key). Equal to the
  /// individual calls up to rounding, in O(R² + n·M) total.
  void sweep(std::span<const double> angles, int j, std::span<const double> candidate_keys,
             double* out) const;

  /// Count and Σt of pixels whose direction key lies in [from, to) (no wrap).
  double range_count(double key_from, double key_to) const;

 private:
  struct Stats {
    double count = 0.0;
    double sq = 0.0;
    double sum[8] = {};
  };
  std::size_t lower(double key) const;
  double segment_cost(std::size_t lo, std::size_t hi) const;
  // Sector [from, end) ∪ [0, to) plus the vertex pixel.
  double wrap_cost(std::size_t from, std::size_t to) const;
  double cost_of_sorted(const std::size_t* idx, int m) const;

  int channels_ = 1;
  double lambda_ = 0.0;
  std::vector<double> keys_;
  int stride_ = 3;
  std::vector<double> prefix_;  // per entry: count, Σ‖t‖², Σt (channels values)
  std::vector<std::pair<double, int>> order_;
  bool has_vertex_pixel_ = false;
  Stats vertex_pixel_;
};

}  // namespace foj
