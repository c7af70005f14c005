#pragma once

#include <functional>

#include "foj/core.hpp"

namespace foj {

struct InitOptions {
  int wedges = 3;
  int angle_samples = 100;
  int vertex_samples = 100;
  int rounds = 30;
  /// Re-run one warm-started angle pass for every vertex candidate instead of
  /// holding the angles fixed during the 1-D vertex searches.
  bool refit_angles = false;
  /// Color consistency blending used by the objective (0 during initialization).
  const Image* global_color = nullptr;
  double lambda_color = 0.0;
  /// Called with the objective value after every coordinate update.
  std::function<void(double)> on_update;
};

/// Candidate angle k of an n-sample search: k·2π/n.
inline double angle_candidate(int k, int samples) { return kTwoPi * k / samples; }

/// Candidate k of an n-sample vertex search along one axis: n uniform samples
/// spanning [center − 1.5R, center + 1.5R].
inline double vertex_candidate(double center, int patch_size, int k, int samples) {
  const double half = 1.5 * patch_size;
  return center - half + (2.0 * half) * k / (samples - 1);
}

/// One pass of single-coordinate updates over the M angles with the vertex
/// fixed. Each angle moves to the best of the n_ang candidates only when that
/// strictly lowers the hard negative log-likelihood; among equally good
/// candidates the middle of the first contiguous run is taken. `start` gives
/// the initial angles (all zero when null). Returns canonical parameters.
JunctionParams optimize_angles(const Image& image, PatchWindow window, Point vertex,
                               const InitOptions& options,
                               const std::array<double, kMaxWedges>* start = nullptr);

/// Coordinate descent over angles and vertex. Starting from `start` (or from
/// zero angles with the vertex at the patch center when null), each round runs
/// optimize_angles and then two 1-D vertex searches, stopping early once a
/// round leaves every coordinate unchanged.
JunctionParams optimize_vertex_and_angles(const Image& image, PatchWindow window,
                                          const InitOptions& options,
                                          const JunctionParams* start = nullptr);

/// Runs optimize_vertex_and_angles on every patch of a new field and solves
/// the wedge colors with relaxed indicators.
FieldOfJunctions initialize_field(const Image& image, const Config& config);

}  // namespace foj
