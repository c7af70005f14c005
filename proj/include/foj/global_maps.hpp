#pragma once

#include <vector>

#include "foj/core.hpp"

namespace foj {

/// Mean over the covering patches of each patch's smooth boundary map
/// (delta in pixels).
ScalarMap global_boundary_map(const FieldOfJunctions& field, double delta, int threads = 1);

/// Mean over the covering patches of each patch's relaxed-indicator color
/// rendering Σ_j u_j c_j (eta in pixels). This is the smoothed image.
Image global_color_map(const FieldOfJunctions& field, double eta, int threads = 1);

/// Voting weight of one junction: vertex-to-center Gaussian times the best
/// wedge-pair angle factor.
double vertex_weight(const JunctionParams& params, Point center, double nu_d, double nu_e);

/// V(x) = Σ_i w_i exp(-‖x - x_i‖² / 2γ²), unnormalized.
ScalarMap vertex_map(const FieldOfJunctions& field, double gamma, double nu_d, double nu_e,
                     int threads = 1);

struct VertexDetection {
  Point position;
  double score = 0.0;  // V / max(V)
  int wedges = 0;
  std::array<double, kMaxWedges> angles{};
};

/// Local maxima of V / max(V) above `threshold`, greedily suppressed within
/// Euclidean distance `radius`. Each detection carries the angles of the
/// junction whose vote w_i κ is largest at that pixel.
std::vector<VertexDetection> detect_vertices(const ScalarMap& v, const FieldOfJunctions& field,
                                             double threshold, double radius, double gamma,
                                             double nu_d, double nu_e);

/// Boundary, color and vertex maps with the widths of `config`; the boundary
/// map uses the output width.
GlobalMaps compute_global_maps(const FieldOfJunctions& field, const Config& config);

}  // namespace foj
