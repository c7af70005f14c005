#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "foj/core.hpp"

namespace foj {

/// Unweighted parts of the joint objective.
struct ObjectiveTerms {
  double likelihood = 0.0;
  double boundary = 0.0;  // Σ_i Σ_x (B_i − B̂)²
  double color = 0.0;     // Σ_i Σ_j Σ_x u_j ‖c_j − Î‖²

  double weighted(double lambda_boundary, double lambda_color) const {
    return likelihood + lambda_boundary * boundary + lambda_color * color;
  }
  ObjectiveTerms& operator+=(const ObjectiveTerms& o) {
    likelihood += o.likelihood;
    boundary += o.boundary;
    color += o.color;
    return *this;
  }
};

/// Gradient of one patch objective: d/dφ_0..φ_3 then d/dx0, d/dy0.
using PatchGradient = std::array<double, kMaxWedges + 2>;
inline constexpr int kGradVertexX = kMaxWedges;
inline constexpr int kGradVertexY = kMaxWedges + 1;

/// Frozen consistency targets and weights seen by every patch.
struct Consistency {
  const ScalarMap* boundary = nullptr;  // B̂; boundary term skipped when null
  const Image* color = nullptr;         // Î; color term skipped when null
  double lambda_boundary = 0.0;
  double lambda_color = 0.0;
};

/// Objective of one patch with its colors held fixed, and optionally its
/// gradient with respect to the junction parameters (same slot order as
/// `params`). eta and delta are in pixels. min/max branches use the
/// subgradient of the attaining branch, first branch on ties.
ObjectiveTerms patch_objective(const Image& image, PatchWindow window, const JunctionParams& params,
                               const WedgeColors& colors, const Consistency& consistency,
                               double eta, double delta, PatchGradient* gradient = nullptr);

/// Closed-form colors for one patch under the relaxed indicators, blended
/// toward Î when lambda_color > 0.
WedgeColors solve_patch_colors(const Image& image, PatchWindow window, const JunctionParams& params,
                               ColorModel model, double eta, const Image* global_color,
                               double lambda_color);

/// Sum of patch objectives over the field, colors as stored.
ObjectiveTerms total_objective(const FieldOfJunctions& field, const Image& image,
                               const Consistency& consistency, double eta, double delta);

std::vector<PatchGradient> objective_gradient(const FieldOfJunctions& field, const Image& image,
                                              const Consistency& consistency, double eta,
                                              double delta);

/// Joint refinement: Adam steps on all angles and vertices with consistency
/// weights ramped linearly to their final values, periodic warm-started
/// re-initialization, and consistency targets frozen from the previous
/// iterate. When `log` is set, one CSV line per iteration is written:
/// iteration,likelihood,boundary,color,objective.
FieldOfJunctions refine(FieldOfJunctions field, const Image& image, const Config& config,
                        std::ostream* log = nullptr);

struct Analysis {
  FieldOfJunctions field;
  GlobalMaps maps;
};

/// Initialization, refinement and final global maps.
Analysis analyze(const Image& image, const Config& config, std::ostream* log = nullptr);

}  // namespace foj
