#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "foj/core.hpp"

namespace foj {

/// Signed distance from point p to the line through `vertex` with direction `angle`.
inline double line_distance(Point p, Point vertex, double angle) {
  return -(p.x - vertex.x) * std::sin(angle) + (p.y - vertex.y) * std::cos(angle);
}

/// Regularized Heaviside ½[1 + (2/π) atan(d/η)].
inline double heaviside(double d, double eta) {
  return 0.5 + std::atan(d / eta) / std::numbers::pi;
}

inline double heaviside_derivative(double d, double eta) {
  return eta / (std::numbers::pi * (eta * eta + d * d));
}

/// πδ·H'_δ(d) = δ²/(δ² + d²); equals 1 on the boundary.
inline double boundary_profile(double d, double delta) {
  const double d2 = delta * delta;
  return d2 / (d2 + d * d);
}

/// Monotone pseudo-angle of a direction in [0, 4): 0 along +x, 1 along +y,
/// 2 along -x, 3 along -y. Cheaper than atan2 and order-preserving, so it is
/// used for every hard wedge membership decision.
inline double angle_key(double dx, double dy) {
  double k;
  if (dy >= 0.0)
    k = dx >= 0.0 ? dy / (dx + dy) : 1.0 - dx / (dy - dx);
  else
    k = dx < 0.0 ? 2.0 - dy / (-dx - dy) : 3.0 + dx / (dx - dy);
  return k >= 4.0 ? 0.0 : k;
}

inline double angle_key(double angle) { return angle_key(std::cos(angle), std::sin(angle)); }

/// Relaxed indicators from the nested Heaviside values h[m-1] = H(D_m),
/// m = 1..M-1:  u_1 = 1 - h_{M-1},  u_2 = h_{M-1}(1 - h_{M-2}), ...,
/// u_M = h_{M-1} ... h_1.
inline void indicators_from_heaviside(int wedges, const double* h, double* u) {
  double prefix = 1.0;
  for (int m = wedges - 1; m >= 1; --m) {
    u[wedges - 1 - m] = prefix * (1.0 - h[m - 1]);
    prefix *= h[m - 1];
  }
  u[wedges - 1] = prefix;
}

/// Hard wedge label of the sector starting at sorted angle index k. Matches
/// the η → 0 limit of the relaxed indicators.
inline int sector_label(int wedges, int k) { return wedges - 1 - k; }

/// Evaluates the relaxed level-set parametrization of one junction.
/// Expects canonical (wrapped, sorted) parameters.
class JunctionFrame {
 public:
  explicit JunctionFrame(const JunctionParams& params);

  int wedges() const { return p_.wedges; }
  const JunctionParams& params() const { return p_; }
  double sin_angle(int l) const { return sin_[l]; }
  double cos_angle(int l) const { return cos_[l]; }
  /// True if D_m = min{d_1, -d_{m+1}}, false if max.
  bool uses_min(int m) const { return use_min_[m]; }

  double line(int l, double dx, double dy) const { return -dx * sin_[l] + dy * cos_[l]; }

  /// Composed distances D_m (m = 1..M-1) written to out[m-1]. If `branch` is
  /// given, branch[m-1] is 0 when d_1 attains the min/max and 1 otherwise.
  void distances(Point p, double* out, int* branch = nullptr) const {
    const double dx = p.x - p_.vertex.x;
    const double dy = p.y - p_.vertex.y;
    const double d0 = line(0, dx, dy);
    for (int m = 1; m < p_.wedges; ++m) {
      const double other = -line(m, dx, dy);
      const bool first = use_min_[m] ? d0 <= other : d0 >= other;
      out[m - 1] = first ? d0 : other;
      if (branch) branch[m - 1] = first ? 0 : 1;
    }
  }

  void indicators(Point p, double eta, double* u) const {
    double d[kMaxWedges];
    double h[kMaxWedges];
    distances(p, d);
    for (int m = 0; m + 1 < p_.wedges; ++m) h[m] = heaviside(d[m], eta);
    indicators_from_heaviside(p_.wedges, h, u);
  }

  double boundary(Point p, double delta) const {
    double d[kMaxWedges] = {};
    distances(p, d);
    double best = std::abs(d[0]);
    for (int m = 1; m + 1 < p_.wedges; ++m) best = std::min(best, std::abs(d[m]));
    return boundary_profile(best, delta);
  }

  /// Hard wedge membership: the pixel is in the sector [φ_k, φ_{k+1}) that
  /// contains its direction from the vertex; the vertex itself goes to wedge 0.
  int hard_wedge(Point p) const {
    const double dx = p.x - p_.vertex.x;
    const double dy = p.y - p_.vertex.y;
    if (dx == 0.0 && dy == 0.0) return 0;
    return label_for_key(angle_key(dx, dy));
  }

  int label_for_key(double key) const {
    int c = 0;
    while (c < p_.wedges && keys_[c] <= key) ++c;
    return c == 0 ? 0 : p_.wedges - c;
  }

 private:
  JunctionParams p_;
  std::array<double, kMaxWedges> sin_{};
  std::array<double, kMaxWedges> cos_{};
  std::array<double, kMaxWedges> keys_{};
  std::array<bool, kMaxWedges> use_min_{};
};

/// Composed distance fields over a patch, row-major: values[(m-1) * R*R + pixel].
struct DistanceFields {
  int size = 0;
  int count = 0;
  std::vector<double> values;

  double at(int m, int px, int py) const { return values[(std::size_t(m) * size + py) * size + px]; }
};

DistanceFields junction_distances(const JunctionParams& params, PatchWindow window);

/// Relaxed indicator fields u_j, one R*R row-major field per wedge.
std::vector<std::vector<double>> wedge_indicators(const JunctionParams& params, PatchWindow window,
                                                  double eta);

/// Hard wedge label per pixel of the window.
std::vector<int> hard_wedges(const JunctionParams& params, PatchWindow window);

/// Smooth per-patch boundary map B^(δ).
std::vector<double> patch_boundary_map(const JunctionParams& params, PatchWindow window,
                                       double delta);

}  // namespace foj
