#include "foj/geometry.hpp"

#include <algorithm>

namespace foj {

JunctionFrame::JunctionFrame(const JunctionParams& params) : p_(canonicalize(params)) {
  for (int l = 0; l < p_.wedges; ++l) {
    sin_[l] = std::sin(p_.angles[l]);
    cos_[l] = std::cos(p_.angles[l]);
    keys_[l] = angle_key(cos_[l], sin_[l]);
    if (l > 0) keys_[l] = std::max(keys_[l], keys_[l - 1]);
    use_min_[l] = p_.angles[l] - p_.angles[0] < std::numbers::pi;
  }
}

namespace {

template <class F>
void for_each_pixel(PatchWindow w, F&& f) {
  for (int py = 0; py < w.size; ++py)
    for (int px = 0; px < w.size; ++px)
      f(px, py, Point{double(w.left + px), double(w.top + py)});
}

}  // namespace

DistanceFields junction_distances(const JunctionParams& params, PatchWindow window) {
  const JunctionFrame frame(params);
  const std::size_t n = std::size_t(window.size) * window.size;
  DistanceFields out{window.size, params.wedges - 1, {}};
  out.values.resize(n * out.count);
  for_each_pixel(window, [&](int px, int py, Point p) {
    double d[kMaxWedges];
    frame.distances(p, d);
    for (int m = 0; m < out.count; ++m) out.values[m * n + std::size_t(py) * window.size + px] = d[m];
  });
  return out;
}

std::vector<std::vector<double>> wedge_indicators(const JunctionParams& params, PatchWindow window,
                                                  double eta) {
  const JunctionFrame frame(params);
  const std::size_t n = std::size_t(window.size) * window.size;
  std::vector<std::vector<double>> u(params.wedges, std::vector<double>(n));
  for_each_pixel(window, [&](int px, int py, Point p) {
    double v[kMaxWedges];
    frame.indicators(p, eta, v);
    for (int j = 0; j < params.wedges; ++j) u[j][std::size_t(py) * window.size + px] = v[j];
  });
  return u;
}

std::vector<int> hard_wedges(const JunctionParams& params, PatchWindow window) {
  const JunctionFrame frame(params);
  std::vector<int> labels(std::size_t(window.size) * window.size);
  for_each_pixel(window, [&](int px, int py, Point p) {
    labels[std::size_t(py) * window.size + px] = frame.hard_wedge(p);
  });
  return labels;
}

std::vector<double> patch_boundary_map(const JunctionParams& params, PatchWindow window,
                                       double delta) {
  const JunctionFrame frame(params);
  std::vector<double> b(std::size_t(window.size) * window.size);
  for_each_pixel(window, [&](int px, int py, Point p) {
    b[std::size_t(py) * window.size + px] = frame.boundary(p, delta);
  });
  return b;
}

}  // namespace foj
