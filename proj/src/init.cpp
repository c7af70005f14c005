#include "foj/init.hpp"

#include <algorithm>
#include <cmath>

#include "foj/colors.hpp"
#include "foj/geometry.hpp"
#include "foj/likelihood.hpp"
#include "foj/parallel.hpp"

namespace foj {

namespace {

constexpr int kMaxChannels = 8;

// Relative tolerance separating a real improvement from rounding noise in
// prefix-sum differences.
constexpr double kRelTol = 1e-11;

// Optimal-constant-color cost of the hard partition with sorted keys around
// `vertex`, straight from the per-pixel statistics.
double partition_cost(const PatchPixels& px, const std::array<double, kMaxWedges>& keys, int wedges,
                      Point vertex) {
  const int channels = px.channels;
  double count[kMaxWedges] = {};
  double sq[kMaxWedges] = {};
  double sum[kMaxWedges][kMaxChannels] = {};
  for (std::size_t i = 0; i < px.xs.size(); ++i) {
    const double dx = px.xs[i] - vertex.x;
    const double dy = px.ys[i] - vertex.y;
    int label = 0;
    if (dx != 0.0 || dy != 0.0) {
      const double key = angle_key(dx, dy);
      int c = 0;
      while (c < wedges && keys[c] <= key) ++c;
      label = c == 0 ? 0 : wedges - c;
    }
    count[label] += 1.0;
    sq[label] += px.sq[i];
    const double* s = &px.sums[i * channels];
    for (int k = 0; k < channels; ++k) sum[label][k] += s[k];
  }
  double total = 0.0;
  for (int j = 0; j < wedges; ++j) {
    if (count[j] < 0.5) continue;
    double norm = 0.0;
    for (int k = 0; k < channels; ++k) norm += sum[j][k] * sum[j][k];
    total += std::max(0.0, sq[j] - norm / ((1.0 + px.lambda) * count[j]));
  }
  return total;
}

// Keys of the n angle candidates, cached per thread.
std::span<const double> candidate_keys(int n) {
  thread_local std::vector<double> keys;
  thread_local int cached = -1;
  if (cached != n) {
    keys.resize(n);
    for (int k = 0; k < n; ++k) keys[k] = angle_key(wrap_angle(angle_candidate(k, n)));
    cached = n;
  }
  return keys;
}

std::array<double, kMaxWedges> sorted_keys(const JunctionParams& p) {
  std::array<double, kMaxWedges> keys{};
  for (int j = 0; j < p.wedges; ++j) keys[j] = angle_key(wrap_angle(p.angles[j]));
  std::sort(keys.begin(), keys.begin() + p.wedges);
  return keys;
}

// Index of the middle of the first contiguous run of `tied` (circular).
int middle_of_first_run(const std::vector<char>& tied) {
  const int n = static_cast<int>(tied.size());
  int first = -1;
  for (int k = 0; k < n; ++k)
    if (tied[k]) {
      first = k;
      break;
    }
  if (first < 0) return -1;
  int start = first;
  // A run touching index 0 may continue from the end of the circle.
  if (first == 0) {
    int back = 0;
    while (back < n - 1 && tied[n - 1 - back]) ++back;
    if (back == n - 1) return 0;
    start = (n - back) % n;
  }
  int len = 0;
  while (len < n && tied[(start + len) % n]) ++len;
  return (start + (len - 1) / 2) % n;
}

// One pass of single-coordinate angle updates on a built histogram.
JunctionParams angle_pass(const AngularHistogram& hist, Point vertex, const InitOptions& options,
                          const std::array<double, kMaxWedges>* start, double* value = nullptr) {
  const int m = options.wedges;
  const int n = options.angle_samples;
  JunctionParams params;
  params.wedges = m;
  params.vertex = vertex;
  if (start) params.angles = *start;

  std::array<double, kMaxWedges> single{};
  const double scale = hist.negloglik(std::span<const double>(single.data(), m));
  const double tol = kRelTol * (1.0 + scale);
  const auto keys = candidate_keys(n);

  double current = hist.negloglik(params.angle_span());
  thread_local std::vector<double> values;
  thread_local std::vector<char> tied;
  values.resize(n);
  tied.resize(n);
  for (int j = 0; j < m; ++j) {
    hist.sweep(params.angle_span(), j, keys, values.data());
    const double best = std::min(current, *std::min_element(values.begin(), values.end()));
    if (best < current - tol) {
      for (int k = 0; k < n; ++k) tied[k] = values[k] <= best + tol && values[k] < current - tol;
      const int pick = middle_of_first_run(tied);
      params.angles[j] = angle_candidate(pick, n);
      current = values[pick];
    }
    if (options.on_update) options.on_update(current);
  }
  if (value) *value = current;
  return canonicalize(params);
}

void check_options(const InitOptions& options) {
  if (options.wedges < 2 || options.wedges > kMaxWedges) throw Error("wedge count must be between 2 and 4");
  if (options.angle_samples < options.wedges) throw Error("angle samples must be at least the wedge count");
  if (options.vertex_samples < 2) throw Error("vertex samples must be at least 2");
}

// 1-D vertex search along one axis; returns true if the parameters moved.
// With refit_angles each candidate gets one warm-started angle pass first.
bool search_vertex_axis(const PatchPixels& pixels, JunctionParams& params, PatchWindow window,
                        int axis, const InitOptions& options, double& current) {
  const double center = axis == 0 ? window.center().x : window.center().y;
  const double tol = kRelTol * (1.0 + pixels.total_sq);
  const double now = axis == 0 ? params.vertex.x : params.vertex.y;
  InitOptions quiet = options;
  quiet.on_update = nullptr;
  thread_local AngularHistogram hist;

  double best = current;
  double best_value = now;
  JunctionParams best_params = params;
  bool moved = false;
  for (int k = 0; k < options.vertex_samples; ++k) {
    const double v = vertex_candidate(center, window.size, k, options.vertex_samples);
    JunctionParams trial = params;
    (axis == 0 ? trial.vertex.x : trial.vertex.y) = v;
    double c;
    if (options.refit_angles) {
      hist.reset(pixels, trial.vertex);
      trial = angle_pass(hist, trial.vertex, quiet, &params.angles, &c);
    } else {
      c = partition_cost(pixels, sorted_keys(trial), trial.wedges, trial.vertex);
    }
    if (c < best - tol) {
      best = c;
      best_value = v;
      best_params = trial;
      moved = true;
    } else if (moved && c <= best + tol) {
      // Equal cost: prefer the sample nearest the current coordinate.
      if (std::abs(v - now) < std::abs(best_value - now)) {
        best_value = v;
        best_params = trial;
        best = std::min(best, c);
      }
    }
  }
  if (!moved) return false;
  params = best_params;
  current = partition_cost(pixels, sorted_keys(params), params.wedges, params.vertex);
  if (options.on_update) options.on_update(current);
  return true;
}

}  // namespace

JunctionParams optimize_angles(const Image& image, PatchWindow window, Point vertex,
                               const InitOptions& options,
                               const std::array<double, kMaxWedges>* start) {
  check_options(options);
  const AngularHistogram hist(image, window, vertex, options.global_color, options.lambda_color);
  return angle_pass(hist, vertex, options, start);
}

JunctionParams optimize_vertex_and_angles(const Image& image, PatchWindow window,
                                          const InitOptions& options,
                                          const JunctionParams* start) {
  JunctionParams params;
  params.wedges = options.wedges;
  params.vertex = window.center();
  if (start) params = canonicalize(*start);

  check_options(options);
  const PatchPixels pixels(image, window, options.global_color, options.lambda_color);
  AngularHistogram hist;
  for (int round = 0; round < options.rounds; ++round) {
    const JunctionParams before = params;
    const bool warm = start || round > 0;
    hist.reset(pixels, params.vertex);
    params = angle_pass(hist, params.vertex, options, warm ? &params.angles : nullptr);
    double current = partition_cost(pixels, sorted_keys(params), params.wedges, params.vertex);
    search_vertex_axis(pixels, params, window, 0, options, current);
    search_vertex_axis(pixels, params, window, 1, options, current);
    if (params == before) break;
  }
  return params;
}

FieldOfJunctions initialize_field(const Image& image, const Config& config) {
  config.validate();
  FieldOfJunctions field;
  field.grid = build_patch_grid(image.width(), image.height(), config.patch_size, config.stride);
  const int n = field.grid.size();
  field.params.resize(n);
  field.colors.resize(n);

  InitOptions options;
  options.wedges = config.wedges;
  options.angle_samples = config.angle_samples;
  options.vertex_samples = config.vertex_samples;
  options.rounds = config.n_init;
  options.refit_angles = config.refit_angles;

  parallel_for(n, config.thread_count(), [&](int i) {
    const PatchWindow w = field.grid.window(i);
    field.params[i] = optimize_vertex_and_angles(image, w, options);
    const auto u = wedge_indicators(field.params[i], w, config.eta_pixels());
    field.colors[i] = optimal_colors(config.color_model, image, w, u, nullptr, 0.0);
  });
  return field;
}

}  // namespace foj
