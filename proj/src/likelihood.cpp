#include "foj/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "foj/colors.hpp"
#include "foj/geometry.hpp"

namespace foj {

namespace {

constexpr int kMaxHistogramChannels = 8;

}  // namespace

double patch_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                       const WedgeColors& colors, bool hard, double eta) {
  if (colors.channels != image.channels()) throw Error("color channels do not match image");
  const JunctionFrame frame(params);
  const Point center = window.center();
  const int wedges = params.wedges;
  double total = 0.0;
  double u[kMaxWedges];
  for (int y = window.top; y < window.top + window.size; ++y) {
    for (int x = window.left; x < window.left + window.size; ++x) {
      if (!image.observed(x, y)) continue;
      const Point p{double(x), double(y)};
      if (hard) {
        std::fill(u, u + wedges, 0.0);
        u[frame.hard_wedge(p)] = 1.0;
      } else {
        frame.indicators(p, eta, u);
      }
      for (int j = 0; j < wedges; ++j) {
        if (u[j] == 0.0) continue;
        double err = 0.0;
        for (int k = 0; k < image.channels(); ++k) {
          const double diff = colors.value(j, k, x - center.x, y - center.y) - image.at(x, y, k);
          err += diff * diff;
        }
        total += u[j] * err;
      }
    }
  }
  return total;
}

double hard_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                      const Image* global_color, double lambda_color) {
  const JunctionFrame frame(params);
  const int wedges = params.wedges;
  const int channels = image.channels();
  const bool blend = global_color && lambda_color > 0.0;
  const std::size_t n = std::size_t(window.size) * window.size;

  std::vector<int> label(n, -1);
  std::vector<double> mass(wedges, 0.0);
  std::vector<double> sum(std::size_t(wedges) * channels, 0.0);
  for (int py = 0; py < window.size; ++py) {
    for (int px = 0; px < window.size; ++px) {
      const int x = window.left + px;
      const int y = window.top + py;
      if (!image.observed(x, y)) continue;
      const int j = frame.hard_wedge({double(x), double(y)});
      label[std::size_t(py) * window.size + px] = j;
      mass[j] += 1.0;
      for (int k = 0; k < channels; ++k)
        sum[j * channels + k] += blended_target(image, global_color, lambda_color, x, y, k);
    }
  }
  for (int j = 0; j < wedges; ++j)
    for (int k = 0; k < channels; ++k)
      if (mass[j] > 0.0) sum[j * channels + k] /= mass[j];

  double total = 0.0;
  for (int py = 0; py < window.size; ++py) {
    for (int px = 0; px < window.size; ++px) {
      const int j = label[std::size_t(py) * window.size + px];
      if (j < 0) continue;
      const int x = window.left + px;
      const int y = window.top + py;
      for (int k = 0; k < channels; ++k) {
        const double c = sum[j * channels + k];
        const double d = c - image.at(x, y, k);
        total += d * d;
        if (blend) {
          const double g = c - global_color->at(x, y, k);
          total += lambda_color * g * g;
        }
      }
    }
  }
  return total;
}

double restricted_negloglik(const Image& image, PatchWindow window, const JunctionParams& params,
                            int j, double angle, const Image* global_color, double lambda_color) {
  JunctionParams p = params;
  p.angles[j] = angle;
  return hard_negloglik(image, window, p, global_color, lambda_color);
}

PatchPixels::PatchPixels(const Image& image, PatchWindow window, const Image* global_color,
                         double lambda_color)
    : channels(image.channels()), lambda(global_color ? lambda_color : 0.0) {
  if (channels > kMaxHistogramChannels) throw Error("too many channels for angular statistics");
  const bool blend = global_color && lambda > 0.0;

  // Center on the patch mean so the Σ‖t‖² − ‖Σt‖²/n differences stay well conditioned.
  double mean[kMaxHistogramChannels] = {};
  double observed = 0.0;
  for (int y = window.top; y < window.top + window.size; ++y)
    for (int x = window.left; x < window.left + window.size; ++x) {
      if (!image.observed(x, y)) continue;
      observed += 1.0;
      for (int k = 0; k < channels; ++k) mean[k] += image.at(x, y, k);
    }
  if (observed > 0.0)
    for (int k = 0; k < channels; ++k) mean[k] /= observed;

  for (int y = window.top; y < window.top + window.size; ++y)
    for (int x = window.left; x < window.left + window.size; ++x) {
      if (!image.observed(x, y)) continue;
      xs.push_back(x);
      ys.push_back(y);
      double q = 0.0;
      for (int k = 0; k < channels; ++k) {
        const double v = image.at(x, y, k) - mean[k];
        double t = v;
        q += v * v;
        if (blend) {
          const double g = global_color->at(x, y, k) - mean[k];
          t += lambda * g;
          q += lambda * g * g;
        }
        sums.push_back(t);
      }
      sq.push_back(q);
      total_sq += q;
    }
}

AngularHistogram::AngularHistogram(const Image& image, PatchWindow window, Point vertex,
                                   const Image* global_color, double lambda_color) {
  reset(PatchPixels(image, window, global_color, lambda_color), vertex);
}

AngularHistogram::AngularHistogram(const PatchPixels& pixels, Point vertex) { reset(pixels, vertex); }

void AngularHistogram::reset(const PatchPixels& pixels, Point vertex) {
  channels_ = pixels.channels;
  lambda_ = pixels.lambda;
  has_vertex_pixel_ = false;
  vertex_pixel_ = Stats{};

  // order_ keeps every pixel, the vertex pixel under key -1. Successive
  // vertices along a search axis barely change the order, so the previous
  // order is refreshed by insertion sort.
  const int total = static_cast<int>(pixels.xs.size());
  if (order_.size() != std::size_t(total)) {
    order_.resize(total);
    for (int i = 0; i < total; ++i) order_[i].second = i;
  }
  for (auto& entry : order_) {
    const int i = entry.second;
    const double dx = pixels.xs[i] - vertex.x;
    const double dy = pixels.ys[i] - vertex.y;
    if (dx == 0.0 && dy == 0.0) {
      entry.first = -1.0;
      has_vertex_pixel_ = true;
      vertex_pixel_.count = 1.0;
      vertex_pixel_.sq = pixels.sq[i];
      for (int k = 0; k < channels_; ++k) vertex_pixel_.sum[k] = pixels.sums[std::size_t(i) * channels_ + k];
    } else {
      entry.first = angle_key(dx, dy);
    }
  }
  // Pairs compare by key, then raster index: a stable order.
  for (std::size_t i = 1; i < order_.size(); ++i) {
    const auto entry = order_[i];
    std::size_t j = i;
    for (; j > 0 && entry < order_[j - 1]; --j) order_[j] = order_[j - 1];
    order_[j] = entry;
  }
  const std::size_t skip = has_vertex_pixel_ ? 1 : 0;

  const std::size_t n = order_.size() - skip;
  stride_ = 2 + channels_;
  keys_.resize(n);
  prefix_.resize((n + 1) * stride_);
  std::fill(prefix_.begin(), prefix_.begin() + stride_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = order_[i + skip].second;
    keys_[i] = order_[i + skip].first;
    const double* prev = &prefix_[i * stride_];
    double* next = &prefix_[(i + 1) * stride_];
    next[0] = prev[0] + 1.0;
    next[1] = prev[1] + pixels.sq[p];
    for (int k = 0; k < channels_; ++k) next[2 + k] = prev[2 + k] + pixels.sums[std::size_t(p) * channels_ + k];
  }
}

std::size_t AngularHistogram::lower(double key) const {
  return static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), key) - keys_.begin());
}

inline double AngularHistogram::segment_cost(std::size_t lo, std::size_t hi) const {
  const double* a = &prefix_[lo * stride_];
  const double* b = &prefix_[hi * stride_];
  const double count = b[0] - a[0];
  if (count < 0.5) return 0.0;
  double norm = 0.0;
  for (int k = 0; k < channels_; ++k) {
    const double s = b[2 + k] - a[2 + k];
    norm += s * s;
  }
  return std::max(0.0, (b[1] - a[1]) - norm / ((1.0 + lambda_) * count));
}

inline double AngularHistogram::wrap_cost(std::size_t from, std::size_t to) const {
  const double* a = &prefix_[from * stride_];
  const double* b = &prefix_[keys_.size() * stride_];
  const double* c = &prefix_[to * stride_];
  double count = b[0] - a[0] + c[0];
  double sq = b[1] - a[1] + c[1];
  double sum[kMaxHistogramChannels];
  for (int k = 0; k < channels_; ++k) sum[k] = b[2 + k] - a[2 + k] + c[2 + k];
  if (has_vertex_pixel_) {
    count += vertex_pixel_.count;
    sq += vertex_pixel_.sq;
    for (int k = 0; k < channels_; ++k) sum[k] += vertex_pixel_.sum[k];
  }
  if (count < 0.5) return 0.0;
  double norm = 0.0;
  for (int k = 0; k < channels_; ++k) norm += sum[k] * sum[k];
  return std::max(0.0, sq - norm / ((1.0 + lambda_) * count));
}

double AngularHistogram::range_count(double key_from, double key_to) const {
  return prefix_[lower(key_to) * stride_] - prefix_[lower(key_from) * stride_];
}

double AngularHistogram::cost_of_sorted(const std::size_t* idx, int m) const {
  double total = 0.0;
  for (int k = 0; k + 1 < m; ++k) total += segment_cost(idx[k], idx[k + 1]);
  // Wrap-around sector [key_{M-1}, 4) ∪ [0, key_0) holds the vertex pixel.
  return total + wrap_cost(idx[m - 1], idx[0]);
}

double AngularHistogram::negloglik(std::span<const double> angles) const {
  const int m = static_cast<int>(angles.size());
  std::array<std::size_t, kMaxWedges> idx{};
  for (int j = 0; j < m; ++j) idx[j] = lower(angle_key(wrap_angle(angles[j])));
  std::sort(idx.begin(), idx.begin() + m);
  return cost_of_sorted(idx.data(), m);
}

void AngularHistogram::sweep(std::span<const double> angles, int j,
                             std::span<const double> candidate_keys, double* out) const {
  const int m = static_cast<int>(angles.size());
  std::array<std::size_t, kMaxWedges> fixed{};
  int f = 0;
  for (int i = 0; i < m; ++i)
    if (i != j) fixed[f++] = lower(angle_key(wrap_angle(angles[i])));
  std::sort(fixed.begin(), fixed.begin() + f);

  // A candidate splits exactly one gap between consecutive fixed indices;
  // gap g > 0 runs from fixed[g-1] to fixed[g] and gap 0 wraps around. The
  // cost of every gap is computed once.
  std::array<double, kMaxWedges> gap_cost{};
  double sum_inner = 0.0;
  for (int g = 1; g < f; ++g) {
    gap_cost[g] = segment_cost(fixed[g - 1], fixed[g]);
    sum_inner += gap_cost[g];
  }
  if (f > 0) gap_cost[0] = wrap_cost(fixed[f - 1], fixed[0]);

  const std::size_t n = keys_.size();
  std::size_t pos = 0;
  std::size_t last_pos = n + 1;
  double last_value = 0.0;
  double previous = -1.0;
  for (std::size_t c = 0; c < candidate_keys.size(); ++c) {
    const double key = candidate_keys[c];
    if (key < previous) pos = 0;
    while (pos < n && keys_[pos] < key) ++pos;
    previous = key;
    if (pos == last_pos) {
      out[c] = last_value;
      continue;
    }

    double value;
    if (f == 0) {
      value = wrap_cost(pos, pos);
    } else if (pos < fixed[0]) {
      value = sum_inner + segment_cost(pos, fixed[0]) + wrap_cost(fixed[f - 1], pos);
    } else if (pos >= fixed[f - 1]) {
      value = sum_inner + segment_cost(fixed[f - 1], pos) + wrap_cost(pos, fixed[0]);
    } else {
      int g = 1;
      while (pos >= fixed[g]) ++g;
      value = sum_inner - gap_cost[g] + gap_cost[0] + segment_cost(fixed[g - 1], pos) +
              segment_cost(pos, fixed[g]);
    }
    out[c] = value;
    last_pos = pos;
    last_value = value;
  }
}

}  // namespace foj
