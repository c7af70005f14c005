#include "foj/global_maps.hpp"

#include <algorithm>
#include <cmath>

#include "foj/geometry.hpp"
#include "foj/parallel.hpp"

namespace foj {

namespace {

std::vector<JunctionFrame> frames_of(const FieldOfJunctions& field) {
  std::vector<JunctionFrame> frames;
  frames.reserve(field.params.size());
  for (const auto& p : field.params) frames.emplace_back(p);
  return frames;
}

}  // namespace

ScalarMap global_boundary_map(const FieldOfJunctions& field, double delta, int threads) {
  const PatchGrid& grid = field.grid;
  const auto frames = frames_of(field);
  ScalarMap out(grid.width(), grid.height());
  parallel_for(grid.height(), threads, [&](int y) {
    for (int x = 0; x < grid.width(); ++x) {
      double sum = 0.0;
      int count = 0;
      grid.for_each_covering(x, y, [&](int i) {
        sum += frames[i].boundary({double(x), double(y)}, delta);
        ++count;
      });
      out.at(x, y) = count > 0 ? sum / count : 0.0;
    }
  });
  return out;
}

Image global_color_map(const FieldOfJunctions& field, double eta, int threads) {
  const PatchGrid& grid = field.grid;
  const int channels = field.colors.empty() ? 1 : field.colors[0].channels;
  const auto frames = frames_of(field);
  Image out(grid.width(), grid.height(), channels);
  parallel_for(grid.height(), threads, [&](int y) {
    std::vector<double> acc(channels);
    double u[kMaxWedges];
    for (int x = 0; x < grid.width(); ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int count = 0;
      grid.for_each_covering(x, y, [&](int i) {
        frames[i].indicators({double(x), double(y)}, eta, u);
        const Point c = grid.center(i);
        const WedgeColors& col = field.colors[i];
        for (int j = 0; j < frames[i].wedges(); ++j)
          for (int k = 0; k < channels; ++k) acc[k] += u[j] * col.value(j, k, x - c.x, y - c.y);
        ++count;
      });
      for (int k = 0; k < channels; ++k) out.at(x, y, k) = count > 0 ? acc[k] / count : 0.0;
    }
  });
  return out;
}

double vertex_weight(const JunctionParams& params, Point center, double nu_d, double nu_e) {
  const double dx = params.vertex.x - center.x;
  const double dy = params.vertex.y - center.y;
  const double distance = std::exp(-(dx * dx + dy * dy) / (2.0 * nu_d * nu_d));
  double best = 0.0;
  for (int k = 0; k < params.wedges; ++k)
    for (int l = k + 1; l < params.wedges; ++l) {
      const double c = std::cos(params.angles[k] - params.angles[l]);
      best = std::max(best, std::min(1.0, (1.0 + c) * std::pow(1.0 - std::abs(c), nu_e)));
    }
  return distance * best;
}

ScalarMap vertex_map(const FieldOfJunctions& field, double gamma, double nu_d, double nu_e,
                     int threads) {
  const PatchGrid& grid = field.grid;
  const int w = grid.width();
  const int h = grid.height();
  const int n = grid.size();
  std::vector<double> weights(n);
  for (int i = 0; i < n; ++i) weights[i] = vertex_weight(field.params[i], grid.center(i), nu_d, nu_e);

  // The kernel is separable; rows are gathered independently.
  const double inv = 1.0 / (2.0 * gamma * gamma);
  std::vector<double> ex(std::size_t(n) * w);
  for (int i = 0; i < n; ++i)
    for (int x = 0; x < w; ++x) {
      const double d = x - field.params[i].vertex.x;
      ex[std::size_t(i) * w + x] = std::exp(-d * d * inv);
    }
  ScalarMap out(w, h);
  parallel_for(h, threads, [&](int y) {
    double* row = &out.values[std::size_t(y) * w];
    for (int i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      const double d = y - field.params[i].vertex.y;
      const double wy = weights[i] * std::exp(-d * d * inv);
      if (wy < 1e-300) continue;
      const double* e = &ex[std::size_t(i) * w];
      for (int x = 0; x < w; ++x) row[x] += wy * e[x];
    }
  });
  return out;
}

std::vector<VertexDetection> detect_vertices(const ScalarMap& v, const FieldOfJunctions& field,
                                             double threshold, double radius, double gamma,
                                             double nu_d, double nu_e) {
  std::vector<VertexDetection> out;
  const double peak = v.max();
  if (!(peak > 0.0)) return out;

  struct Candidate {
    int x;
    int y;
    double score;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < v.height; ++y)
    for (int x = 0; x < v.width; ++x) {
      const double s = v.at(x, y) / peak;
      if (s < threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if ((dx == 0 && dy == 0) || xx < 0 || yy < 0 || xx >= v.width || yy >= v.height) continue;
          const double o = v.at(xx, yy);
          // Plateaus keep their first pixel in raster order.
          if (o > v.at(x, y) || (o == v.at(x, y) && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) candidates.push_back({x, y, s});
    }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  const double r2 = radius * radius;
  const double inv = 1.0 / (2.0 * gamma * gamma);
  for (const auto& c : candidates) {
    bool suppressed = false;
    for (const auto& d : out) {
      const double dx = d.position.x - c.x;
      const double dy = d.position.y - c.y;
      if (dx * dx + dy * dy < r2) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    VertexDetection det;
    det.position = {double(c.x), double(c.y)};
    det.score = c.score;
    double best = -1.0;
    for (int i = 0; i < field.size(); ++i) {
      const auto& p = field.params[i];
      const double dx = c.x - p.vertex.x;
      const double dy = c.y - p.vertex.y;
      const double vote =
          vertex_weight(p, field.grid.center(i), nu_d, nu_e) * std::exp(-(dx * dx + dy * dy) * inv);
      if (vote > best) {
        best = vote;
        det.wedges = p.wedges;
        det.angles = p.angles;
      }
    }
    out.push_back(det);
  }
  return out;
}

GlobalMaps compute_global_maps(const FieldOfJunctions& field, const Config& config) {
  const int threads = config.thread_count();
  GlobalMaps maps;
  maps.boundary = global_boundary_map(field, config.output_delta_pixels(), threads);
  maps.color = global_color_map(field, config.eta_pixels(), threads);
  maps.vertex_likelihood =
      vertex_map(field, config.gamma_value(), config.nu_d_value(), config.nu_e, threads);
  return maps;
}

}  // namespace foj
