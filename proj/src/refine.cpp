#include "foj/refine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "foj/colors.hpp"
#include "foj/geometry.hpp"
#include "foj/global_maps.hpp"
#include "foj/init.hpp"
#include "foj/parallel.hpp"

namespace foj {

namespace {

constexpr int kMaxChannels = 8;

bool finite_params(const JunctionParams& p) {
  for (int j = 0; j < p.wedges; ++j)
    if (!std::isfinite(p.angles[j])) return false;
  return std::isfinite(p.vertex.x) && std::isfinite(p.vertex.y);
}

}  // namespace

ObjectiveTerms patch_objective(const Image& image, PatchWindow window, const JunctionParams& params,
                               const WedgeColors& colors, const Consistency& consistency,
                               double eta, double delta, PatchGradient* gradient) {
  std::array<int, kMaxWedges> order{};
  const JunctionFrame frame(canonicalize(params, &order));
  const int m_count = params.wedges;
  const int channels = image.channels();
  if (channels > kMaxChannels) throw Error("too many channels");
  const Point center = window.center();
  const Point vertex = frame.params().vertex;
  const ScalarMap* bhat = consistency.boundary;
  const Image* chat = consistency.lambda_color > 0.0 ? consistency.color : nullptr;
  const double lb = bhat ? consistency.lambda_boundary : 0.0;
  const double lc = chat ? consistency.lambda_color : 0.0;
  const double delta2 = delta * delta;

  ObjectiveTerms terms;
  double g_angle[kMaxWedges] = {};
  double g_vx = 0.0;
  double g_vy = 0.0;

  double d[kMaxWedges];
  double big_d[kMaxWedges];
  int branch[kMaxWedges];
  double h[kMaxWedges];
  double u[kMaxWedges];
  double g[kMaxWedges];
  double g_big[kMaxWedges];
  double g_line[kMaxWedges];

  for (int py = 0; py < window.size; ++py) {
    for (int px = 0; px < window.size; ++px) {
      const int x = window.left + px;
      const int y = window.top + py;
      const double dx = x - vertex.x;
      const double dy = y - vertex.y;
      for (int l = 0; l < m_count; ++l) d[l] = frame.line(l, dx, dy);
      for (int m = 1; m < m_count; ++m) {
        const double other = -d[m];
        const bool first = frame.uses_min(m) ? d[0] <= other : d[0] >= other;
        big_d[m] = first ? d[0] : other;
        branch[m] = first ? 0 : 1;
        h[m - 1] = heaviside(big_d[m], eta);
      }
      indicators_from_heaviside(m_count, h, u);

      const bool observed = image.observed(x, y);
      if (observed) {
        const double lx = x - center.x;
        const double ly = y - center.y;
        for (int j = 0; j < m_count; ++j) {
          double e = 0.0;
          double f = 0.0;
          for (int k = 0; k < channels; ++k) {
            const double c = colors.value(j, k, lx, ly);
            const double r = c - image.at(x, y, k);
            e += r * r;
            if (chat) {
              const double q = c - chat->at(x, y, k);
              f += q * q;
            }
          }
          terms.likelihood += u[j] * e;
          terms.color += u[j] * f;
          g[j] = e + lc * f;
        }
      }

      int nearest = 1;
      double bval = 0.0;
      if (bhat) {
        for (int m = 2; m < m_count; ++m)
          if (std::abs(big_d[m]) < std::abs(big_d[nearest])) nearest = m;
        bval = boundary_profile(big_d[nearest], delta);
        const double diff = bval - bhat->at(x, y);
        terms.boundary += diff * diff;
      }

      if (!gradient) continue;
      for (int m = 1; m < m_count; ++m) g_big[m] = 0.0;
      if (observed) {
        // Nested products: P_m = Π_{m' > m} h_{m'}, T_m = (1 − h_m) g_{M-1-m} + h_m T_{m-1}.
        double tail[kMaxWedges];
        tail[0] = g[m_count - 1];
        for (int m = 1; m < m_count; ++m)
          tail[m] = (1.0 - h[m - 1]) * g[m_count - 1 - m] + h[m - 1] * tail[m - 1];
        double prefix = 1.0;
        for (int m = m_count - 1; m >= 1; --m) {
          const double dh = prefix * (tail[m - 1] - g[m_count - 1 - m]);
          g_big[m] += dh * heaviside_derivative(big_d[m], eta);
          prefix *= h[m - 1];
        }
      }
      if (bhat && lb > 0.0) {
        const double dist = big_d[nearest];
        const double denom = delta2 + dist * dist;
        const double db = -2.0 * delta2 * dist / (denom * denom);
        g_big[nearest] += 2.0 * lb * (bval - bhat->at(x, y)) * db;
      }
      for (int l = 0; l < m_count; ++l) g_line[l] = 0.0;
      for (int m = 1; m < m_count; ++m) {
        if (branch[m] == 0)
          g_line[0] += g_big[m];
        else
          g_line[m] -= g_big[m];
      }
      for (int l = 0; l < m_count; ++l) {
        if (g_line[l] == 0.0) continue;
        const double s = frame.sin_angle(l);
        const double c = frame.cos_angle(l);
        g_angle[l] += g_line[l] * (-dx * c - dy * s);
        g_vx += g_line[l] * s;
        g_vy -= g_line[l] * c;
      }
    }
  }
  if (gradient) {
    gradient->fill(0.0);
    for (int k = 0; k < m_count; ++k) (*gradient)[order[k]] = g_angle[k];
    (*gradient)[kGradVertexX] = g_vx;
    (*gradient)[kGradVertexY] = g_vy;
  }
  return terms;
}

WedgeColors solve_patch_colors(const Image& image, PatchWindow window, const JunctionParams& params,
                               ColorModel model, double eta, const Image* global_color,
                               double lambda_color) {
  if (lambda_color > 0.0 && !global_color)
    throw Error("color consistency requires a global color map");
  const JunctionFrame frame(params);
  const int channels = image.channels();
  ColorAccumulator acc(model, params.wedges, channels);
  const Point center = window.center();
  double target[kMaxChannels];
  double u[kMaxWedges];
  for (int y = window.top; y < window.top + window.size; ++y) {
    for (int x = window.left; x < window.left + window.size; ++x) {
      if (!image.observed(x, y)) continue;
      frame.indicators({double(x), double(y)}, eta, u);
      for (int k = 0; k < channels; ++k)
        target[k] = blended_target(image, global_color, lambda_color, x, y, k);
      acc.add(x - center.x, y - center.y, u, target);
    }
  }
  // Colors are indexed by the canonical wedge order of the frame, which is
  // also the order used by every evaluator.
  return acc.solve();
}

ObjectiveTerms total_objective(const FieldOfJunctions& field, const Image& image,
                               const Consistency& consistency, double eta, double delta) {
  ObjectiveTerms total;
  for (int i = 0; i < field.size(); ++i)
    total += patch_objective(image, field.grid.window(i), field.params[i], field.colors[i],
                             consistency, eta, delta);
  return total;
}

std::vector<PatchGradient> objective_gradient(const FieldOfJunctions& field, const Image& image,
                                              const Consistency& consistency, double eta,
                                              double delta) {
  std::vector<PatchGradient> out(field.size());
  for (int i = 0; i < field.size(); ++i)
    patch_objective(image, field.grid.window(i), field.params[i], field.colors[i], consistency, eta,
                    delta, &out[i]);
  return out;
}

namespace {

struct AdamState {
  PatchGradient m{};
  PatchGradient v{};
};

// Per-worker buffers for the fused per-patch step.
struct Workspace {
  std::vector<double> big_d;  // [pixel][m]
  std::vector<int> branch;    // [pixel][m]
  std::vector<double> h;      // [pixel][m]
  std::vector<double> u;      // [pixel][j]
};

// Boundary and color sums of one row of patches over the R image rows it
// covers. Each band is filled by a single worker in column order, so the
// gathered B̂ and Î do not depend on the thread count.
struct Band {
  int top = 0;
  int width = 0;
  std::vector<double> boundary;  // [row][x]
  std::vector<double> color;     // [row][x][k]
};

// One refinement pass over a patch: closed-form colors against the frozen Î,
// objective terms and gradient against the frozen B̂ and Î, and the patch's
// contributions to the next B̂ and Î.
ObjectiveTerms fused_patch_step(const Image& image, PatchWindow window, const JunctionParams& params,
                                ColorModel model, const Consistency& cons, double eta, double delta,
                                WedgeColors& colors, PatchGradient& gradient, Workspace& ws,
                                Band& band) {
  const JunctionFrame frame(params);
  const int mc = params.wedges;
  const int channels = image.channels();
  const int size = window.size;
  const std::size_t n = std::size_t(size) * size;
  ws.big_d.resize(n * kMaxWedges);
  ws.branch.resize(n * kMaxWedges);
  ws.h.resize(n * kMaxWedges);
  ws.u.resize(n * kMaxWedges);
  const Point vertex = params.vertex;
  const Point center = window.center();
  const Image* chat = cons.lambda_color > 0.0 ? cons.color : nullptr;
  const double lb = cons.lambda_boundary;
  const double lc = chat ? cons.lambda_color : 0.0;
  const double delta2 = delta * delta;

  ColorAccumulator acc(model, mc, channels);
  double target[kMaxChannels];
  double d[kMaxWedges];
  for (std::size_t pix = 0; pix < n; ++pix) {
    const int x = window.left + int(pix % size);
    const int y = window.top + int(pix / size);
    const double dx = x - vertex.x;
    const double dy = y - vertex.y;
    for (int l = 0; l < mc; ++l) d[l] = frame.line(l, dx, dy);
    double* bd = &ws.big_d[pix * kMaxWedges];
    int* br = &ws.branch[pix * kMaxWedges];
    double* h = &ws.h[pix * kMaxWedges];
    for (int m = 1; m < mc; ++m) {
      const double other = -d[m];
      const bool first = frame.uses_min(m) ? d[0] <= other : d[0] >= other;
      bd[m] = first ? d[0] : other;
      br[m] = first ? 0 : 1;
      h[m - 1] = heaviside(bd[m], eta);
    }
    double* u = &ws.u[pix * kMaxWedges];
    indicators_from_heaviside(mc, h, u);
    if (!image.observed(x, y)) continue;
    for (int k = 0; k < channels; ++k) target[k] = blended_target(image, chat, lc, x, y, k);
    acc.add(x - center.x, y - center.y, u, target);
  }
  colors = acc.solve();

  ObjectiveTerms terms;
  double g_angle[kMaxWedges] = {};
  double g_vx = 0.0;
  double g_vy = 0.0;
  double g[kMaxWedges];
  double g_big[kMaxWedges];
  double g_line[kMaxWedges];
  double render[kMaxChannels];
  for (std::size_t pix = 0; pix < n; ++pix) {
    const int x = window.left + int(pix % size);
    const int y = window.top + int(pix / size);
    const double lx = x - center.x;
    const double ly = y - center.y;
    const double* bd = &ws.big_d[pix * kMaxWedges];
    const int* br = &ws.branch[pix * kMaxWedges];
    const double* h = &ws.h[pix * kMaxWedges];
    const double* u = &ws.u[pix * kMaxWedges];
    const bool observed = image.observed(x, y);

    for (int k = 0; k < channels; ++k) render[k] = 0.0;
    for (int j = 0; j < mc; ++j) {
      double e = 0.0;
      double f = 0.0;
      for (int k = 0; k < channels; ++k) {
        const double c = colors.value(j, k, lx, ly);
        render[k] += u[j] * c;
        if (!observed) continue;
        const double r = c - image.at(x, y, k);
        e += r * r;
        if (chat) {
          const double q = c - chat->at(x, y, k);
          f += q * q;
        }
      }
      terms.likelihood += u[j] * e;
      terms.color += u[j] * f;
      g[j] = e + lc * f;
    }
    const std::size_t at = std::size_t(y - band.top) * band.width + x;
    for (int k = 0; k < channels; ++k) band.color[at * channels + k] += render[k];

    int nearest = 1;
    for (int m = 2; m < mc; ++m)
      if (std::abs(bd[m]) < std::abs(bd[nearest])) nearest = m;
    const double bval = boundary_profile(bd[nearest], delta);
    band.boundary[at] += bval;

    for (int m = 1; m < mc; ++m) g_big[m] = 0.0;
    if (observed) {
      double tail[kMaxWedges];
      tail[0] = g[mc - 1];
      for (int m = 1; m < mc; ++m) tail[m] = (1.0 - h[m - 1]) * g[mc - 1 - m] + h[m - 1] * tail[m - 1];
      double prefix = 1.0;
      for (int m = mc - 1; m >= 1; --m) {
        g_big[m] += prefix * (tail[m - 1] - g[mc - 1 - m]) * heaviside_derivative(bd[m], eta);
        prefix *= h[m - 1];
      }
    }
    if (cons.boundary) {
      const double diff = bval - cons.boundary->at(x, y);
      terms.boundary += diff * diff;
      if (lb > 0.0) {
        const double dist = bd[nearest];
        const double denom = delta2 + dist * dist;
        g_big[nearest] += 2.0 * lb * diff * (-2.0 * delta2 * dist / (denom * denom));
      }
    }
    for (int l = 0; l < mc; ++l) g_line[l] = 0.0;
    for (int m = 1; m < mc; ++m) {
      if (br[m] == 0)
        g_line[0] += g_big[m];
      else
        g_line[m] -= g_big[m];
    }
    const double dx = x - vertex.x;
    const double dy = y - vertex.y;
    for (int l = 0; l < mc; ++l) {
      if (g_line[l] == 0.0) continue;
      const double s = frame.sin_angle(l);
      const double c = frame.cos_angle(l);
      g_angle[l] += g_line[l] * (-dx * c - dy * s);
      g_vx += g_line[l] * s;
      g_vy -= g_line[l] * c;
    }
  }
  gradient.fill(0.0);
  for (int l = 0; l < mc; ++l) gradient[l] = g_angle[l];
  gradient[kGradVertexX] = g_vx;
  gradient[kGradVertexY] = g_vy;
  return terms;
}

}  // namespace

FieldOfJunctions refine(FieldOfJunctions field, const Image& image, const Config& config,
                        std::ostream* log) {
  config.validate();
  const int n = field.size();
  const int width = image.width();
  const int height = image.height();
  const int channels = image.channels();
  const int threads = std::min(config.thread_count(), std::max(1, n));
  const double eta = config.eta_pixels();
  const double delta = config.delta_pixels();
  const double lr_vertex = config.lr_vertex * config.patch_unit();
  const double reach = 1.5 * config.patch_size;
  const int iterations = config.n_iter;

  for (auto& p : field.params) p = canonicalize(p);

  std::vector<double> inv_cover(std::size_t(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int c = field.grid.coverage(x, y);
      inv_cover[std::size_t(y) * width + x] = c > 0 ? 1.0 / c : 0.0;
    }

  std::vector<AdamState> adam(n);
  const int rows = field.grid.rows();
  const int cols = field.grid.cols();
  std::vector<Workspace> spaces(std::min(threads, std::max(1, rows)));
  std::vector<Band> bands(rows);
  for (int r = 0; r < rows; ++r) {
    bands[r].top = field.grid.window(r * cols).top;
    bands[r].width = width;
    bands[r].boundary.assign(std::size_t(field.grid.patch_size()) * width, 0.0);
    bands[r].color.assign(std::size_t(field.grid.patch_size()) * width * channels, 0.0);
  }
  ScalarMap bhat = global_boundary_map(field, delta, threads);
  Image chat = global_color_map(field, eta, threads);

  InitOptions reinit;
  reinit.wedges = config.wedges;
  reinit.angle_samples = config.angle_samples;
  reinit.vertex_samples = config.vertex_samples;
  reinit.rounds = 1;
  reinit.refit_angles = config.refit_angles;

  std::vector<ObjectiveTerms> patch_terms(n);
  double beta1_t = 1.0;
  double beta2_t = 1.0;
  for (int t = 1; t <= iterations; ++t) {
    const double ramp = double(t) / iterations;
    const Consistency cons{&bhat, &chat, config.lambda_boundary * ramp, config.lambda_color * ramp};
    beta1_t *= config.adam_beta1;
    beta2_t *= config.adam_beta2;
    for (auto& band : bands) {
      std::fill(band.boundary.begin(), band.boundary.end(), 0.0);
      std::fill(band.color.begin(), band.color.end(), 0.0);
    }

    parallel_blocks(rows, threads, [&](int row_begin, int row_end, int worker) {
      Workspace& ws = spaces[worker];
      for (int i = row_begin * cols; i < row_end * cols; ++i) {
        Band& band = bands[i / cols];
        const PatchWindow w = field.grid.window(i);
        JunctionParams& p = field.params[i];
        PatchGradient grad;
        patch_terms[i] = fused_patch_step(image, w, p, config.color_model, cons, eta, delta,
                                          field.colors[i], grad, ws, band);
        for (double gv : grad)
          if (!std::isfinite(gv))
            throw NumericError("non-finite gradient in patch " + std::to_string(i), i);

        AdamState& st = adam[i];
        auto step = [&](int slot, double lr) {
          st.m[slot] = config.adam_beta1 * st.m[slot] + (1.0 - config.adam_beta1) * grad[slot];
          st.v[slot] =
              config.adam_beta2 * st.v[slot] + (1.0 - config.adam_beta2) * grad[slot] * grad[slot];
          const double mh = st.m[slot] / (1.0 - beta1_t);
          const double vh = st.v[slot] / (1.0 - beta2_t);
          return lr * mh / (std::sqrt(vh) + config.adam_epsilon);
        };
        for (int j = 0; j < p.wedges; ++j) p.angles[j] -= step(j, config.lr_angle);
        p.vertex.x -= step(kGradVertexX, lr_vertex);
        p.vertex.y -= step(kGradVertexY, lr_vertex);
        const Point c = w.center();
        p.vertex.x = std::clamp(p.vertex.x, c.x - reach, c.x + reach);
        p.vertex.y = std::clamp(p.vertex.y, c.y - reach, c.y + reach);

        std::array<int, kMaxWedges> order{};
        p = canonicalize(p, &order);
        const AdamState old = st;
        for (int k = 0; k < p.wedges; ++k) {
          st.m[k] = old.m[order[k]];
          st.v[k] = old.v[order[k]];
        }
        if (!finite_params(p))
          throw NumericError("non-finite parameters in patch " + std::to_string(i), i);
      }
    });

    if (log) {
      ObjectiveTerms sum;
      for (const auto& pt : patch_terms) sum += pt;
      *log << t << ',' << sum.likelihood << ',' << sum.boundary << ',' << sum.color << ','
           << sum.weighted(cons.lambda_boundary, cons.lambda_color) << '\n';
    }
    if (t == iterations) break;

    const bool reinit_now = config.reinit_every > 0 && t % config.reinit_every == 0;
    if (reinit_now) {
      reinit.global_color = &chat;
      reinit.lambda_color = cons.lambda_color;
      parallel_for(n, threads, [&](int i) {
        const PatchWindow w = field.grid.window(i);
        const JunctionParams& current = field.params[i];
        const JunctionParams candidate = optimize_vertex_and_angles(image, w, reinit, &current);
        if (candidate == current) return;
        const WedgeColors old_colors =
            solve_patch_colors(image, w, current, config.color_model, eta, &chat, cons.lambda_color);
        const WedgeColors new_colors =
            solve_patch_colors(image, w, candidate, config.color_model, eta, &chat, cons.lambda_color);
        const ObjectiveTerms before = patch_objective(image, w, current, old_colors, cons, eta, delta);
        const ObjectiveTerms after = patch_objective(image, w, candidate, new_colors, cons, eta, delta);
        const double lb = cons.lambda_boundary;
        const double lc = cons.lambda_color;
        if (after.weighted(lb, lc) < before.weighted(lb, lc) && after.likelihood <= before.likelihood) {
          field.params[i] = candidate;
          field.colors[i] = new_colors;
          adam[i] = AdamState{};
        }
      });
    }

    // The sums gathered during the pass describe the parameters and colors
    // the gradient was taken at, i.e. the previous iterate of the next step.
    parallel_for(height, threads, [&](int y) {
      const auto [r0, r1] = field.grid.covering_rows(y);
      double c[kMaxChannels];
      for (int x = 0; x < width; ++x) {
        const std::size_t idx = std::size_t(y) * width + x;
        double b = 0.0;
        std::fill(c, c + channels, 0.0);
        for (int r = r0; r < r1; ++r) {
          const Band& band = bands[r];
          const std::size_t at = std::size_t(y - band.top) * width + x;
          b += band.boundary[at];
          for (int k = 0; k < channels; ++k) c[k] += band.color[at * channels + k];
        }
        bhat.values[idx] = b * inv_cover[idx];
        for (int k = 0; k < channels; ++k) chat.data()[idx * channels + k] = c[k] * inv_cover[idx];
      }
    });
    if (reinit_now) {
      bhat = global_boundary_map(field, delta, threads);
      chat = global_color_map(field, eta, threads);
    }
  }

  // Final colors for the final parameters, blended toward the last targets.
  const bool blend = iterations > 0 && config.lambda_color > 0.0;
  parallel_for(n, threads, [&](int i) {
    field.colors[i] =
        solve_patch_colors(image, field.grid.window(i), field.params[i], config.color_model, eta,
                           blend ? &chat : nullptr, blend ? config.lambda_color : 0.0);
  });
  return field;
}

Analysis analyze(const Image& image, const Config& config, std::ostream* log) {
  config.validate();
  if (image.width() < config.patch_size || image.height() < config.patch_size)
    throw SizeError("patch size exceeds image dimensions");
  Analysis out;
  out.field = refine(initialize_field(image, config), image, config, log);
  out.maps = compute_global_maps(out.field, config);
  return out;
}

}  // namespace foj
