#include "foj/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "foj/rng.hpp"

namespace foj {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBlobSamples = 720;

double wrap_pi(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - kPi;
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

DatasetItem blank(int width, int height, int type) {
  DatasetItem item;
  item.image = Image(width, height, 1);
  item.truth.type = type;
  item.truth.width = width;
  item.truth.height = height;
  item.truth.labels.assign(std::size_t(width) * height, 0);
  return item;
}

void finish_truth(GroundTruth& truth) {
  truth.boundary = rasterize_polylines(truth.width, truth.height, truth.polylines);
}

bool inside_polygon(Point p, const std::array<Point, 4>& poly) {
  // Convex polygon, either orientation.
  int sign = 0;
  for (int k = 0; k < 4; ++k) {
    const Point a = poly[k];
    const Point b = poly[(k + 1) % 4];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    const int s = cross > 0.0 ? 1 : (cross < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

// Separating-axis test with a required gap between two convex quads.
bool separated(const std::array<Point, 4>& a, const std::array<Point, 4>& b, double gap) {
  for (const auto* poly : {&a, &b}) {
    for (int k = 0; k < 4; ++k) {
      const Point p = (*poly)[k];
      const Point q = (*poly)[(k + 1) % 4];
      double nx = -(q.y - p.y);
      double ny = q.x - p.x;
      const double len = std::hypot(nx, ny);
      nx /= len;
      ny /= len;
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const Point v : a) {
        const double s = v.x * nx + v.y * ny;
        amin = std::min(amin, s);
        amax = std::max(amax, s);
      }
      for (const Point v : b) {
        const double s = v.x * nx + v.y * ny;
        bmin = std::min(bmin, s);
        bmax = std::max(bmax, s);
      }
      if (amax + gap <= bmin || bmax + gap <= amin) return true;
    }
  }
  return false;
}

std::uint64_t item_stream(int type, int index) {
  return (std::uint64_t(type) << 32) | std::uint32_t(index);
}

}  // namespace

double Blob::radius(double theta) const {
  return r0 * (1.0 + a2 * std::cos(2.0 * theta + p2) + a3 * std::cos(3.0 * theta + p3));
}

std::array<Point, 4> Square::corners() const {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  const double h = 0.5 * side;
  const double local[4][2] = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  std::array<Point, 4> out;
  for (int k = 0; k < 4; ++k)
    out[k] = {center.x + c * local[k][0] - s * local[k][1], center.y + s * local[k][0] + c * local[k][1]};
  return out;
}

DatasetItem render_blobs(int width, int height, std::span<const Blob> blobs) {
  DatasetItem item = blank(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (std::size_t b = 0; b < blobs.size(); ++b) {
        const double dx = x - blobs[b].center.x;
        const double dy = y - blobs[b].center.y;
        if (std::hypot(dx, dy) < blobs[b].radius(std::atan2(dy, dx))) {
          item.image.at(x, y) = blobs[b].level;
          item.truth.labels[std::size_t(y) * width + x] = int(b) + 1;
        }
      }
  for (const Blob& b : blobs) {
    std::vector<Point> line;
    for (int k = 0; k <= kBlobSamples; ++k) {
      const double t = kTwoPi * k / kBlobSamples;
      const double r = b.radius(t);
      line.push_back({b.center.x + r * std::cos(t), b.center.y + r * std::sin(t)});
    }
    item.truth.polylines.push_back(std::move(line));
  }
  finish_truth(item.truth);
  return item;
}

DatasetItem render_squares(int width, int height, std::span<const Square> squares) {
  DatasetItem item = blank(width, height, 2);
  for (std::size_t q = 0; q < squares.size(); ++q) {
    const auto poly = squares[q].corners();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (inside_polygon({double(x), double(y)}, poly)) {
          item.image.at(x, y) = squares[q].level;
          item.truth.labels[std::size_t(y) * width + x] = int(q) + 1;
        }
    std::vector<Point> line(poly.begin(), poly.end());
    line.push_back(poly[0]);
    item.truth.polylines.push_back(std::move(line));
    for (int k = 0; k < 4; ++k) {
      const Point c = poly[k];
      const Point next = poly[(k + 1) % 4];
      const Point prev = poly[(k + 3) % 4];
      item.truth.vertices.push_back(
          {c, {std::atan2(next.y - c.y, next.x - c.x), std::atan2(prev.y - c.y, prev.x - c.x)}});
    }
  }
  finish_truth(item.truth);
  return item;
}

DatasetItem render_junction_pair(int width, int height, const JunctionPair& pair) {
  DatasetItem item = blank(width, height, 3);
  const Point a = pair.first;
  const Point b = pair.second;
  const double ux = b.x - a.x;
  const double uy = b.y - a.y;
  const double theta = std::atan2(uy, ux);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      int region;
      const double from_a = wrap_pi(std::atan2(y - a.y, x - a.x) - (theta + kPi));
      const double from_b = wrap_pi(std::atan2(y - b.y, x - b.x) - theta);
      if (std::abs(from_a) < pair.alpha_first)
        region = 0;
      else if (std::abs(from_b) < pair.alpha_second)
        region = 2;
      else
        region = ux * (y - a.y) - uy * (x - a.x) > 0.0 ? 1 : 3;
      item.image.at(x, y) = pair.levels[region];
      item.truth.labels[std::size_t(y) * width + x] = region;
    }

  const double reach = 4.0 * (width + height);
  auto ray = [&](Point from, double angle) {
    return std::vector<Point>{from, {from.x + reach * std::cos(angle), from.y + reach * std::sin(angle)}};
  };
  item.truth.polylines.push_back({a, b});
  item.truth.polylines.push_back(ray(a, theta + kPi - pair.alpha_first));
  item.truth.polylines.push_back(ray(a, theta + kPi + pair.alpha_first));
  item.truth.polylines.push_back(ray(b, theta + pair.alpha_second));
  item.truth.polylines.push_back(ray(b, theta - pair.alpha_second));
  item.truth.vertices.push_back(
      {a, {wrap_angle(theta), wrap_angle(theta + kPi - pair.alpha_first),
           wrap_angle(theta + kPi + pair.alpha_first)}});
  item.truth.vertices.push_back(
      {b, {wrap_angle(theta + kPi), wrap_angle(theta + pair.alpha_second),
           wrap_angle(theta - pair.alpha_second)}});
  finish_truth(item.truth);
  return item;
}

DatasetItem generate_item(int type, std::uint64_t seed, int index) {
  const int size = kDatasetImageSize;
  Rng rng(seed, item_stream(type, index));
  if (type == 1) {
    for (;;) {
      std::array<Blob, 2> blobs;
      for (auto& b : blobs) {
        b.r0 = rng.uniform(9.0, 14.0);
        b.a2 = rng.uniform(0.0, 0.12);
        b.p2 = rng.uniform(0.0, kTwoPi);
        b.a3 = rng.uniform(0.0, 0.12);
        b.p3 = rng.uniform(0.0, kTwoPi);
        const double reach = b.r0 * (1.0 + b.a2 + b.a3) + 2.0;
        b.center = {rng.uniform(reach, size - 1 - reach), rng.uniform(reach, size - 1 - reach)};
      }
      blobs[0].level = 128.0 / 255;
      blobs[1].level = 1.0;
      const double need = blobs[0].r0 * (1.0 + blobs[0].a2 + blobs[0].a3) +
                          blobs[1].r0 * (1.0 + blobs[1].a2 + blobs[1].a3) + 3.0;
      if (std::hypot(blobs[0].center.x - blobs[1].center.x, blobs[0].center.y - blobs[1].center.y) > need)
        return render_blobs(size, size, blobs);
    }
  }
  if (type == 2) {
    for (;;) {
      std::array<Square, 2> squares;
      bool fits = true;
      for (auto& q : squares) {
        q.side = rng.uniform(16.0, 40.0);
        q.rotation = rng.uniform(0.0, 0.5 * kPi);
        const double half = 0.5 * q.side * (std::abs(std::cos(q.rotation)) + std::abs(std::sin(q.rotation)));
        const double lo = half + 2.0;
        const double hi = size - 1 - half - 2.0;
        if (lo > hi) {
          fits = false;
          break;
        }
        q.center = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
      }
      if (!fits) continue;
      squares[0].level = 128.0 / 255;
      squares[1].level = 1.0;
      if (separated(squares[0].corners(), squares[1].corners(), 3.0))
        return render_squares(size, size, squares);
    }
  }
  if (type == 3) {
    constexpr double kMargin = 14.0;
    for (;;) {
      JunctionPair pair;
      pair.first = {rng.uniform(kMargin, size - 1 - kMargin), rng.uniform(kMargin, size - 1 - kMargin)};
      const double length = rng.uniform(24.0, 32.0);
      const double dir = rng.uniform(0.0, kTwoPi);
      pair.second = {pair.first.x + length * std::cos(dir), pair.first.y + length * std::sin(dir)};
      pair.alpha_first = rng.uniform(40.0, 50.0) * kPi / 180.0;
      pair.alpha_second = rng.uniform(40.0, 50.0) * kPi / 180.0;
      std::array<double, 4> levels{0.0, 85.0, 170.0, 255.0};
      for (int k = 3; k > 0; --k) std::swap(levels[k], levels[rng.uniform_int(0, k)]);
      for (int k = 0; k < 4; ++k) pair.levels[k] = levels[k] / 255.0;
      const Point b = pair.second;
      if (b.x < kMargin || b.y < kMargin || b.x > size - 1 - kMargin || b.y > size - 1 - kMargin) continue;
      return render_junction_pair(size, size, pair);
    }
  }
  throw Error("dataset type must be 1, 2 or 3");
}

std::vector<DatasetItem> generate_dataset(std::uint64_t seed) {
  std::vector<DatasetItem> out;
  out.reserve(3 * kDatasetPerType);
  for (int type = 1; type <= 3; ++type)
    for (int i = 0; i < kDatasetPerType; ++i) out.push_back(generate_item(type, seed, i));
  return out;
}

std::vector<std::uint8_t> rasterize_polylines(int width, int height,
                                              const std::vector<std::vector<Point>>& polylines,
                                              double radius) {
  std::vector<std::uint8_t> mask(std::size_t(width) * height, 0);
  for (const auto& line : polylines) {
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const Point a = line[s];
      const Point b = line[s + 1];
      // Only pixels inside the segment's padded bounding box can be close.
      const int x0 = std::max(0, int(std::floor(std::min(a.x, b.x) - radius)));
      const int x1 = std::min(width - 1, int(std::ceil(std::max(a.x, b.x) + radius)));
      const int y0 = std::max(0, int(std::floor(std::min(a.y, b.y) - radius)));
      const int y1 = std::min(height - 1, int(std::ceil(std::max(a.y, b.y) + radius)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (segment_distance({double(x), double(y)}, a, b) <= radius)
            mask[std::size_t(y) * width + x] = 1;
    }
  }
  return mask;
}

Image add_noise(const Image& image, double sigma, std::uint64_t seed) {
  Image out = image;
  if (sigma == 0.0) return out;
  Rng rng(seed, 0x6e6f697365ULL);
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

Scores match_boundaries(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                        int width, int height, double match_dist) {
  std::vector<int> pred_pixels;
  std::vector<int> truth_index(std::size_t(width) * height, -1);
  int truth_count = 0;
  for (int i = 0; i < width * height; ++i) {
    if (predicted[i]) pred_pixels.push_back(i);
    if (truth[i]) truth_index[i] = truth_count++;
  }
  const int np = static_cast<int>(pred_pixels.size());

  // Candidate edges within the matching radius.
  const int r = static_cast<int>(std::floor(match_dist));
  const double r2 = match_dist * match_dist;
  std::vector<std::vector<int>> adj(np);
  for (int a = 0; a < np; ++a) {
    const int px = pred_pixels[a] % width;
    const int py = pred_pixels[a] / width;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r2) continue;
        const int x = px + dx;
        const int y = py + dy;
        if (x < 0 || y < 0 || x >= width || y >= height) continue;
        const int t = truth_index[std::size_t(y) * width + x];
        if (t >= 0) adj[a].push_back(t);
      }
  }

  // Hopcroft-Karp maximum matching.
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> match_p(np, -1), match_t(truth_count, -1), dist(np);
  auto bfs = [&] {
    std::queue<int> q;
    bool found = false;
    for (int a = 0; a < np; ++a) {
      if (match_p[a] < 0) {
        dist[a] = 0;
        q.push(a);
      } else {
        dist[a] = kInf;
      }
    }
    while (!q.empty()) {
      const int a = q.front();
      q.pop();
      for (int t : adj[a]) {
        const int b = match_t[t];
        if (b < 0) {
          found = true;
        } else if (dist[b] == kInf) {
          dist[b] = dist[a] + 1;
          q.push(b);
        }
      }
    }
    return found;
  };
  std::vector<std::size_t> it(np);
  auto dfs = [&](auto&& self, int a) -> bool {
    for (; it[a] < adj[a].size(); ++it[a]) {
      const int t = adj[a][it[a]];
      const int b = match_t[t];
      if (b < 0 || (dist[b] == dist[a] + 1 && self(self, b))) {
        match_p[a] = t;
        match_t[t] = a;
        return true;
      }
    }
    dist[a] = kInf;
    return false;
  };
  int matched = 0;
  while (bfs()) {
    std::fill(it.begin(), it.end(), 0);
    for (int a = 0; a < np; ++a)
      if (match_p[a] < 0 && dfs(dfs, a)) ++matched;
  }

  Scores s;
  s.precision = np > 0 ? double(matched) / np : 0.0;
  s.recall = truth_count > 0 ? double(matched) / truth_count : 0.0;
  s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

Scores boundary_fscore(const ScalarMap& predicted, double threshold, const GroundTruth& truth,
                       double match_dist) {
  if (predicted.width != truth.width || predicted.height != truth.height)
    throw SizeError("prediction and ground truth sizes differ");
  std::vector<std::uint8_t> mask(predicted.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = predicted.values[i] >= threshold ? 1 : 0;
  return match_boundaries(mask, truth.boundary, truth.width, truth.height, match_dist);
}

BestScores best_boundary_fscore(const ScalarMap& predicted, const GroundTruth& truth,
                                double match_dist) {
  BestScores best;
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.1 * k;
    const Scores s = boundary_fscore(predicted, t, truth, match_dist);
    if (s.f > best.scores.f || k == 1) {
      best.scores = s;
      best.threshold = t;
    }
  }
  return best;
}

std::vector<PointMatch> match_points(std::span<const Point> predicted, std::span<const Point> truth,
                                     double match_dist) {
  std::vector<PointMatch> pairs;
  for (int i = 0; i < int(predicted.size()); ++i)
    for (int j = 0; j < int(truth.size()); ++j) {
      const double d = std::hypot(predicted[i].x - truth[j].x, predicted[i].y - truth[j].y);
      if (d <= match_dist) pairs.push_back({i, j, d});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const PointMatch& a, const PointMatch& b) { return a.distance < b.distance; });
  std::vector<char> used_p(predicted.size(), 0), used_t(truth.size(), 0);
  std::vector<PointMatch> out;
  for (const auto& m : pairs) {
    if (used_p[m.predicted] || used_t[m.truth]) continue;
    used_p[m.predicted] = used_t[m.truth] = 1;
    out.push_back(m);
  }
  return out;
}

Scores vertex_fscore(std::span<const Point> predicted, std::span<const Point> truth,
                     double match_dist, std::vector<PointMatch>* matches) {
  const auto m = match_points(predicted, truth, match_dist);
  Scores s;
  s.precision = predicted.empty() ? 0.0 : double(m.size()) / predicted.size();
  s.recall = truth.empty() ? 0.0 : double(m.size()) / truth.size();
  s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  if (matches) *matches = m;
  return s;
}

double angle_error(std::span<const double> predicted, std::span<const double> truth) {
  std::span<const double> small = predicted.size() <= truth.size() ? predicted : truth;
  std::span<const double> large = predicted.size() <= truth.size() ? truth : predicted;
  if (small.empty()) return 0.0;
  std::vector<int> idx(large.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = int(k);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (std::size_t k = 0; k < small.size(); ++k) sum += std::abs(wrap_pi(small[k] - large[idx[k]]));
    best = std::min(best, sum);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best / small.size() * 180.0 / kPi;
}

double psnr(const Image& a, const Image& b, double peak) {
  if (a.data().size() != b.data().size()) throw SizeError("PSNR inputs differ in size");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= double(a.data().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::string truth_to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["type"] = truth.type;
  j["width"] = truth.width;
  j["height"] = truth.height;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : truth.vertices) {
    nlohmann::json angles = nlohmann::json::array();
    for (double a : v.angles) angles.push_back(wrap_angle(a) * 180.0 / kPi);
    j["vertices"].push_back({{"x", v.position.x}, {"y", v.position.y}, {"angles_deg", angles}});
  }
  j["polylines"] = nlohmann::json::array();
  for (const auto& line : truth.polylines) {
    nlohmann::json pts = nlohmann::json::array();
    for (const Point& p : line) pts.push_back({p.x, p.y});
    j["polylines"].push_back(pts);
  }
  return j.dump(1);
}

GroundTruth truth_from_json(const std::string& text) {
  GroundTruth t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.type = j.value("type", 0);
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    for (const auto& v : j.at("vertices")) {
      TruthVertex tv;
      tv.position = {v.at("x").get<double>(), v.at("y").get<double>()};
      for (const auto& a : v.at("angles_deg")) tv.angles.push_back(a.get<double>() * kPi / 180.0);
      t.vertices.push_back(std::move(tv));
    }
    for (const auto& line : j.at("polylines")) {
      std::vector<Point> pts;
      for (const auto& p : line) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      t.polylines.push_back(std::move(pts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid ground truth: ") + e.what());
  }
  if (t.width <= 0 || t.height <= 0) throw Error("invalid ground truth size");
  t.boundary = rasterize_polylines(t.width, t.height, t.polylines);
  return t;
}

void save_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << truth_to_json(truth) << '\n';
}

GroundTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return truth_from_json(ss.str());
}

}  // namespace foj
