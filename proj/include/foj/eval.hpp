#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foj/core.hpp"

namespace foj {

// Synthetic dataset ---------------------------------------------------------
//
// All images are 64x64 grayscale with values level/255.
//   type 1: two non-overlapping star-shaped blobs with radius
//           r(θ) = r0 (1 + a2 cos(2θ + p2) + a3 cos(3θ + p3)), r0 in [9, 14],
//           a2, a3 in [0, 0.12], levels 128 and 255 on black;
//   type 2: two non-overlapping squares, sides in [16, 40], rotation in
//           [0°, 90°), at least 3 px apart and 2 px from the border, levels
//           128 and 255 on black;
//   type 3: four regions with levels {0, 85, 170, 255} (random order) split
//           by two 3-junctions joined by a segment of length [24, 32]; each
//           junction is 14 px or more from the border and its two outer rays
//           open ±α around the segment direction, α in [40°, 50°].
// Pixels take the level of the region containing their center.

inline constexpr int kDatasetImageSize = 64;
inline constexpr int kDatasetPerType = 100;

struct TruthVertex {
  Point position;
  std::vector<double> angles;  // radians, directions of the incident boundaries
};

struct GroundTruth {
  int type = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> boundary;  // pixels within ½ px of a boundary curve
  std::vector<TruthVertex> vertices;
  std::vector<std::vector<Point>> polylines;
  std::vector<int> labels;  // region per pixel

  bool is_boundary(int x, int y) const { return boundary[std::size_t(y) * width + x] != 0; }
};

struct DatasetItem {
  Image image;
  GroundTruth truth;
};

struct Blob {
  Point center;
  double r0 = 10.0;
  double a2 = 0.0;
  double p2 = 0.0;
  double a3 = 0.0;
  double p3 = 0.0;
  double level = 1.0;

  double radius(double theta) const;
};

struct Square {
  Point center;
  double side = 20.0;
  double rotation = 0.0;
  double level = 1.0;

  std::array<Point, 4> corners() const;
};

struct JunctionPair {
  Point first;
  Point second;
  double alpha_first = 0.7;
  double alpha_second = 0.7;
  /// Levels of the regions behind `first`, on the positive-cross side, beyond
  /// `second`, on the negative-cross side.
  std::array<double, 4> levels{0.0, 85.0 / 255, 170.0 / 255, 1.0};
};

DatasetItem render_blobs(int width, int height, std::span<const Blob> blobs);
DatasetItem render_squares(int width, int height, std::span<const Square> squares);
DatasetItem render_junction_pair(int width, int height, const JunctionPair& pair);

/// Image `index` of type 1, 2 or 3, determined by (seed, type, index).
DatasetItem generate_item(int type, std::uint64_t seed, int index);

/// 300 items: 100 of each type in type order.
std::vector<DatasetItem> generate_dataset(std::uint64_t seed);

/// Pixels whose center lies within `radius` of any polyline segment.
std::vector<std::uint8_t> rasterize_polylines(int width, int height,
                                              const std::vector<std::vector<Point>>& polylines,
                                              double radius = 0.5);

/// Adds independent N(0, σ²) noise to every value; no clipping.
Image add_noise(const Image& image, double sigma, std::uint64_t seed);

// Metrics -------------------------------------------------------------------

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// One-to-one matching of predicted to true boundary pixels within Euclidean
/// distance `match_dist`, using a maximum-cardinality matching.
Scores match_boundaries(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                        int width, int height, double match_dist);

Scores boundary_fscore(const ScalarMap& predicted, double threshold, const GroundTruth& truth,
                       double match_dist);

struct BestScores {
  Scores scores;
  double threshold = 0.0;
};

/// Best F over thresholds 0.1, 0.2, ..., 0.9.
BestScores best_boundary_fscore(const ScalarMap& predicted, const GroundTruth& truth,
                                double match_dist);

struct PointMatch {
  int predicted;
  int truth;
  double distance;
};

/// Greedy nearest-pair one-to-one matching within `match_dist`.
std::vector<PointMatch> match_points(std::span<const Point> predicted, std::span<const Point> truth,
                                     double match_dist);

Scores vertex_fscore(std::span<const Point> predicted, std::span<const Point> truth,
                     double match_dist, std::vector<PointMatch>* matches = nullptr);

/// Mean absolute circular difference (degrees) under the best one-to-one
/// assignment between the smaller and the larger angle set.
double angle_error(std::span<const double> predicted, std::span<const double> truth);

double psnr(const Image& a, const Image& b, double peak = 1.0);

// Ground-truth files ----------------------------------------------------------

/// JSON with type, size, vertices (x, y, angles in degrees) and boundary
/// polylines. The boundary mask is re-rasterized from the polylines on load.
std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const std::string& text);
void save_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

}  // namespace foj
