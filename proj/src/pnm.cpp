#include "foj/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

namespace foj {

namespace {

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int integer() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw Error("malformed PNM header");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1 << 30) throw Error("PNM value too large");
    }
    return static_cast<int>(v);
  }

  int byte() {
    if (pos_ >= bytes_.size()) throw Error("truncated PNM data");
    return bytes_[pos_++];
  }

  std::size_t pos_ = 0;
  std::vector<unsigned char> bytes_;
};

}  // namespace

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  Reader r(std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {}));
  if (r.bytes_.size() < 2 || r.bytes_[0] != 'P') throw Error(path + ": not a PNM file");
  const char kind = static_cast<char>(r.bytes_[1]);
  r.pos_ = 2;
  int channels;
  bool binary;
  switch (kind) {
    case '2': channels = 1; binary = false; break;
    case '3': channels = 3; binary = false; break;
    case '5': channels = 1; binary = true; break;
    case '6': channels = 3; binary = true; break;
    default: throw Error(path + ": unsupported PNM variant P" + std::string(1, kind));
  }
  const int width = r.integer();
  const int height = r.integer();
  const int maxval = r.integer();
  if (width <= 0 || height <= 0) throw Error(path + ": bad image size");
  if (maxval <= 0 || maxval > 65535) throw Error(path + ": bad maxval");
  if (binary) ++r.pos_;  // single whitespace before the raster

  Image img(width, height, channels);
  auto data = img.data();
  for (auto& v : data) {
    int raw;
    if (!binary)
      raw = r.integer();
    else if (maxval < 256)
      raw = r.byte();
    else
      raw = (r.byte() << 8) | r.byte();
    v = double(raw) / maxval;
  }
  return img;
}

void write_pnm(const std::string& path, const Image& image, int maxval) {
  if (image.channels() != 1 && image.channels() != 3)
    throw Error("PNM output needs 1 or 3 channels");
  if (maxval != 255 && maxval != 65535) throw Error("maxval must be 255 or 65535");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << (image.channels() == 1 ? "P5" : "P6") << '\n'
      << image.width() << ' ' << image.height() << '\n'
      << maxval << '\n';
  std::vector<char> raster;
  raster.reserve(image.data().size() * (maxval > 255 ? 2 : 1));
  for (double v : image.data()) {
    const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    const int q = static_cast<int>(std::lround(c * maxval));
    if (maxval > 255) raster.push_back(static_cast<char>(q >> 8));
    raster.push_back(static_cast<char>(q & 0xff));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("failed writing " + path);
}

void write_pgm(const std::string& path, const ScalarMap& map, int maxval) {
  Image img(map.width, map.height, 1);
  std::copy(map.values.begin(), map.values.end(), img.data().begin());
  write_pnm(path, img, maxval);
}

}  // namespace foj
