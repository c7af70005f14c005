#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "foj/pnm.hpp"
#include "foj/rng.hpp"

namespace foj {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "foj_pnm_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Pnm, GrayRoundTrip8And16Bit) {
  Rng rng(1);
  Image img(7, 5, 1);
  for (double& v : img.data()) v = rng.uniform();
  for (int maxval : {255, 65535}) {
    const auto path = temp_file("g" + std::to_string(maxval) + ".pgm").string();
    write_pnm(path, img, maxval);
    const Image back = read_pnm(path);
    ASSERT_EQ(back.width(), 7);
    ASSERT_EQ(back.height(), 5);
    ASSERT_EQ(back.channels(), 1);
    for (std::size_t i = 0; i < img.data().size(); ++i)
      EXPECT_NEAR(back.data()[i], img.data()[i], 0.5 / maxval + 1e-12);
  }
}

TEST(Pnm, ColorRoundTripIsExactOnGrid) {
  Image img(4, 3, 3);
  int n = 0;
  for (double& v : img.data()) v = (n++ * 37 % 256) / 255.0;
  const auto path = temp_file("c.ppm").string();
  write_pnm(path, img);
  const Image back = read_pnm(path);
  ASSERT_EQ(back.channels(), 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_DOUBLE_EQ(back.data()[i], img.data()[i]);
}

TEST(Pnm, ClampsOutOfRange) {
  Image img(2, 1, 1);
  img.at(0, 0) = -0.3;
  img.at(1, 0) = 1.7;
  const auto path = temp_file("clamp.pgm").string();
  write_pnm(path, img);
  const Image back = read_pnm(path);
  EXPECT_EQ(back.at(0, 0), 0.0);
  EXPECT_EQ(back.at(1, 0), 1.0);
}

TEST(Pnm, ReadsAsciiWithComments) {
  const auto path = temp_file("ascii.pgm");
  std::ofstream(path) << "P2\n# comment\n3 2\n# another\n10\n0 5 10\n10 5 0\n";
  const Image img = read_pnm(path.string());
  EXPECT_EQ(img.width(), 3);
  EXPECT_DOUBLE_EQ(img.at(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(img.at(0, 1), 1.0);
}

TEST(Pnm, RejectsBadFiles) {
  EXPECT_THROW(read_pnm(temp_file("missing.pgm").string()), Error);
  const auto path = temp_file("bad.pgm");
  std::ofstream(path) << "P7\n1 1\n255\n";
  EXPECT_THROW(read_pnm(path.string()), Error);
  const auto short_path = temp_file("short.pgm");
  std::ofstream(short_path, std::ios::binary) << "P5\n4 4\n255\n" << std::string(3, 'a');
  EXPECT_THROW(read_pnm(short_path.string()), Error);
}

TEST(Pnm, MapAsPgm) {
  ScalarMap m(3, 1);
  m.values = {0.0, 0.25, 1.0};
  const auto path = temp_file("map.pgm").string();
  write_pgm(path, m);
  const Image back = read_pnm(path);
  EXPECT_NEAR(back.at(1, 0), 0.25, 1.0 / 65535);
}

}  // namespace
}  // namespace foj
