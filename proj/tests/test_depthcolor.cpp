#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "uois/depthcolor.hpp"
#include "uois/error.hpp"
#include "uois/image_io.hpp"

using namespace uois;

namespace {

std::vector<std::array<double, 3>> reference_table() {
  std::ifstream in(std::string(UOIS_TEST_DATA) + "/viridis_reference.txt");
  std::vector<std::array<double, 3>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    std::array<double, 3> row{};
    s >> row[0] >> row[1] >> row[2];
    rows.push_back(row);
  }
  return rows;
}

DepthImage depth_row(std::initializer_list<std::uint16_t> values) {
  DepthImage d(1, static_cast<int>(values.size()));
  int x = 0;
  for (auto v : values) d.at(0, x++) = v;
  return d;
}

}  // namespace

TEST_CASE("lut entries are within one step of the published table") {
  auto ref = reference_table();
  REQUIRE(ref.size() == 256);
  const auto& lut = viridis_lut();
  for (std::size_t i = 0; i < 256; ++i) {
    CHECK(std::abs(lut[i].r / 255.0 - ref[i][0]) <= 1.0 / 255.0);
    CHECK(std::abs(lut[i].g / 255.0 - ref[i][1]) <= 1.0 / 255.0);
    CHECK(std::abs(lut[i].b / 255.0 - ref[i][2]) <= 1.0 / 255.0);
  }
}

TEST_CASE("lut index rounding") {
  CHECK(lut_index(0.0) == 0);
  CHECK(lut_index(1.0) == 255);
  CHECK(lut_index(0.5) == 128);
  CHECK(lut_index(0.5 / 255.0 - 1e-9) == 0);
  CHECK(lut_index(0.5 / 255.0) == 1);
}

TEST_CASE("colorization endpoints and degenerate ranges") {
  const auto& lut = viridis_lut();
  ColorImage two = colorize_depth(depth_row({1000, 2000}));
  CHECK(two.at(0, 0) == lut[0]);
  CHECK(two.at(0, 1) == lut[255]);

  ColorImage ramp = colorize_depth(depth_row({0, 1000, 1500, 2000}));
  CHECK(ramp.at(0, 0) == lut[0]);
  CHECK(ramp.at(0, 1) == lut[0]);
  CHECK(ramp.at(0, 2) == lut[128]);
  CHECK(ramp.at(0, 3) == lut[255]);

  ColorImage flat = colorize_depth(depth_row({0, 700, 700}));
  for (int x = 0; x < 3; ++x) CHECK(flat.at(0, x) == lut[0]);

  CHECK_THROWS_WITH_AS(colorize_depth(depth_row({0, 0})), "no valid depth", InvalidInput);
}

TEST_CASE("colorization follows min-max normalization on random frames") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> value(0, 65535);
  std::bernoulli_distribution hole(0.2);
  const auto& lut = viridis_lut();
  for (int trial = 0; trial < 50; ++trial) {
    DepthImage d(7, 9);
    for (auto& v : d.pixels()) v = hole(rng) ? 0 : static_cast<std::uint16_t>(value(rng));
    d.at(3, 3) = 1;
    int lo = 65536, hi = 0;
    for (auto v : d.pixels())
      if (v) {
        lo = std::min<int>(lo, v);
        hi = std::max<int>(hi, v);
      }
    ColorImage c = colorize_depth(d);
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 9; ++x) {
        int v = d.at(y, x);
        std::size_t expected = 0;
        if (v != 0 && hi > lo) expected = static_cast<std::size_t>(std::floor((v - lo) * 255.0 / (hi - lo) + 0.5));
        CHECK(c.at(y, x) == lut[expected]);
      }
    }
  }
}

TEST_CASE("png round trips") {
  auto dir = std::filesystem::temp_directory_path() / "uois_test_png";
  std::filesystem::create_directories(dir);
  ColorImage c(3, 4);
  c.at(1, 2) = {10, 200, 30};
  write_color_png(dir / "c.png", c);
  CHECK(read_color_png(dir / "c.png") == c);

  DepthImage d(2, 2);
  d.at(0, 1) = 65000;
  write_depth_png(dir / "d.png", d);
  CHECK(read_depth_png(dir / "d.png") == d);

  LabelImage l(2, 3);
  l.at(1, 1) = 300;
  write_label_png(dir / "l.png", l);
  CHECK(read_label_png(dir / "l.png") == l);
  CHECK_THROWS(read_depth_png(dir / "missing.png"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundled colorized frames match colorize_depth") {
  // Extractors must reproduce these images bit for bit.
  const auto root = std::filesystem::path(UOIS_TEST_DATA) / "synthetic" / "fixtures";
  int bundles = 0;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    ++bundles;
    DepthImage depth = read_depth_png(entry.path() / "depth.png");
    CHECK(read_color_png(entry.path() / "rgb.png") == colorize_depth(depth));
  }
  CHECK(bundles == 3);
}
