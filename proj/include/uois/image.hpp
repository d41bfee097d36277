#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uois/error.hpp"

namespace uois {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

// Dense row-major raster.
template <typename Pixel>
class Image {
 public:
  Image() = default;
  Image(int height, int width, Pixel fill = {})
      : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
      throw InvalidInput("image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(height) * width, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  Pixel& at(int y, int x) { return pixels_[index(y, x)]; }
  const Pixel& at(int y, int x) const { return pixels_[index(y, x)]; }

  std::span<Pixel> pixels() { return pixels_; }
  std::span<const Pixel> pixels() const { return pixels_; }

  bool same_shape(int height, int width) const {
    return height_ == height && width_ == width;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<Pixel> pixels_;
};

// Depth in millimetres; 0 marks an invalid reading.
using DepthImage = Image<std::uint16_t>;
using ColorImage = Image<Rgb>;
// Per-pixel instance ids as stored in dataset label images.
using LabelImage = Image<std::uint32_t>;

}  // namespace uois
