#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace uois {

struct BoundingBox {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // inclusive
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool operator==(const BoundingBox&) const = default;
};

// H x W boolean mask stored as a packed row-major bitset with a cached area.
//
// Bit i of the linear index i = y * W + x lives in word i / 64. Padding bits of
// the last word are always zero, which lets set algebra run word-wise.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width);

  // `bits` holds one byte per pixel in row-major order; nonzero means set.
  static BinaryMask from_bitmap(int height, int width, std::span<const std::uint8_t> bits);
  std::vector<std::uint8_t> to_bitmap() const;

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::int64_t area() const { return area_; }
  bool empty() const { return area_ == 0; }
  bool same_shape(const BinaryMask& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool test(std::size_t index) const {
    return (words_[index >> 6] >> (index & 63)) & 1U;
  }
  bool test(int y, int x) const { return test(static_cast<std::size_t>(y) * width_ + x); }
  void set(int y, int x, bool value = true);
  void set(std::size_t index, bool value = true);
  void fill_rect(int x0, int y0, int x1, int y1);  // inclusive corners, clipped

  // Tightest box around the set pixels; nullopt for an empty mask.
  std::optional<BoundingBox> bbox() const;

  BinaryMask& operator|=(const BinaryMask& other);
  BinaryMask& operator&=(const BinaryMask& other);
  // Removes every pixel that is set in `other`.
  BinaryMask& subtract(const BinaryMask& other);

  std::span<const std::uint64_t> words() const { return words_; }

  // Calls f(y, x) for every set pixel in row-major order.
  template <typename F>
  void for_each_pixel(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word != 0) {
        const int bit = std::countr_zero(word);
        const std::size_t index = w * 64 + static_cast<std::size_t>(bit);
        f(static_cast<int>(index / width_), static_cast<int>(index % width_));
        word &= word - 1;
      }
    }
  }

  bool operator==(const BinaryMask& other) const {
    return height_ == other.height_ && width_ == other.width_ && words_ == other.words_;
  }

 private:
  void recount();
  void require_same_shape(const BinaryMask& other) const;

  int height_ = 0;
  int width_ = 0;
  std::int64_t area_ = 0;
  std::vector<std::uint64_t> words_;
};

BinaryMask operator|(BinaryMask a, const BinaryMask& b);
BinaryMask operator&(BinaryMask a, const BinaryMask& b);
BinaryMask difference(BinaryMask a, const BinaryMask& b);

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
std::int64_t union_area(const BinaryMask& a, const BinaryMask& b);

// |a ∩ b| / |a ∪ b|, 0 when both are empty. Throws InvalidInput on a shape
// mismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace uois
