#include "uois/mask.hpp"

#include <algorithm>

#include "uois/error.hpp"

namespace uois {

namespace {

std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

}  // namespace

BinaryMask::BinaryMask(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) {
    throw InvalidInput("mask dimensions must be non-negative");
  }
  words_.assign(word_count(pixel_count()), 0);
}

BinaryMask BinaryMask::from_bitmap(int height, int width, std::span<const std::uint8_t> bits) {
  BinaryMask mask(height, width);
  if (bits.size() != mask.pixel_count()) {
    throw InvalidInput("bitmap size does not match mask dimensions");
  }
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) {
      mask.words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
  }
  mask.recount();
  return mask;
}

std::vector<std::uint8_t> BinaryMask::to_bitmap() const {
  std::vector<std::uint8_t> bits(pixel_count(), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = test(i) ? 1 : 0;
  }
  return bits;
}

void BinaryMask::set(std::size_t index, bool value) {
  if (index >= pixel_count()) {
    throw InvalidInput("mask pixel index out of range");
  }
  const std::uint64_t bit = std::uint64_t{1} << (index & 63);
  std::uint64_t& word = words_[index >> 6];
  const bool was = (word & bit) != 0;
  if (was == value) {
    return;
  }
  if (value) {
    word |= bit;
    ++area_;
  } else {
    word &= ~bit;
    --area_;
  }
}

void BinaryMask::set(int y, int x, bool value) {
  if (y < 0 || y >= height_ || x < 0 || x >= width_) {
    throw InvalidInput("mask pixel out of range");
  }
  set(static_cast<std::size_t>(y) * width_ + x, value);
}

void BinaryMask::fill_rect(int x0, int y0, int x1, int y1) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_ - 1);
  y1 = std::min(y1, height_ - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      words_[(static_cast<std::size_t>(y) * width_ + x) >> 6] |=
          std::uint64_t{1} << ((static_cast<std::size_t>(y) * width_ + x) & 63);
    }
  }
  recount();
}

std::optional<BoundingBox> BinaryMask::bbox() const {
  if (area_ == 0) {
    return std::nullopt;
  }
  BoundingBox box{width_, height_, -1, -1};
  for_each_pixel([&](int y, int x) {
    box.x0 = std::min(box.x0, x);
    box.y0 = std::min(box.y0, y);
    box.x1 = std::max(box.x1, x);
    box.y1 = std::max(box.y1, y);
  });
  return box;
}

void BinaryMask::recount() {
  std::int64_t total = 0;
  for (const std::uint64_t w : words_) {
    total += std::popcount(w);
  }
  area_ = total;
}

void BinaryMask::require_same_shape(const BinaryMask& other) const {
  if (!same_shape(other)) {
    throw InvalidInput("mask dimension mismatch");
  }
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  require_same_shape(other);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    words_[i] |= other.words_[i];
  }
  recount();
  return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& other) {
  require_same_shape(other);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    words_[i] &= other.words_[i];
  }
  recount();
  return *this;
}

BinaryMask& BinaryMask::subtract(const BinaryMask& other) {
  require_same_shape(other);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    words_[i] &= ~other.words_[i];
  }
  recount();
  return *this;
}

BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
BinaryMask operator&(BinaryMask a, const BinaryMask& b) { return a &= b; }
BinaryMask difference(BinaryMask a, const BinaryMask& b) { return a.subtract(b); }

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw InvalidInput("mask dimension mismatch");
  }
  const auto wa = a.words();
  const auto wb = b.words();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    total += std::popcount(wa[i] & wb[i]);
  }
  return total;
}

std::int64_t union_area(const BinaryMask& a, const BinaryMask& b) {
  return a.area() + b.area() - intersection_area(a, b);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace uois
