#include "uois/rle.hpp"

#include "uois/error.hpp"

namespace uois {

std::int64_t RleMask::area() const {
  std::int64_t total = 0;
  for (const Run& run : runs) {
    total += run.length;
  }
  return total;
}

RleMask encode_rle(const BinaryMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  const std::int64_t n = static_cast<std::int64_t>(mask.pixel_count());
  std::int64_t i = 0;
  while (i < n) {
    if (!mask.test(static_cast<std::size_t>(i))) {
      ++i;
      continue;
    }
    const std::int64_t start = i;
    while (i < n && mask.test(static_cast<std::size_t>(i))) {
      ++i;
    }
    rle.runs.push_back({start, i - start});
  }
  return rle;
}

BinaryMask decode_rle(const RleMask& rle) {
  if (rle.height <= 0 || rle.width <= 0) {
    throw FormatError("RLE mask must have positive size");
  }
  BinaryMask mask(rle.height, rle.width);
  const std::int64_t n = static_cast<std::int64_t>(mask.pixel_count());
  std::int64_t next_free = 0;  // first index a following run may start at
  bool first = true;
  for (const RleMask::Run& run : rle.runs) {
    if (run.length <= 0) {
      throw FormatError("RLE run with non-positive length");
    }
    if (run.start < 0 || run.start + run.length > n) {
      throw FormatError("RLE run out of range");
    }
    if (!first && run.start <= next_free) {
      throw FormatError("RLE runs must be increasing and non-adjacent");
    }
    for (std::int64_t i = run.start; i < run.start + run.length; ++i) {
      mask.set(static_cast<std::size_t>(i));
    }
    next_free = run.start + run.length;
    first = false;
  }
  return mask;
}

}  // namespace uois
