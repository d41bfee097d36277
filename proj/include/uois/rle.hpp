#pragma once

#include <cstdint>
#include <vector>

#include "uois/mask.hpp"

namespace uois {

// Run-length form of a BinaryMask: maximal runs of set pixels over the
// row-major linear index, each as (start, length). Runs are strictly
// increasing, non-overlapping and non-adjacent, lengths positive.
struct RleMask {
  struct Run {
    std::int64_t start = 0;
    std::int64_t length = 0;
    bool operator==(const Run&) const = default;
  };

  int height = 0;
  int width = 0;
  std::vector<Run> runs;

  std::int64_t area() const;
  bool operator==(const RleMask&) const = default;
};

RleMask encode_rle(const BinaryMask& mask);

// Throws FormatError for a non-positive size, out-of-range, unordered,
// overlapping, adjacent or empty runs.
BinaryMask decode_rle(const RleMask& rle);

}  // namespace uois
