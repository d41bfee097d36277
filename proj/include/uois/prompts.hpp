#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uois/mask.hpp"

namespace uois {

struct PointPrompt {
  int x = 0;
  int y = 0;
  bool positive = true;

  bool operator==(const PointPrompt&) const = default;
};

inline constexpr int kDefaultPromptCount = 3;
inline constexpr std::size_t kMaxClusterPoints = 2000;
inline constexpr int kMaxSwapIterations = 100;

// k positive prompts at the PAM k-medoids centres of the mask's pixel
// coordinates (Euclidean distance, BUILD then best-improvement SWAP, at most
// 100 swap rounds). Masks above 2000 pixels are uniformly subsampled with
// `seed` first. With fewer pixels than k every pixel is returned. Points come
// back sorted by (y, x). Throws InvalidInput for an empty mask or k < 1.
std::vector<PointPrompt> kmedoids_prompts(const BinaryMask& mask, int k, std::uint64_t seed);

// k distinct mask pixels drawn uniformly with `seed`, sorted by (y, x).
std::vector<PointPrompt> random_prompts(const BinaryMask& mask, int k, std::uint64_t seed);

// Seed for one object's prompts, derived from the run seed and mask content so
// that it does not depend on the object's position in the set.
std::uint64_t object_seed(std::uint64_t seed, const BinaryMask& mask);

// Exposed for tests: PAM on arbitrary 2-D points. Returns medoid indices
// into `points` in BUILD order (after swaps).
struct Point2 {
  double x = 0;
  double y = 0;
};
std::vector<std::size_t> pam_medoids(const std::vector<Point2>& points, int k,
                                     int max_iterations = kMaxSwapIterations);
double pam_cost(const std::vector<Point2>& points, const std::vector<std::size_t>& medoids);

}  // namespace uois
