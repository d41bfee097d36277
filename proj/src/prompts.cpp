#include "uois/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "uois/error.hpp"

namespace uois {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Draws `count` distinct indices from [0, n) by a partial Fisher-Yates shuffle.
// Uses the raw mt19937_64 stream (fully specified by the standard) rather than
// a distribution object, whose mapping is implementation-defined.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Point2> mask_points(const BinaryMask& mask) {
  std::vector<Point2> points;
  points.reserve(static_cast<std::size_t>(mask.area()));
  mask.for_each_pixel([&](int y, int x) { points.push_back({static_cast<double>(x), static_cast<double>(y)}); });
  return points;
}

std::vector<PointPrompt> to_prompts(const std::vector<Point2>& points,
                                    const std::vector<std::size_t>& chosen) {
  std::vector<PointPrompt> prompts;
  prompts.reserve(chosen.size());
  for (const std::size_t i : chosen) {
    prompts.push_back({static_cast<int>(points[i].x), static_cast<int>(points[i].y), true});
  }
  std::sort(prompts.begin(), prompts.end(), [](const PointPrompt& a, const PointPrompt& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return prompts;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Nearest and second-nearest medoid distance for every point.
struct Assignment {
  std::vector<std::size_t> nearest;  // slot into the medoid list
  std::vector<double> d1;
  std::vector<double> d2;
};

Assignment assign(const std::vector<Point2>& points, const std::vector<std::size_t>& medoids) {
  Assignment a;
  a.nearest.assign(points.size(), 0);
  a.d1.assign(points.size(), kInf);
  a.d2.assign(points.size(), kInf);
  for (std::size_t j = 0; j < points.size(); ++j) {
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      const double d = distance(points[j], points[medoids[m]]);
      if (d < a.d1[j]) {
        a.d2[j] = a.d1[j];
        a.d1[j] = d;
        a.nearest[j] = m;
      } else if (d < a.d2[j]) {
        a.d2[j] = d;
      }
    }
  }
  return a;
}

}  // namespace

double pam_cost(const std::vector<Point2>& points, const std::vector<std::size_t>& medoids) {
  double total = 0.0;
  for (const Point2& p : points) {
    double best = kInf;
    for (const std::size_t m : medoids) {
      best = std::min(best, distance(p, points[m]));
    }
    total += best;
  }
  return total;
}

std::vector<std::size_t> pam_medoids(const std::vector<Point2>& points, int k, int max_iterations) {
  if (k < 1) {
    throw InvalidInput("k-medoids needs k >= 1");
  }
  const std::size_t n = points.size();
  if (n <= static_cast<std::size_t>(k)) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }

  // BUILD: start from the point with the smallest total distance, then add
  // the point that reduces the total the most.
  std::vector<std::size_t> medoids;
  std::vector<bool> is_medoid(n, false);
  std::vector<double> nearest(n, kInf);
  {
    std::size_t best = 0;
    double best_total = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        total += distance(points[i], points[j]);
      }
      if (total < best_total) {
        best_total = total;
        best = i;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t j = 0; j < n; ++j) {
      nearest[j] = distance(points[best], points[j]);
    }
  }
  while (medoids.size() < static_cast<std::size_t>(k)) {
    std::size_t best = n;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (is_medoid[c]) {
        continue;
      }
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        gain += std::max(0.0, nearest[j] - distance(points[c], points[j]));
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t j = 0; j < n; ++j) {
      nearest[j] = std::min(nearest[j], distance(points[best], points[j]));
    }
  }

  // SWAP: apply the single medoid/non-medoid exchange with the largest cost
  // decrease until none decreases the cost.
  const std::size_t slots = medoids.size();
  std::vector<double> delta(slots);
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    const Assignment a = assign(points, medoids);
    double best_delta = 0.0;
    std::size_t best_slot = slots;
    std::size_t best_point = n;
    for (std::size_t x = 0; x < n; ++x) {
      if (is_medoid[x]) {
        continue;
      }
      double shared = 0.0;
      std::fill(delta.begin(), delta.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double dxj = distance(points[x], points[j]);
        const double keep = std::min(dxj, a.d1[j]) - a.d1[j];
        shared += keep;
        // When j's own medoid is the one removed, j falls back to x or its
        // second-nearest medoid.
        delta[a.nearest[j]] += (std::min(dxj, a.d2[j]) - a.d1[j]) - keep;
      }
      for (std::size_t m = 0; m < slots; ++m) {
        const double total = shared + delta[m];
        if (total < best_delta) {
          best_delta = total;
          best_slot = m;
          best_point = x;
        }
      }
    }
    // Relative guard against accepting rounding noise as an improvement.
    if (best_slot == slots || best_delta > -1e-9 * (1.0 + std::abs(pam_cost(points, medoids)))) {
      break;
    }
    is_medoid[medoids[best_slot]] = false;
    medoids[best_slot] = best_point;
    is_medoid[best_point] = true;
  }
  return medoids;
}

std::vector<PointPrompt> kmedoids_prompts(const BinaryMask& mask, int k, std::uint64_t seed) {
  if (mask.empty()) {
    throw InvalidInput("cannot sample prompts from an empty mask");
  }
  if (k < 1) {
    throw InvalidInput("prompt count must be at least 1");
  }
  std::vector<Point2> points = mask_points(mask);
  if (points.size() > kMaxClusterPoints) {
    const std::vector<std::size_t> keep = sample_indices(points.size(), kMaxClusterPoints, seed);
    std::vector<Point2> subset;
    subset.reserve(keep.size());
    for (const std::size_t i : keep) {
      subset.push_back(points[i]);
    }
    points = std::move(subset);
  }
  return to_prompts(points, pam_medoids(points, k));
}

std::vector<PointPrompt> random_prompts(const BinaryMask& mask, int k, std::uint64_t seed) {
  if (mask.empty()) {
    throw InvalidInput("cannot sample prompts from an empty mask");
  }
  if (k < 1) {
    throw InvalidInput("prompt count must be at least 1");
  }
  const std::vector<Point2> points = mask_points(mask);
  const std::size_t count = std::min(points.size(), static_cast<std::size_t>(k));
  return to_prompts(points, sample_indices(points.size(), count, seed));
}

std::uint64_t object_seed(std::uint64_t seed, const BinaryMask& mask) {
  std::uint64_t first = 0;
  const auto words = mask.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (words[w] != 0) {
      first = w * 64 + static_cast<std::uint64_t>(std::countr_zero(words[w]));
      break;
    }
  }
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(mask.area()) ^ splitmix64(first)));
}

}  // namespace uois
