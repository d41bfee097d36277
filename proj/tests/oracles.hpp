#pragma once

// Slow reference implementations and random input generators shared by the
// unit tests and the acceptance runner. Everything here works on plain pixel
// vectors so it shares no code with the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "uois/attnfilter.hpp"
#include "uois/maskset.hpp"

namespace oracle {

using Pixels = std::vector<std::uint8_t>;  // one byte per pixel, row-major

inline Pixels pixels_of(const uois::BinaryMask& m) { return m.to_bitmap(); }

inline long count(const Pixels& p) { return std::count(p.begin(), p.end(), 1); }

inline Pixels unite(const Pixels& a, const Pixels& b) {
  Pixels out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
  return out;
}

inline double iou(const Pixels& a, const Pixels& b) {
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] & b[i];
    uni += a[i] | b[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Calls f(combination) for every k-subset of `items`, in lexicographic order.
template <typename F>
void for_each_combination(const std::vector<std::size_t>& items, std::size_t k, F&& f) {
  if (k > items.size()) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<std::size_t> combo(k);
    for (std::size_t i = 0; i < k; ++i) combo[i] = items[idx[i]];
    if (f(combo)) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == items.size() - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Union-mask removal, transcribed step by step with every combination tried.
inline std::vector<bool> union_masks(const std::vector<Pixels>& masks, double theta, int k_max) {
  std::vector<bool> in_u(masks.size(), false);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (in_u[i]) continue;
    for (int k = 2; k <= k_max && !in_u[i]; ++k) {
      std::vector<std::size_t> s;
      for (std::size_t j = 0; j < masks.size(); ++j)
        if (j != i && !in_u[j]) s.push_back(j);
      if (s.size() < static_cast<std::size_t>(k)) break;
      for_each_combination(s, k, [&](const std::vector<std::size_t>& combo) {
        Pixels u(masks[i].size(), 0);
        for (std::size_t j : combo) u = unite(u, masks[j]);
        if (iou(masks[i], u) >= theta) {
          in_u[i] = true;
          return true;
        }
        return false;
      });
    }
  }
  return in_u;
}

// Full make-independent reference: survivors of union removal, then each in
// ascending area order minus everything already claimed.
struct Independent {
  std::vector<Pixels> masks;
  std::vector<std::size_t> source;  // input index of each output mask
};

inline Independent make_independent(const std::vector<Pixels>& masks, double theta, int k_max) {
  auto removed = union_masks(masks, theta, k_max);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < masks.size(); ++i)
    if (!removed[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return count(masks[a]) < count(masks[b]); });
  Independent out;
  if (masks.empty()) return out;
  Pixels claimed(masks[0].size(), 0);
  for (std::size_t i : order) {
    Pixels m(masks[i].size(), 0);
    for (std::size_t p = 0; p < m.size(); ++p) m[p] = masks[i][p] && !claimed[p];
    if (count(m) == 0) continue;
    claimed = unite(claimed, m);
    out.masks.push_back(m);
    out.source.push_back(i);
  }
  return out;
}

// Random proposal sets built from a few rectangles, their unions and noisy
// copies, so that union masks and near-duplicates show up often.
inline uois::ProposalSet random_proposals(std::mt19937_64& rng, int max_side, int max_masks) {
  std::uniform_int_distribution<int> side(2, max_side);
  const int h = side(rng), w = side(rng);
  std::uniform_int_distribution<int> n_dist(0, max_masks);
  const int n = n_dist(rng);
  std::uniform_int_distribution<int> ys(0, h - 1), xs(0, w - 1), kind(0, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<uois::BinaryMask> made;
  uois::ProposalSet set;
  for (int i = 0; i < n; ++i) {
    uois::BinaryMask m(h, w);
    int k = kind(rng);
    if (made.size() >= 2 && k <= 1) {
      std::uniform_int_distribution<std::size_t> pick(0, made.size() - 1);
      m = made[pick(rng)] | made[pick(rng)];
      if (k == 1 && made.size() >= 3) m |= made[pick(rng)];
    } else if (!made.empty() && k == 2) {
      std::uniform_int_distribution<std::size_t> pick(0, made.size() - 1);
      m = made[pick(rng)];
      for (int f = 0; f < 3; ++f) {
        int y = ys(rng), x = xs(rng);
        m.set(y, x, !m.test(y, x));
      }
    } else if (k == 3) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (unit(rng) < 0.3) m.set(y, x);
    } else {
      int y0 = ys(rng), y1 = ys(rng), x0 = xs(rng), x1 = xs(rng);
      m.fill_rect(std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1));
    }
    made.push_back(m);
    set.add(m, unit(rng));
  }
  return set;
}

// Cosine similarity straight from the definition: weighted concatenation of
// all heads, then dot / (norm * norm), one patch pair at a time.
inline std::vector<double> naive_similarity(const uois::FeatureStack& f, const std::vector<double>& w,
                                            std::size_t l) {
  std::vector<double> out(f.patches());
  bool any = false;
  for (std::size_t p = 0; p < f.patches(); ++p) {
    double dot = 0, np = 0, nl = 0;
    for (int h = 0; h < f.heads(); ++h) {
      for (int d = 0; d < f.head_dim(); ++d) {
        double a = w[h] * f.at(h, p)[d];
        double b = w[h] * f.at(h, l)[d];
        dot += a * b;
        np += a * a;
        nl += b * b;
      }
    }
    out[p] = (np == 0 || nl == 0) ? 0.0 : dot / (std::sqrt(np) * std::sqrt(nl));
    any = any || nl != 0;
  }
  if (any) out[l] = 1.0;
  return out;
}

inline double entropy_bits(const std::vector<double>& row) {
  double total = 0;
  for (double v : row) total += v;
  double e = 0;
  for (double v : row) {
    if (v == 0) continue;
    double p = v / total;
    e -= p * std::log2(p);
  }
  return e;
}

// Best total over every injective row->column map (or column->row when
// there are more rows than columns).
inline double brute_force_assignment(const std::vector<std::vector<double>>& s) {
  const std::size_t rows = s.size();
  const std::size_t cols = rows ? s[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    double total = 0;
    for (std::size_t r = 0; r < rows; ++r)
      if (perm[r] < cols) total += s[r][perm[r]];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline uois::AttentionStack random_attention(std::mt19937_64& rng, int heads, uois::PatchGrid grid) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(heads * grid.patches());
  for (double& x : v) x = unit(rng) < 0.1 ? 0.0 : unit(rng);
  for (int h = 0; h < heads; ++h) v[h * grid.patches()] += 1e-3;  // never an all-zero head
  return uois::AttentionStack(heads, grid, std::move(v));
}

inline uois::FeatureStack random_features(std::mt19937_64& rng, int heads, uois::PatchGrid grid, int dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(heads * grid.patches() * dim);
  for (double& x : v) x = normal(rng);
  return uois::FeatureStack(heads, grid, dim, std::move(v));
}

}  // namespace oracle
