#include "uois/attnfilter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uois/error.hpp"

namespace uois {

namespace {

void require_grid(int n_heads, PatchGrid grid) {
  if (n_heads <= 0) {
    throw InvalidInput("need at least one attention head");
  }
  if (grid.rows <= 0 || grid.cols <= 0) {
    throw InvalidInput("patch grid must be non-empty");
  }
}

// Ratio floor for the head weight logarithm.
constexpr double kMinEntropyShare = 1e-12;

}  // namespace

AttentionStack::AttentionStack(int n_heads, PatchGrid grid, std::vector<double> values)
    : heads_(n_heads), grid_(grid), values_(std::move(values)) {
  require_grid(n_heads, grid);
  if (values_.size() != static_cast<std::size_t>(n_heads) * grid.patches()) {
    throw InvalidInput("attention values do not match heads x patches");
  }
  for (const double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("attention values must be finite and non-negative");
    }
  }
}

FeatureStack::FeatureStack(int n_heads, PatchGrid grid, int head_dim, std::vector<double> values)
    : heads_(n_heads), grid_(grid), head_dim_(head_dim), values_(std::move(values)) {
  require_grid(n_heads, grid);
  if (head_dim <= 0) {
    throw InvalidInput("feature head dimension must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(n_heads) * grid.patches() * head_dim) {
    throw InvalidInput("feature values do not match heads x patches x dim");
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) {
      throw InvalidInput("feature values must be finite");
    }
  }
}

std::vector<double> WeightVector::effective() const {
  if (degenerate) {
    return std::vector<double>(weights.size(), 1.0);
  }
  return weights;
}

WeightVector uniform_weights(int n_heads) {
  return WeightVector{std::vector<double>(static_cast<std::size_t>(n_heads), 1.0), false};
}

SimilarityMap::SimilarityMap(PatchGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid.patches()) {
    throw InvalidInput("similarity values do not match the patch grid");
  }
}

std::vector<double> head_entropy(const AttentionStack& attention) {
  std::vector<double> entropies;
  entropies.reserve(attention.heads());
  for (int h = 0; h < attention.heads(); ++h) {
    const auto row = attention.head(h);
    double total = 0.0;
    for (const double a : row) {
      total += a;
    }
    if (!(total > 0.0)) {
      throw InvalidInput("degenerate head " + std::to_string(h) + ": attention sums to zero");
    }
    double entropy = 0.0;
    for (const double a : row) {
      if (a > 0.0) {
        const double p = a / total;
        entropy -= p * std::log2(p);
      }
    }
    entropies.push_back(std::max(entropy, 0.0));
  }
  return entropies;
}

WeightVector head_weights(std::span<const double> entropies) {
  if (entropies.empty()) {
    throw InvalidInput("no head entropies");
  }
  double total = 0.0;
  for (const double e : entropies) {
    if (!(e >= 0.0) || !std::isfinite(e)) {
      throw InvalidInput("head entropies must be finite and non-negative");
    }
    total += e;
  }
  if (!(total > 0.0)) {
    throw InvalidInput("head entropies sum to zero");
  }
  WeightVector out;
  out.degenerate = entropies.size() == 1;
  out.weights.reserve(entropies.size());
  for (const double e : entropies) {
    const double share = std::clamp(e / total, kMinEntropyShare, 1.0);
    // -log(1) is -0.0; normalise the sign.
    out.weights.push_back(share >= 1.0 ? 0.0 : -std::log(share));
  }
  return out;
}

std::size_t background_patch_index(const AttentionStack& attention, const WeightVector& weights) {
  if (weights.weights.size() != static_cast<std::size_t>(attention.heads())) {
    throw InvalidInput("weight count does not match attention heads");
  }
  const std::vector<double> w = weights.effective();
  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t p = 0; p < attention.patches(); ++p) {
    double value = 0.0;
    for (int h = 0; h < attention.heads(); ++h) {
      value += w[h] * attention.at(h, p);
    }
    if (p == 0 || value < best_value) {
      best = p;
      best_value = value;
    }
  }
  return best;
}

SimilarityMap similarity_map(const FeatureStack& features, const WeightVector& weights,
                             std::size_t background) {
  if (weights.weights.size() != static_cast<std::size_t>(features.heads())) {
    throw InvalidInput("weight count does not match feature heads");
  }
  if (background >= features.patches()) {
    throw InvalidInput("background patch index out of range");
  }
  const std::vector<double> w = weights.effective();
  const std::size_t n = features.patches();

  auto weighted_dot = [&](std::size_t p, std::size_t q) {
    double sum = 0.0;
    for (int h = 0; h < features.heads(); ++h) {
      const auto a = features.at(h, p);
      const auto b = features.at(h, q);
      double head_sum = 0.0;
      for (int d = 0; d < features.head_dim(); ++d) {
        head_sum += a[d] * b[d];
      }
      sum += w[h] * w[h] * head_sum;
    }
    return sum;
  };

  const double ref_norm = std::sqrt(weighted_dot(background, background));
  std::vector<double> values(n, 0.0);
  if (ref_norm > 0.0) {
    for (std::size_t p = 0; p < n; ++p) {
      const double norm = std::sqrt(weighted_dot(p, p));
      if (norm > 0.0) {
        values[p] = std::clamp(weighted_dot(p, background) / (norm * ref_norm), -1.0, 1.0);
      }
    }
    values[background] = 1.0;
  }
  return SimilarityMap(features.grid(), std::move(values));
}

std::vector<double> score_masks(const ProposalSet& set, const SimilarityMap& similarity) {
  std::vector<double> scores;
  scores.reserve(set.size());
  const PatchGrid grid = similarity.grid();
  for (const ScoredMask& item : set) {
    const BinaryMask& mask = item.mask;
    if (mask.empty()) {
      scores.push_back(0.0);
      continue;
    }
    const std::int64_t height = mask.height();
    const std::int64_t width = mask.width();
    double sum = 0.0;
    mask.for_each_pixel([&](int y, int x) {
      const int row = static_cast<int>(y * grid.rows / height);
      const int col = static_cast<int>(x * grid.cols / width);
      sum += similarity.at(row, col);
    });
    scores.push_back(sum / static_cast<double>(mask.area()));
  }
  return scores;
}

ProposalSet filter_background(const ProposalSet& set, std::span<const double> scores, double tau) {
  if (scores.size() != set.size()) {
    throw InvalidInput("one background score per mask required");
  }
  ProposalSet out(set.source());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (scores[i] > tau) {
      continue;
    }
    out.add(set[i]);
  }
  return out;
}

}  // namespace uois
