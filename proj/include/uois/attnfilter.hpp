#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uois/maskset.hpp"

namespace uois {

// Patch layout of a ViT feature map: rows * cols patches in row-major order.
struct PatchGrid {
  int rows = 0;
  int cols = 0;

  std::size_t patches() const { return static_cast<std::size_t>(rows) * cols; }
  bool operator==(const PatchGrid&) const = default;
};

// Final-layer CLS->patch attention, one row of N_p values per head.
class AttentionStack {
 public:
  AttentionStack() = default;
  // Throws InvalidInput on a size mismatch, a negative or non-finite value, or
  // grid.patches() != n_patches. All-zero heads are allowed here and rejected
  // by head_entropy().
  AttentionStack(int n_heads, PatchGrid grid, std::vector<double> values);

  int heads() const { return heads_; }
  std::size_t patches() const { return grid_.patches(); }
  PatchGrid grid() const { return grid_; }
  double at(int head, std::size_t patch) const { return values_[head * patches() + patch]; }
  std::span<const double> head(int h) const {
    return std::span<const double>(values_).subspan(h * patches(), patches());
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const AttentionStack&) const = default;

 private:
  int heads_ = 0;
  PatchGrid grid_;
  std::vector<double> values_;
};

// Final-layer per-head key features, laid out [head][patch][dim].
class FeatureStack {
 public:
  FeatureStack() = default;
  FeatureStack(int n_heads, PatchGrid grid, int head_dim, std::vector<double> values);

  int heads() const { return heads_; }
  std::size_t patches() const { return grid_.patches(); }
  int head_dim() const { return head_dim_; }
  PatchGrid grid() const { return grid_; }
  std::span<const double> at(int head, std::size_t patch) const {
    return std::span<const double>(values_).subspan((head * patches() + patch) * head_dim_,
                                                    head_dim_);
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const FeatureStack&) const = default;

 private:
  int heads_ = 0;
  PatchGrid grid_;
  int head_dim_ = 0;
  std::vector<double> values_;
};

struct WeightVector {
  std::vector<double> weights;
  // Set for a single-head model, where the entropy ratio is identically 1.
  // Consumers then fall back to unit weights.
  bool degenerate = false;

  // Weights actually applied downstream.
  std::vector<double> effective() const;
};

WeightVector uniform_weights(int n_heads);

class SimilarityMap {
 public:
  SimilarityMap() = default;
  SimilarityMap(PatchGrid grid, std::vector<double> values);

  PatchGrid grid() const { return grid_; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * grid_.cols + col]; }
  double at(std::size_t patch) const { return values_[patch]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SimilarityMap&) const = default;

 private:
  PatchGrid grid_;
  std::vector<double> values_;
};

// Shannon entropy in bits of each sum-normalized head row (0 log 0 := 0).
// Throws InvalidInput("degenerate head ...") for an all-zero row.
std::vector<double> head_entropy(const AttentionStack& attention);

// omega_i = -ln(E_i / sum_j E_j). The ratio is floored at 1e-12 so a
// zero-entropy head gets a large finite weight. A single head yields
// {0} flagged degenerate.
WeightVector head_weights(std::span<const double> entropies);

// argmin_p sum_i omega_i * a_pi, lowest index on ties.
std::size_t background_patch_index(const AttentionStack& attention, const WeightVector& weights);

// Cosine similarity of every weighted, concatenated patch feature against
// patch `background`. Rows with zero norm have similarity 0 to everything.
SimilarityMap similarity_map(const FeatureStack& features, const WeightVector& weights,
                             std::size_t background);

// Mean similarity over each mask's pixels, with the patch map upsampled by
// nearest neighbour: pixel (y, x) reads patch (y * rows / H, x * cols / W).
// Empty masks score 0.
std::vector<double> score_masks(const ProposalSet& set, const SimilarityMap& similarity);

// Keeps masks whose score is <= tau.
ProposalSet filter_background(const ProposalSet& set, std::span<const double> scores, double tau);

inline constexpr double kDefaultBackgroundTau = 0.47;

}  // namespace uois
