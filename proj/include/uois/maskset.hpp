#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "uois/mask.hpp"

namespace uois {

enum class ProposalSource { generator, prompted };

std::string_view to_string(ProposalSource source);
ProposalSource proposal_source_from_string(std::string_view text);

struct ScoredMask {
  BinaryMask mask;
  double score = 1.0;

  bool operator==(const ScoredMask&) const = default;
};

// Ordered masks sharing one pixel grid, each with a confidence in [0,1].
class ProposalSet {
 public:
  ProposalSet() = default;
  explicit ProposalSet(ProposalSource source) : source_(source) {}

  // Throws InvalidInput when the mask grid differs from earlier masks or the
  // score is outside [0,1].
  void add(BinaryMask mask, double score = 1.0);
  void add(ScoredMask item) { add(std::move(item.mask), item.score); }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const ScoredMask& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  ProposalSource source() const { return source_; }
  void set_source(ProposalSource source) { source_ = source; }

  // Grid of the first mask; 0x0 for an empty set.
  int height() const { return items_.empty() ? 0 : items_.front().mask.height(); }
  int width() const { return items_.empty() ? 0 : items_.front().mask.width(); }

  bool operator==(const ProposalSet&) const = default;

 private:
  std::vector<ScoredMask> items_;
  ProposalSource source_ = ProposalSource::generator;
};

inline constexpr double kDefaultUnionIou = 0.8;
inline constexpr int kDefaultMaxCombination = 3;

// Part 1 of mask independence. Scans masks in input order; mask i is marked as
// a union mask when some combination C of 2..k_max masks not yet marked (and
// other than i) has IoU(m_i, ∪C) >= theta. Marked masks leave the candidate
// pool for later decisions. Returns the indices marked, ascending.
std::vector<std::size_t> find_union_masks(const ProposalSet& set, double theta = kDefaultUnionIou,
                                          int k_max = kDefaultMaxCombination);

ProposalSet remove_union_masks(const ProposalSet& set, double theta = kDefaultUnionIou,
                               int k_max = kDefaultMaxCombination);

// Part 2. Visits masks in `order`, subtracting everything already accepted;
// empty remainders are dropped. Each output keeps its source mask's score.
ProposalSet resolve_overlaps_in_order(const ProposalSet& set, std::span<const std::size_t> order);

// Ascending area, ties by original index.
ProposalSet resolve_overlaps(const ProposalSet& set);

ProposalSet make_independent(const ProposalSet& set, double theta = kDefaultUnionIou,
                             int k_max = kDefaultMaxCombination);

// Drops masks with area < min_area or area > max_frac * H * W.
ProposalSet size_filter(const ProposalSet& set, std::int64_t min_area, double max_frac);

bool pairwise_disjoint(const ProposalSet& set);

}  // namespace uois
