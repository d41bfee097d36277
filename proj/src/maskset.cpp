#include "uois/maskset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "uois/error.hpp"

namespace uois {

std::string_view to_string(ProposalSource source) {
  return source == ProposalSource::generator ? "generator" : "prompted";
}

ProposalSource proposal_source_from_string(std::string_view text) {
  if (text == "generator") return ProposalSource::generator;
  if (text == "prompted") return ProposalSource::prompted;
  throw InvalidInput("unknown proposal source '" + std::string(text) + "'");
}

void ProposalSet::add(BinaryMask mask, double score) {
  if (!items_.empty() && !items_.front().mask.same_shape(mask)) {
    throw InvalidInput("proposal mask grid differs from the rest of the set");
  }
  if (!(score >= 0.0 && score <= 1.0)) {
    throw InvalidInput("proposal score outside [0,1]");
  }
  items_.push_back({std::move(mask), score});
}

namespace {

// Correctly rounded division is monotone, so comparing bounds in this form
// agrees exactly with comparing the final IoU.
double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Searches combinations of 2..k_max candidates, in lexicographic order, whose
// union reaches IoU >= theta with `target`.
//
// IoU(t, U) <= |t| / |t ∪ U| and the union only grows as members are added,
// so any prefix already below theta cannot be completed. The same bound
// removes single candidates up front.
class UnionSearch {
 public:
  UnionSearch(const BinaryMask& target, const std::vector<const BinaryMask*>& candidates,
              double theta, int k_max)
      : target_(target), candidates_(candidates), theta_(theta), k_max_(k_max) {}

  bool found() {
    if (target_.empty()) {
      // Every union of non-empty masks has IoU 0 with an empty target, and a
      // union of empty masks has IoU 0 by definition.
      return false;
    }
    for (int k = 2; k <= k_max_; ++k) {
      if (static_cast<int>(candidates_.size()) < k) {
        return false;
      }
      BinaryMask empty(target_.height(), target_.width());
      if (extend(empty, 0, k)) {
        return true;
      }
    }
    return false;
  }

 private:
  bool extend(const BinaryMask& prefix, std::size_t first, int remaining) {
    for (std::size_t j = first; j + remaining <= candidates_.size(); ++j) {
      BinaryMask combined = prefix | *candidates_[j];
      const std::int64_t inter = intersection_area(target_, combined);
      const std::int64_t uni = target_.area() + combined.area() - inter;
      if (remaining == 1) {
        if (ratio(inter, uni) >= theta_) {
          return true;
        }
        continue;
      }
      if (ratio(target_.area(), uni) < theta_) {
        continue;
      }
      if (extend(combined, j + 1, remaining - 1)) {
        return true;
      }
    }
    return false;
  }

  const BinaryMask& target_;
  const std::vector<const BinaryMask*>& candidates_;
  double theta_;
  int k_max_;
};

}  // namespace

std::vector<std::size_t> find_union_masks(const ProposalSet& set, double theta, int k_max) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw InvalidInput("union IoU threshold must lie in (0,1]");
  }
  if (k_max < 2) {
    throw InvalidInput("maximum combination size must be at least 2");
  }
  const std::size_t n = set.size();
  std::vector<bool> is_union(n, false);
  std::vector<std::size_t> removed;

  for (std::size_t i = 0; i < n; ++i) {
    const BinaryMask& target = set[i].mask;
    std::vector<const BinaryMask*> candidates;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || is_union[j]) {
        continue;
      }
      const BinaryMask& other = set[j].mask;
      const std::int64_t outside = other.area() - intersection_area(target, other);
      if (ratio(target.area(), target.area() + outside) < theta) {
        continue;
      }
      candidates.push_back(&other);
    }
    if (UnionSearch(target, candidates, theta, k_max).found()) {
      is_union[i] = true;
      removed.push_back(i);
    }
  }
  return removed;
}

ProposalSet remove_union_masks(const ProposalSet& set, double theta, int k_max) {
  const std::vector<std::size_t> removed = find_union_masks(set, theta, k_max);
  ProposalSet out(set.source());
  std::size_t r = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (r < removed.size() && removed[r] == i) {
      ++r;
      continue;
    }
    out.add(set[i]);
  }
  return out;
}

ProposalSet resolve_overlaps_in_order(const ProposalSet& set, std::span<const std::size_t> order) {
  ProposalSet out(set.source());
  if (set.empty()) {
    return out;
  }
  BinaryMask covered(set.height(), set.width());
  for (const std::size_t i : order) {
    if (i >= set.size()) {
      throw InvalidInput("overlap resolution order index out of range");
    }
    BinaryMask independent = difference(set[i].mask, covered);
    if (independent.empty()) {
      continue;
    }
    covered |= independent;
    out.add(std::move(independent), set[i].score);
  }
  return out;
}

ProposalSet resolve_overlaps(const ProposalSet& set) {
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set[a].mask.area() < set[b].mask.area();
  });
  return resolve_overlaps_in_order(set, order);
}

ProposalSet make_independent(const ProposalSet& set, double theta, int k_max) {
  return resolve_overlaps(remove_union_masks(set, theta, k_max));
}

ProposalSet size_filter(const ProposalSet& set, std::int64_t min_area, double max_frac) {
  if (min_area < 0) {
    throw InvalidInput("min_area must be non-negative");
  }
  if (!(max_frac > 0.0 && max_frac <= 1.0)) {
    throw InvalidInput("max_frac must lie in (0,1]");
  }
  ProposalSet out(set.source());
  for (const ScoredMask& item : set) {
    const double limit = max_frac * static_cast<double>(item.mask.pixel_count());
    if (item.mask.area() < min_area || static_cast<double>(item.mask.area()) > limit) {
      continue;
    }
    out.add(item);
  }
  return out;
}

bool pairwise_disjoint(const ProposalSet& set) {
  if (set.empty()) {
    return true;
  }
  BinaryMask seen(set.height(), set.width());
  for (const ScoredMask& item : set) {
    if (intersection_area(seen, item.mask) != 0) {
      return false;
    }
    seen |= item.mask;
  }
  return true;
}

}  // namespace uois
