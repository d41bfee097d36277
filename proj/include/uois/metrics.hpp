#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "uois/maskset.hpp"

namespace uois {

// Dense row-major score matrix for assignment problems.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Maximum-weight one-to-one assignment on a rectangular matrix (Hungarian
// method, O(n^3)). Returns for each row the matched column or -1.
std::vector<int> max_weight_assignment(const ScoreMatrix& scores);

struct Assignment {
  std::vector<int> pred_to_gt;  // -1 when unmatched
  std::vector<int> gt_to_pred;
  ScoreMatrix pairwise_f;        // preds x gts overlap F-measure
  double total = 0;              // sum of F over matched pairs
};

// Overlap F-measure 2|p∩g| / (|p| + |g|) for every pred/gt pair.
ScoreMatrix pairwise_overlap_f(const ProposalSet& preds, const ProposalSet& gts);

// Pairs maximizing the summed overlap F. Pairs with zero F are left
// unmatched.
Assignment match_hungarian(const ProposalSet& preds, const ProposalSet& gts);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f = 0;

  bool operator==(const Prf&) const = default;
};

// F = 2PR / (P + R), 0 when P + R = 0.
double f_measure(double precision, double recall);

Prf overlap_prf(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment);

// Mask minus its 3x3 erosion; pixels outside the image count as background.
BinaryMask mask_boundary(const BinaryMask& mask);
// Pixels within Euclidean distance `radius` of a set pixel.
BinaryMask dilate_disk(const BinaryMask& mask, int radius);

inline constexpr int kDefaultBoundaryTolerance = 2;

// Boundary pixels of a prediction are true positives when they fall inside
// the matched ground-truth boundary dilated by `tolerance`, and vice versa.
// Denominators cover all predicted / all ground-truth boundary pixels.
Prf boundary_prf(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment,
                 int tolerance = kDefaultBoundaryTolerance);

// Percentage of ground-truth objects whose matched prediction has overlap
// F > 0.75.
double f_at_75(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment);

struct SceneMetrics {
  std::string scene_id;
  Prf overlap;
  Prf boundary;
  double f_at_75 = 0;  // percentage
  std::size_t predictions = 0;
  std::size_t objects = 0;

  bool operator==(const SceneMetrics&) const = default;
};

SceneMetrics evaluate_scene(const std::string& scene_id, const ProposalSet& preds,
                            const ProposalSet& gts, int tolerance = kDefaultBoundaryTolerance);

struct EvalReport {
  Prf overlap;
  Prf boundary;
  double f_at_75 = 0;
  std::size_t predictions = 0;
  std::size_t objects = 0;
  std::vector<SceneMetrics> scenes;

  bool operator==(const EvalReport&) const = default;
};

// Arithmetic mean of the per-scene values; counts are summed.
EvalReport aggregate(std::vector<SceneMetrics> scenes);

// Column order: Overlap P R F, Boundary P R F, F@.75 (all in percent).
std::string format_report_table(const EvalReport& report);
std::string format_report_row(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace uois
