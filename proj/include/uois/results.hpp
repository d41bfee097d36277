#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uois/pipeline.hpp"

namespace uois {

// Results directory layout: <out>/<scene_id>/result.json. Scene ids may
// contain '/', which maps onto nested directories.
//
// result.json:
// {"format": "uois-result/1", "scene": id, "seed": n, "config": "<config text>",
//  "final": {proposals}, "stages": {"raw": {...}, "independent": {...},
//  "sized": {...}, "objects": {...}, "refined": {...}},
//  "background_scores": [...], "background_patch": l,
//  "similarity": {"grid": [rows, cols], "values": [...]},
//  "prompts": [[[x, y], ...], ...], "boxes": [[x0, y0, x1, y1] | null, ...],
//  "warnings": [...]}
nlohmann::json result_to_json(const SegmentationResult& result, const PipelineConfig& config);
std::filesystem::path result_path(const std::filesystem::path& out_dir, const std::string& scene_id);
void write_result(const std::filesystem::path& out_dir, const SegmentationResult& result,
                  const PipelineConfig& config);

struct StoredResult {
  std::string scene_id;
  ProposalSet final_masks;
  ProposalSet objects;
  SimilarityMap similarity;
  std::vector<std::vector<PointPrompt>> prompts;
};
StoredResult read_result(const std::filesystem::path& out_dir, const std::string& scene_id);

}  // namespace uois
