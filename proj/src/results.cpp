#include "uois/results.hpp"

#include "uois/error.hpp"
#include "uois/fixtures.hpp"
#include "uois/fsutil.hpp"

namespace uois {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kResultFormat = "uois-result/1";
constexpr const char* kResultFile = "result.json";

json prompts_to_json(const std::vector<PointPrompt>& points) {
  json out = json::array();
  for (const PointPrompt& p : points) {
    out.push_back({p.x, p.y});
  }
  return out;
}

}  // namespace

json result_to_json(const SegmentationResult& r, const PipelineConfig& config) {
  json prompts = json::array();
  for (const auto& points : r.prompts) {
    prompts.push_back(prompts_to_json(points));
  }
  json boxes = json::array();
  for (const auto& box : r.boxes) {
    boxes.push_back(box ? json{box->x0, box->y0, box->x1, box->y1} : json(nullptr));
  }
  const PatchGrid grid = r.similarity.grid();
  return json{{"format", kResultFormat},
              {"scene", r.scene_id},
              {"seed", config.seed},
              {"config", format_config(config)},
              {"final", fixtures::proposals_to_json(r.final_masks)},
              {"stages",
               {{"raw", fixtures::proposals_to_json(r.raw)},
                {"independent", fixtures::proposals_to_json(r.independent)},
                {"sized", fixtures::proposals_to_json(r.sized)},
                {"objects", fixtures::proposals_to_json(r.objects)},
                {"refined", fixtures::proposals_to_json(r.refined)}}},
              {"background_scores", r.background_scores},
              {"background_patch", r.background_patch},
              {"similarity",
               {{"grid", {grid.rows, grid.cols}},
                {"values", std::vector<double>(r.similarity.values().begin(), r.similarity.values().end())}}},
              {"prompts", std::move(prompts)},
              {"boxes", std::move(boxes)},
              {"warnings", r.warnings}};
}

fs::path result_path(const fs::path& out_dir, const std::string& scene_id) {
  return out_dir / fs::path(scene_id) / kResultFile;
}

void write_result(const fs::path& out_dir, const SegmentationResult& result, const PipelineConfig& config) {
  write_file_atomic(result_path(out_dir, result.scene_id), result_to_json(result, config).dump(1) + "\n");
}

StoredResult read_result(const fs::path& out_dir, const std::string& scene_id) {
  const fs::path path = result_path(out_dir, scene_id);
  if (!fs::is_regular_file(path)) {
    throw FixtureNotFound("no result for scene '" + scene_id + "' in " + out_dir.string());
  }
  try {
    const json j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != kResultFormat) {
      throw FormatError("unsupported result format");
    }
    StoredResult stored;
    stored.scene_id = j.at("scene").get<std::string>();
    stored.final_masks = fixtures::proposals_from_json(j.at("final"));
    stored.objects = fixtures::proposals_from_json(j.at("stages").at("objects"));
    const auto grid = j.at("similarity").at("grid").get<std::vector<int>>();
    if (grid.size() == 2 && grid[0] > 0 && grid[1] > 0) {
      stored.similarity = SimilarityMap(PatchGrid{grid[0], grid[1]},
                                        j.at("similarity").at("values").get<std::vector<double>>());
    }
    for (const json& points : j.at("prompts")) {
      std::vector<PointPrompt> list;
      for (const json& p : points) {
        list.push_back({p.at(0).get<int>(), p.at(1).get<int>(), true});
      }
      stored.prompts.push_back(std::move(list));
    }
    return stored;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace uois
