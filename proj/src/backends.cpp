#include "uois/backends.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "uois/error.hpp"
#include "uois/fixtures.hpp"
#include "uois/fsutil.hpp"
#include "uois/image_io.hpp"

namespace uois {

namespace fs = std::filesystem;

void GeneratorParams::validate() const {
  auto ratio = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidInput(std::string(name) + " must lie in [0,1]");
    }
  };
  ratio(box_nms_thresh, "box_nms_thresh");
  ratio(crop_overlap_ratio, "crop_overlap_ratio");
  ratio(stability_score_thresh, "stability_score_thresh");
  if (min_mask_region_area < 0) {
    throw InvalidInput("min_mask_region_area must be non-negative");
  }
  if (points_per_batch < 1) {
    throw InvalidInput("points_per_batch must be positive");
  }
}

std::string canonical_prompt_key(const PromptRequest& request) {
  std::vector<PointPrompt> points = request.points;
  std::sort(points.begin(), points.end(), [](const PointPrompt& a, const PointPrompt& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.positive && !b.positive;
  });
  auto coord = [](int v) {
    if (v < 0 || v > 99999) {
      throw InvalidInput("prompt coordinate outside [0, 99999]");
    }
    char text[6];
    std::snprintf(text, sizeof(text), "%05d", v);
    return std::string(text);
  };
  std::string key;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i != 0) key += ';';
    key += 'p' + coord(points[i].x) + ',' + coord(points[i].y) + (points[i].positive ? '+' : '-');
  }
  if (request.box) {
    const BoundingBox& b = *request.box;
    key += "|b" + coord(b.x0) + ',' + coord(b.y0) + ',' + coord(b.x1) + ',' + coord(b.y1);
  }
  return key;
}

std::string prompt_hash(const PromptRequest& request) { return crc32_hex(canonical_prompt_key(request)); }

namespace {

fs::path checked_scene_dir(const fs::path& root, const std::string& scene_id) {
  const fs::path relative(scene_id);
  if (scene_id.empty() || relative.is_absolute()) {
    throw InvalidInput("invalid scene id '" + scene_id + "'");
  }
  for (const fs::path& part : relative) {
    if (part == "..") {
      throw InvalidInput("invalid scene id '" + scene_id + "'");
    }
  }
  return root / relative;
}

void require_file(const fs::path& path, const std::string& scene_id) {
  if (!fs::is_regular_file(path)) {
    throw FixtureNotFound("fixture not found: scene '" + scene_id + "' has no " +
                          path.filename().string());
  }
}

void require_grid_match(const ColorImage& image, const ProposalSet& set, const std::string& scene_id) {
  if (!set.empty() && !image.same_shape(set.height(), set.width())) {
    throw InvalidInput("scene '" + scene_id + "': image size differs from recorded masks");
  }
}

DescriptorOutput read_descriptor(const fs::path& dir) {
  DescriptorOutput out{fixtures::read_attention(dir / fixtures::kAttentionFile),
                       fixtures::read_features(dir / fixtures::kFeaturesFile)};
  if (out.attention.heads() != out.features.heads() || !(out.attention.grid() == out.features.grid())) {
    throw FormatError(dir.string() + ": attention and features disagree on heads or grid");
  }
  return out;
}

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (const char c : arg) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

ReplayBackend::ReplayBackend(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) {
    throw FixtureNotFound("fixture root not found: " + root_.string());
  }
}

fs::path ReplayBackend::scene_dir(const std::string& scene_id) const {
  fs::path dir = checked_scene_dir(root_, scene_id);
  if (!fs::is_directory(dir)) {
    throw FixtureNotFound("fixture not found: scene '" + scene_id + "'");
  }
  return dir;
}

ProposalSet ReplayBackend::generate_proposals(const std::string& scene_id, const ColorImage& image,
                                              const GeneratorParams& params) {
  const fs::path path = scene_dir(scene_id) / fixtures::kProposalsFile;
  require_file(path, scene_id);
  fixtures::ProposalFile file = fixtures::read_proposal_file(path);
  if (!(file.params == params)) {
    throw FixtureNotFound("fixture not found: scene '" + scene_id +
                          "' was recorded with different generator params");
  }
  require_grid_match(image, file.proposals, scene_id);
  return std::move(file.proposals);
}

ScoredMask ReplayBackend::predict_with_prompts(const std::string& scene_id, const ColorImage& image,
                                               const PromptRequest& request) {
  const fs::path path = scene_dir(scene_id) / fixtures::kPromptedDir / (prompt_hash(request) + ".json");
  if (!fs::is_regular_file(path)) {
    throw FixtureNotFound("fixture not found: scene '" + scene_id + "' has no recording for prompts " +
                          canonical_prompt_key(request));
  }
  ScoredMask result = fixtures::read_prompted_file(path, request);
  if (!image.same_shape(result.mask.height(), result.mask.width())) {
    throw InvalidInput("scene '" + scene_id + "': image size differs from recorded prompted mask");
  }
  return result;
}

DescriptorOutput ReplayBackend::extract_features(const std::string& scene_id, const ColorImage& image) {
  (void)image;
  const fs::path dir = scene_dir(scene_id);
  require_file(dir / fixtures::kAttentionFile, scene_id);
  require_file(dir / fixtures::kFeaturesFile, scene_id);
  return read_descriptor(dir);
}

BridgeBackend::BridgeBackend(std::string command, fs::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
  if (command_.empty()) {
    throw InvalidInput("bridge backend needs an extractor command");
  }
  fs::create_directories(work_dir_);
}

std::mutex& BridgeBackend::scene_lock(const std::string& scene_id) {
  std::lock_guard<std::mutex> guard(locks_guard_);
  auto& slot = locks_[scene_id];
  if (!slot) {
    slot = std::make_unique<std::mutex>();
  }
  return *slot;
}

fs::path BridgeBackend::scene_dir(const std::string& scene_id) const {
  fs::path dir = checked_scene_dir(work_dir_, scene_id);
  fs::create_directories(dir);
  return dir;
}

void BridgeBackend::run(const std::vector<std::string>& args) const {
  std::string line = command_;
  for (const std::string& arg : args) {
    line += ' ';
    line += shell_quote(arg);
  }
  const int status = std::system(line.c_str());
  if (status != 0) {
    throw Error("extractor failed (status " + std::to_string(status) + "): " + line);
  }
}

ProposalSet BridgeBackend::generate_proposals(const std::string& scene_id, const ColorImage& image,
                                              const GeneratorParams& params) {
  std::lock_guard<std::mutex> guard(scene_lock(scene_id));
  const fs::path dir = scene_dir(scene_id);
  const fs::path input = dir / "generator_input.png";
  const fs::path out = dir / fixtures::kProposalsFile;
  write_color_png(input, image);
  fs::remove(out);
  run({"proposals", "--scene", scene_id, "--image", input.string(), "--out", out.string(),
       "--box-nms-thresh", number(params.box_nms_thresh), "--crop-overlap-ratio",
       number(params.crop_overlap_ratio), "--min-mask-region-area",
       std::to_string(params.min_mask_region_area), "--points-per-batch",
       std::to_string(params.points_per_batch), "--stability-score-thresh",
       number(params.stability_score_thresh)});
  require_file(out, scene_id);
  fixtures::ProposalFile file = fixtures::read_proposal_file(out);
  if (!(file.params == params)) {
    throw FormatError(out.string() + ": extractor echoed different generator params");
  }
  require_grid_match(image, file.proposals, scene_id);
  return std::move(file.proposals);
}

ScoredMask BridgeBackend::predict_with_prompts(const std::string& scene_id, const ColorImage& image,
                                               const PromptRequest& request) {
  std::lock_guard<std::mutex> guard(scene_lock(scene_id));
  const fs::path dir = scene_dir(scene_id);
  const std::string hash = prompt_hash(request);
  const fs::path input = dir / "prompt_input.png";
  const fs::path request_path = dir / "requests" / (hash + ".json");
  const fs::path out = dir / fixtures::kPromptedDir / (hash + ".json");
  write_color_png(input, image);
  write_file_atomic(request_path, fixtures::prompt_request_to_json(request).dump() + "\n");
  fs::remove(out);
  run({"prompt", "--scene", scene_id, "--image", input.string(), "--request", request_path.string(),
       "--out", out.string()});
  require_file(out, scene_id);
  ScoredMask result = fixtures::read_prompted_file(out, request);
  if (!image.same_shape(result.mask.height(), result.mask.width())) {
    throw FormatError(out.string() + ": prompted mask size differs from the image");
  }
  return result;
}

DescriptorOutput BridgeBackend::extract_features(const std::string& scene_id, const ColorImage& image) {
  std::lock_guard<std::mutex> guard(scene_lock(scene_id));
  const fs::path dir = scene_dir(scene_id);
  const fs::path input = dir / "descriptor_input.png";
  write_color_png(input, image);
  fs::remove(dir / fixtures::kAttentionFile);
  fs::remove(dir / fixtures::kFeaturesFile);
  run({"features", "--scene", scene_id, "--image", input.string(), "--attn",
       (dir / fixtures::kAttentionFile).string(), "--feat", (dir / fixtures::kFeaturesFile).string()});
  require_file(dir / fixtures::kAttentionFile, scene_id);
  require_file(dir / fixtures::kFeaturesFile, scene_id);
  return read_descriptor(dir);
}

}  // namespace uois
