#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "uois/attnfilter.hpp"
#include "uois/image.hpp"
#include "uois/maskset.hpp"
#include "uois/prompts.hpp"

namespace uois {

// Automatic mask generator settings, echoed into every recorded proposal file.
struct GeneratorParams {
  double box_nms_thresh = 0.5;
  double crop_overlap_ratio = 0.0;
  int min_mask_region_area = 0;
  int points_per_batch = 64;
  double stability_score_thresh = 0.95;

  void validate() const;
  bool operator==(const GeneratorParams&) const = default;
};

struct PromptRequest {
  std::vector<PointPrompt> points;
  std::optional<BoundingBox> box;

  bool operator==(const PromptRequest&) const = default;
};

// Order-independent text form of a request: points sorted by (x, y) and
// written as "p" + 5-digit x + "," + 5-digit y + ("+" | "-") joined by ";",
// then "|b" + x0,y0,x1,y1 (5 digits each) when a box is present.
// Example: "p00004,00002+;p00010,00002+|b00001,00001,00012,00009".
std::string canonical_prompt_key(const PromptRequest& request);
// Lower-case 8-hex-digit zlib crc32 of the canonical key.
std::string prompt_hash(const PromptRequest& request);

struct DescriptorOutput {
  AttentionStack attention;
  FeatureStack features;
};

// Access to the two foundation models. Every call names the scene so that
// recorded backends can find their data; live backends may ignore it.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual ProposalSet generate_proposals(const std::string& scene_id, const ColorImage& image,
                                         const GeneratorParams& params) = 0;
  virtual ScoredMask predict_with_prompts(const std::string& scene_id, const ColorImage& image,
                                          const PromptRequest& request) = 0;
  virtual DescriptorOutput extract_features(const std::string& scene_id,
                                            const ColorImage& image) = 0;
};

// Serves recorded fixture bundles from <root>/<scene_id>/. Stateless after
// construction, safe to share between threads. Lookups are exact: a missing
// scene or prompt set raises FixtureNotFound.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::filesystem::path root);

  ProposalSet generate_proposals(const std::string& scene_id, const ColorImage& image,
                                 const GeneratorParams& params) override;
  ScoredMask predict_with_prompts(const std::string& scene_id, const ColorImage& image,
                                  const PromptRequest& request) override;
  DescriptorOutput extract_features(const std::string& scene_id, const ColorImage& image) override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path scene_dir(const std::string& scene_id) const;

  std::filesystem::path root_;
};

// Runs an external extractor process per call and reads back what it wrote.
// Arguments appended to `command` (each shell-quoted):
//
//   proposals --scene ID --image IMG.png --out DIR/proposals.json
//             --box-nms-thresh V --crop-overlap-ratio V --min-mask-region-area V
//             --points-per-batch V --stability-score-thresh V
//   features  --scene ID --image IMG.png --attn DIR/attn.bin --feat DIR/feat.bin
//   prompt    --scene ID --image IMG.png --request REQ.json --out DIR/prompted/HASH.json
//
// Inputs and outputs live under <work_dir>/<scene_id>/ in the fixture layout.
// Calls for one scene are serialized; different scenes may run concurrently.
class BridgeBackend final : public Backend {
 public:
  BridgeBackend(std::string command, std::filesystem::path work_dir);

  ProposalSet generate_proposals(const std::string& scene_id, const ColorImage& image,
                                 const GeneratorParams& params) override;
  ScoredMask predict_with_prompts(const std::string& scene_id, const ColorImage& image,
                                  const PromptRequest& request) override;
  DescriptorOutput extract_features(const std::string& scene_id, const ColorImage& image) override;

 private:
  std::mutex& scene_lock(const std::string& scene_id);
  std::filesystem::path scene_dir(const std::string& scene_id) const;
  void run(const std::vector<std::string>& args) const;

  std::string command_;
  std::filesystem::path work_dir_;
  std::mutex locks_guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace uois
