#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uois/attnfilter.hpp"
#include "uois/backends.hpp"
#include "uois/image.hpp"
#include "uois/maskset.hpp"
#include "uois/prompts.hpp"

namespace uois {

// How stage 3 prompts the segmenter inside each object mask.
enum class PromptMode { cluster, random, boxes };

std::string_view to_string(PromptMode mode);
PromptMode prompt_mode_from_string(std::string_view text);

struct PipelineConfig {
  double theta = kDefaultUnionIou;
  int k_max = kDefaultMaxCombination;
  double tau = kDefaultBackgroundTau;
  int k_prompts = kDefaultPromptCount;
  std::int64_t min_area = 500;
  double max_frac = 0.8;
  GeneratorParams generator;
  std::uint64_t seed = 0;
  // Stage 3 on/off. Off gives the unrefined variant.
  bool refine = true;
  // Re-apply min_area/max_frac to the refined masks.
  bool refilter_after_refine = true;
  // Entropy head weighting; off sets every head weight to 1.
  bool weighting = true;
  PromptMode prompt_mode = PromptMode::cluster;

  // Throws InvalidInput naming the offending key.
  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

// Config files are flat `key = value` lines; '#' starts a comment. Keys are
// exactly the PipelineConfig field names with generator fields spelled as in
// GeneratorParams. Missing keys keep their defaults, unknown keys are errors.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);

struct StageTimings {
  double proposals_ms = 0;
  double filtering_ms = 0;
  double refinement_ms = 0;
};

// Everything up to the background threshold. Independent of tau, so a sweep
// computes it once per scene.
struct ScoredScene {
  std::string scene_id;
  ColorImage rgb;
  ProposalSet raw;          // generator output on the colorized depth
  ProposalSet independent;  // after union removal and overlap resolution
  ProposalSet sized;        // after the size filter
  WeightVector weights;
  std::size_t background_patch = 0;
  SimilarityMap similarity;
  std::vector<double> background_scores;  // one per mask in `sized`
  std::vector<std::string> warnings;
  StageTimings timings;
};

struct SegmentationResult {
  std::string scene_id;
  ProposalSet raw;
  ProposalSet independent;
  ProposalSet sized;
  std::vector<double> background_scores;
  std::size_t background_patch = 0;
  SimilarityMap similarity;
  ProposalSet objects;  // masks at or below tau
  std::vector<std::vector<PointPrompt>> prompts;  // per object, empty when not refining
  std::vector<std::optional<BoundingBox>> boxes;  // per object, boxes mode only
  ProposalSet refined;  // raw stage-3 predictions, empty fallbacks replaced
  ProposalSet final_masks;
  std::vector<std::string> warnings;
  StageTimings timings;

  // Compares every output; timings are excluded.
  bool same_outputs(const SegmentationResult& other) const;
};

// Stages 1 and 2 up to the mask scores. Throws InvalidInput when rgb and depth
// sizes differ; backend errors are rethrown with the scene id prefixed.
ScoredScene prepare_scene(const std::string& scene_id, const ColorImage& rgb,
                          const DepthImage& depth, const PipelineConfig& config, Backend& backend);

// The stage-3 request for one object mask under the configured prompt mode.
PromptRequest make_prompt_request(const BinaryMask& object, const PipelineConfig& config);

// Background threshold and, when enabled, prompted refinement.
SegmentationResult finish_scene(const ScoredScene& scored, const PipelineConfig& config,
                                Backend& backend);

SegmentationResult run_scene(const std::string& scene_id, const ColorImage& rgb,
                             const DepthImage& depth, const PipelineConfig& config,
                             Backend& backend);

// Stage-3 overlap resolution order: predicted score descending, then area
// descending, then index.
std::vector<std::size_t> refinement_priority(const ProposalSet& refined);

}  // namespace uois
