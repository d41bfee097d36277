#include "uois/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <map>
#include <numeric>
#include <sstream>

#include "uois/depthcolor.hpp"
#include "uois/error.hpp"
#include "uois/fsutil.hpp"

namespace uois {

std::string_view to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::cluster: return "cluster";
    case PromptMode::random: return "random";
    case PromptMode::boxes: return "boxes";
  }
  return "cluster";
}

PromptMode prompt_mode_from_string(std::string_view text) {
  if (text == "cluster") return PromptMode::cluster;
  if (text == "random") return PromptMode::random;
  if (text == "boxes") return PromptMode::boxes;
  throw InvalidInput("unknown prompt mode '" + std::string(text) + "' (cluster|random|boxes)");
}

void PipelineConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidInput("theta must lie in (0,1]");
  if (k_max < 2) throw InvalidInput("k_max must be at least 2");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("tau must lie in [0,1]");
  if (k_prompts < 1) throw InvalidInput("k_prompts must be at least 1");
  if (min_area < 0) throw InvalidInput("min_area must be non-negative");
  if (!(max_frac > 0.0 && max_frac <= 1.0)) throw InvalidInput("max_frac must lie in (0,1]");
  generator.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw InvalidInput("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw InvalidInput("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::string shortest(double v) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, result.ptr);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// Runs `fn`, prefixing library errors with the scene id while keeping their
// type.
template <typename F>
auto with_scene_context(const std::string& scene_id, F&& fn) {
  const std::string prefix = "scene '" + scene_id + "': ";
  try {
    return fn();
  } catch (const FixtureNotFound& e) {
    throw FixtureNotFound(prefix + e.what());
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::map<std::string, std::string> seen;
  std::istringstream lines{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (!seen.emplace(key, value).second) {
      throw InvalidInput("config key '" + key + "' given twice");
    }

    if (key == "theta") config.theta = parse_number<double>(key, value);
    else if (key == "k_max") config.k_max = parse_number<int>(key, value);
    else if (key == "tau") config.tau = parse_number<double>(key, value);
    else if (key == "k_prompts") config.k_prompts = parse_number<int>(key, value);
    else if (key == "min_area") config.min_area = parse_number<std::int64_t>(key, value);
    else if (key == "max_frac") config.max_frac = parse_number<double>(key, value);
    else if (key == "box_nms_thresh") config.generator.box_nms_thresh = parse_number<double>(key, value);
    else if (key == "crop_overlap_ratio") config.generator.crop_overlap_ratio = parse_number<double>(key, value);
    else if (key == "min_mask_region_area") config.generator.min_mask_region_area = parse_number<int>(key, value);
    else if (key == "points_per_batch") config.generator.points_per_batch = parse_number<int>(key, value);
    else if (key == "stability_score_thresh") config.generator.stability_score_thresh = parse_number<double>(key, value);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "refine") config.refine = parse_bool(key, value);
    else if (key == "refilter_after_refine") config.refilter_after_refine = parse_bool(key, value);
    else if (key == "weighting") config.weighting = parse_bool(key, value);
    else if (key == "prompt_mode") config.prompt_mode = prompt_mode_from_string(value);
    else throw InvalidInput("unknown config key '" + key + "'");
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string format_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "theta = " << shortest(c.theta) << "\n"
      << "k_max = " << c.k_max << "\n"
      << "tau = " << shortest(c.tau) << "\n"
      << "k_prompts = " << c.k_prompts << "\n"
      << "min_area = " << c.min_area << "\n"
      << "max_frac = " << shortest(c.max_frac) << "\n"
      << "box_nms_thresh = " << shortest(c.generator.box_nms_thresh) << "\n"
      << "crop_overlap_ratio = " << shortest(c.generator.crop_overlap_ratio) << "\n"
      << "min_mask_region_area = " << c.generator.min_mask_region_area << "\n"
      << "points_per_batch = " << c.generator.points_per_batch << "\n"
      << "stability_score_thresh = " << shortest(c.generator.stability_score_thresh) << "\n"
      << "seed = " << c.seed << "\n"
      << "refine = " << (c.refine ? "true" : "false") << "\n"
      << "refilter_after_refine = " << (c.refilter_after_refine ? "true" : "false") << "\n"
      << "weighting = " << (c.weighting ? "true" : "false") << "\n"
      << "prompt_mode = " << to_string(c.prompt_mode) << "\n";
  return out.str();
}

bool SegmentationResult::same_outputs(const SegmentationResult& o) const {
  return scene_id == o.scene_id && raw == o.raw && independent == o.independent && sized == o.sized &&
         background_scores == o.background_scores && background_patch == o.background_patch &&
         similarity == o.similarity && objects == o.objects && prompts == o.prompts &&
         boxes == o.boxes && refined == o.refined && final_masks == o.final_masks &&
         warnings == o.warnings;
}

ScoredScene prepare_scene(const std::string& scene_id, const ColorImage& rgb, const DepthImage& depth,
                          const PipelineConfig& config, Backend& backend) {
  config.validate();
  if (!rgb.same_shape(depth.height(), depth.width())) {
    throw InvalidInput("scene '" + scene_id + "': rgb is " + std::to_string(rgb.width()) + "x" +
                       std::to_string(rgb.height()) + " but depth is " + std::to_string(depth.width()) +
                       "x" + std::to_string(depth.height()));
  }
  return with_scene_context(scene_id, [&] {
    ScoredScene scene;
    scene.scene_id = scene_id;
    scene.rgb = rgb;

    auto start = std::chrono::steady_clock::now();
    const ColorImage depth_color = colorize_depth(depth);
    scene.raw = backend.generate_proposals(scene_id, depth_color, config.generator);
    scene.independent = make_independent(scene.raw, config.theta, config.k_max);
    scene.sized = size_filter(scene.independent, config.min_area, config.max_frac);
    scene.timings.proposals_ms = elapsed_ms(start);

    start = std::chrono::steady_clock::now();
    const DescriptorOutput descriptor = backend.extract_features(scene_id, rgb);
    if (descriptor.attention.heads() != descriptor.features.heads()) {
      throw FormatError("attention and feature head counts differ");
    }
    if (config.weighting) {
      scene.weights = head_weights(head_entropy(descriptor.attention));
      if (scene.weights.degenerate) {
        scene.warnings.push_back("single attention head: head weighting disabled");
      }
    } else {
      scene.weights = uniform_weights(descriptor.attention.heads());
    }
    scene.background_patch = background_patch_index(descriptor.attention, scene.weights);
    scene.similarity = similarity_map(descriptor.features, scene.weights, scene.background_patch);
    scene.background_scores = score_masks(scene.sized, scene.similarity);
    scene.timings.filtering_ms = elapsed_ms(start);
    return scene;
  });
}

std::vector<std::size_t> refinement_priority(const ProposalSet& refined) {
  std::vector<std::size_t> order(refined.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (refined[a].score != refined[b].score) return refined[a].score > refined[b].score;
    return refined[a].mask.area() > refined[b].mask.area();
  });
  return order;
}

PromptRequest make_prompt_request(const BinaryMask& object, const PipelineConfig& config) {
  const std::uint64_t seed = object_seed(config.seed, object);
  PromptRequest request;
  switch (config.prompt_mode) {
    case PromptMode::cluster: request.points = kmedoids_prompts(object, config.k_prompts, seed); break;
    case PromptMode::random: request.points = random_prompts(object, config.k_prompts, seed); break;
    case PromptMode::boxes: request.box = object.bbox(); break;
  }
  return request;
}

SegmentationResult finish_scene(const ScoredScene& scored, const PipelineConfig& config, Backend& backend) {
  config.validate();
  SegmentationResult result;
  result.scene_id = scored.scene_id;
  result.raw = scored.raw;
  result.independent = scored.independent;
  result.sized = scored.sized;
  result.background_scores = scored.background_scores;
  result.background_patch = scored.background_patch;
  result.similarity = scored.similarity;
  result.warnings = scored.warnings;
  result.timings = scored.timings;

  auto start = std::chrono::steady_clock::now();
  result.objects = filter_background(scored.sized, scored.background_scores, config.tau);
  result.timings.filtering_ms += elapsed_ms(start);

  if (!config.refine) {
    result.final_masks = result.objects;
    return result;
  }

  start = std::chrono::steady_clock::now();
  with_scene_context(scored.scene_id, [&] {
    result.refined = ProposalSet(ProposalSource::prompted);
    for (std::size_t i = 0; i < result.objects.size(); ++i) {
      const ScoredMask& object = result.objects[i];
      const PromptRequest request = make_prompt_request(object.mask, config);
      result.prompts.push_back(request.points);
      result.boxes.push_back(request.box);

      ScoredMask predicted = backend.predict_with_prompts(scored.scene_id, scored.rgb, request);
      if (predicted.mask.empty()) {
        result.warnings.push_back("object " + std::to_string(i) +
                                  ": prompted prediction empty, kept the filtered mask");
        predicted = object;
      }
      result.refined.add(std::move(predicted));
    }
    return 0;
  });

  const std::vector<std::size_t> order = refinement_priority(result.refined);
  result.final_masks = resolve_overlaps_in_order(result.refined, order);
  if (config.refilter_after_refine) {
    result.final_masks = size_filter(result.final_masks, config.min_area, config.max_frac);
  }
  result.timings.refinement_ms = elapsed_ms(start);
  return result;
}

SegmentationResult run_scene(const std::string& scene_id, const ColorImage& rgb, const DepthImage& depth,
                             const PipelineConfig& config, Backend& backend) {
  return finish_scene(prepare_scene(scene_id, rgb, depth, config, backend), config, backend);
}

}  // namespace uois
