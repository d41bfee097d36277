#include "uois/fixtures.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

#include "uois/error.hpp"
#include "uois/fsutil.hpp"
#include "uois/image_io.hpp"

namespace uois::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "tensor files are read and written as native little-endian floats");

namespace {

constexpr const char* kProposalsFormat = "uois-proposals/1";
constexpr const char* kPromptedFormat = "uois-prompted/1";

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

PatchGrid grid_from_header(const TensorFile& file, std::size_t patches) {
  const auto grid = field<std::vector<int>>(file.header, "grid");
  if (grid.size() != 2 || grid[0] <= 0 || grid[1] <= 0 ||
      static_cast<std::size_t>(grid[0]) * static_cast<std::size_t>(grid[1]) != patches) {
    throw FormatError("tensor grid does not match the patch count");
  }
  return PatchGrid{grid[0], grid[1]};
}

}  // namespace

json rle_to_json(const RleMask& rle) {
  json runs = json::array();
  for (const RleMask::Run& run : rle.runs) {
    runs.push_back(run.start);
    runs.push_back(run.length);
  }
  return json{{"size", {rle.height, rle.width}}, {"runs", std::move(runs)}};
}

RleMask rle_from_json(const json& j) {
  const auto size = field<std::vector<int>>(j, "size");
  const auto flat = field<std::vector<std::int64_t>>(j, "runs");
  if (size.size() != 2) {
    throw FormatError("RLE size must be [height, width]");
  }
  if (flat.size() % 2 != 0) {
    throw FormatError("RLE runs must come in (start, length) pairs");
  }
  RleMask rle{size[0], size[1], {}};
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    rle.runs.push_back({flat[i], flat[i + 1]});
  }
  return rle;
}

json mask_to_json(const BinaryMask& mask) { return rle_to_json(encode_rle(mask)); }
BinaryMask mask_from_json(const json& j) { return decode_rle(rle_from_json(j)); }

json params_to_json(const GeneratorParams& p) {
  return json{{"box_nms_thresh", p.box_nms_thresh},
              {"crop_overlap_ratio", p.crop_overlap_ratio},
              {"min_mask_region_area", p.min_mask_region_area},
              {"points_per_batch", p.points_per_batch},
              {"stability_score_thresh", p.stability_score_thresh}};
}

GeneratorParams params_from_json(const json& j) {
  GeneratorParams p;
  p.box_nms_thresh = field<double>(j, "box_nms_thresh");
  p.crop_overlap_ratio = field<double>(j, "crop_overlap_ratio");
  p.min_mask_region_area = field<int>(j, "min_mask_region_area");
  p.points_per_batch = field<int>(j, "points_per_batch");
  p.stability_score_thresh = field<double>(j, "stability_score_thresh");
  return p;
}

json proposals_to_json(const ProposalSet& set) {
  json masks = json::array();
  for (const ScoredMask& item : set) {
    masks.push_back({{"rle", mask_to_json(item.mask)}, {"score", item.score}, {"area", item.mask.area()}});
  }
  return json{{"source", std::string(to_string(set.source()))},
              {"height", set.height()},
              {"width", set.width()},
              {"masks", std::move(masks)}};
}

ProposalSet proposals_from_json(const json& j) {
  ProposalSet set(j.contains("source") ? proposal_source_from_string(field<std::string>(j, "source"))
                                       : ProposalSource::generator);
  const int height = field<int>(j, "height");
  const int width = field<int>(j, "width");
  const json& masks = j.at("masks");
  if (!masks.is_array()) {
    throw FormatError("'masks' must be an array");
  }
  for (const json& entry : masks) {
    BinaryMask mask = mask_from_json(entry.at("rle"));
    if (mask.height() != height || mask.width() != width) {
      throw FormatError("mask size differs from the declared proposal grid");
    }
    if (entry.contains("area") && field<std::int64_t>(entry, "area") != mask.area()) {
      throw FormatError("declared mask area does not match its RLE");
    }
    const double score = entry.contains("score") ? field<double>(entry, "score") : 1.0;
    if (!(score >= 0.0 && score <= 1.0)) {
      throw FormatError("mask score outside [0,1]");
    }
    set.add(std::move(mask), score);
  }
  return set;
}

void write_proposal_file(const fs::path& path, const ProposalSet& set, const GeneratorParams& params) {
  json j = proposals_to_json(set);
  j["format"] = kProposalsFormat;
  j["params"] = params_to_json(params);
  write_file_atomic(path, j.dump() + "\n");
}

ProposalFile read_proposal_file(const fs::path& path) {
  const json j = parse_json(path);
  try {
    if (field<std::string>(j, "format") != kProposalsFormat) {
      throw FormatError("unsupported proposals format");
    }
    return ProposalFile{proposals_from_json(j), params_from_json(j.at("params"))};
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor_file(const fs::path& path, const std::vector<std::int64_t>& shape,
                       std::span<const float> data, json extra_header) {
  std::int64_t expected = 1;
  for (const std::int64_t dim : shape) {
    expected *= dim;
  }
  if (expected != static_cast<std::int64_t>(data.size())) {
    throw InvalidInput("tensor shape does not match data size");
  }
  const std::string_view payload(reinterpret_cast<const char*>(data.data()), data.size_bytes());
  json header = std::move(extra_header);
  header["dtype"] = "float32";
  header["shape"] = shape;
  header["crc32"] = crc32_hex(payload);
  std::string contents = header.dump();
  contents.push_back('\n');
  contents.append(payload);
  write_file_atomic(path, contents);
}

TensorFile read_tensor_file(const fs::path& path) {
  const std::string contents = read_file(path);
  const std::size_t newline = contents.find('\n');
  if (newline == std::string::npos) {
    throw FormatError(path.string() + ": missing header line");
  }
  TensorFile file;
  try {
    file.header = json::parse(contents.substr(0, newline));
    if (field<std::string>(file.header, "dtype") != "float32") {
      throw FormatError("dtype must be float32");
    }
    file.shape = field<std::vector<std::int64_t>>(file.header, "shape");
    std::int64_t count = 1;
    for (const std::int64_t dim : file.shape) {
      if (dim <= 0) {
        throw FormatError("tensor dimensions must be positive");
      }
      count *= dim;
    }
    const std::string_view payload = std::string_view(contents).substr(newline + 1);
    if (static_cast<std::int64_t>(payload.size()) != count * 4) {
      throw FormatError("payload size " + std::to_string(payload.size()) + " does not match shape (" +
                        std::to_string(count * 4) + " bytes expected)");
    }
    if (crc32_hex(payload) != field<std::string>(file.header, "crc32")) {
      throw FormatError("payload checksum mismatch");
    }
    file.data.resize(static_cast<std::size_t>(count));
    std::memcpy(file.data.data(), payload.data(), payload.size());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return file;
}

void write_attention(const fs::path& path, const AttentionStack& attention) {
  const std::vector<float> data(attention.values().begin(), attention.values().end());
  write_tensor_file(path, {attention.heads(), static_cast<std::int64_t>(attention.patches())}, data,
                    json{{"kind", "attention"}, {"grid", {attention.grid().rows, attention.grid().cols}}});
}

AttentionStack read_attention(const fs::path& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.shape.size() != 2) {
    throw FormatError(path.string() + ": attention shape must be [heads, patches]");
  }
  try {
    const PatchGrid grid = grid_from_header(file, static_cast<std::size_t>(file.shape[1]));
    return AttentionStack(static_cast<int>(file.shape[0]), grid,
                          std::vector<double>(file.data.begin(), file.data.end()));
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_features(const fs::path& path, const FeatureStack& features, const std::string& feature_source) {
  const std::vector<float> data(features.values().begin(), features.values().end());
  write_tensor_file(path,
                    {features.heads(), static_cast<std::int64_t>(features.patches()), features.head_dim()},
                    data,
                    json{{"kind", "features"},
                         {"feature_source", feature_source},
                         {"grid", {features.grid().rows, features.grid().cols}}});
}

FeatureStack read_features(const fs::path& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.shape.size() != 3) {
    throw FormatError(path.string() + ": feature shape must be [heads, patches, dim]");
  }
  try {
    const PatchGrid grid = grid_from_header(file, static_cast<std::size_t>(file.shape[1]));
    return FeatureStack(static_cast<int>(file.shape[0]), grid, static_cast<int>(file.shape[2]),
                        std::vector<double>(file.data.begin(), file.data.end()));
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json prompt_request_to_json(const PromptRequest& request) {
  json points = json::array();
  for (const PointPrompt& p : request.points) {
    points.push_back({p.x, p.y, p.positive ? 1 : 0});
  }
  json j{{"key", canonical_prompt_key(request)}, {"points", std::move(points)}};
  if (request.box) {
    j["box"] = {request.box->x0, request.box->y0, request.box->x1, request.box->y1};
  } else {
    j["box"] = nullptr;
  }
  return j;
}

PromptRequest prompt_request_from_json(const json& j) {
  PromptRequest request;
  for (const json& p : j.at("points")) {
    const auto v = p.get<std::vector<int>>();
    if (v.size() != 3) {
      throw FormatError("prompt point must be [x, y, positive]");
    }
    request.points.push_back({v[0], v[1], v[2] != 0});
  }
  if (j.contains("box") && !j.at("box").is_null()) {
    const auto b = j.at("box").get<std::vector<int>>();
    if (b.size() != 4) {
      throw FormatError("prompt box must be [x0, y0, x1, y1]");
    }
    request.box = BoundingBox{b[0], b[1], b[2], b[3]};
  }
  return request;
}

void write_prompted_file(const fs::path& path, const PromptRequest& request, const ScoredMask& result) {
  const json j{{"format", kPromptedFormat},
               {"key", canonical_prompt_key(request)},
               {"mask", mask_to_json(result.mask)},
               {"score", result.score}};
  write_file_atomic(path, j.dump() + "\n");
}

ScoredMask read_prompted_file(const fs::path& path, const PromptRequest& request) {
  const json j = parse_json(path);
  try {
    if (field<std::string>(j, "format") != kPromptedFormat) {
      throw FormatError("unsupported prompted-mask format");
    }
    if (field<std::string>(j, "key") != canonical_prompt_key(request)) {
      throw FormatError("stored prompt key does not match the request");
    }
    const double score = field<double>(j, "score");
    if (!(score >= 0.0 && score <= 1.0)) {
      throw FormatError("prompted score outside [0,1]");
    }
    return ScoredMask{mask_from_json(j.at("mask")), score};
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> validate_bundle(const fs::path& scene_dir) {
  std::vector<std::string> problems;
  auto check = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.push_back(std::string(what) + ": " + e.what());
    }
  };

  if (!fs::is_directory(scene_dir)) {
    return {"not a directory: " + scene_dir.string()};
  }
  std::optional<std::pair<int, int>> image_size;
  std::optional<std::pair<int, int>> depth_size;
  check(kRgbFile, [&] {
    const ColorImage rgb = read_color_png(scene_dir / kRgbFile);
    image_size = {rgb.height(), rgb.width()};
  });
  check(kDepthFile, [&] {
    const DepthImage depth = read_depth_png(scene_dir / kDepthFile);
    depth_size = {depth.height(), depth.width()};
  });
  if (image_size && depth_size && image_size != depth_size) {
    problems.push_back("rgb and depth sizes differ");
  }
  check(kProposalsFile, [&] {
    const ProposalFile file = read_proposal_file(scene_dir / kProposalsFile);
    file.params.validate();
    if (image_size && !file.proposals.empty() &&
        std::make_pair(file.proposals.height(), file.proposals.width()) != *image_size) {
      throw FormatError("mask size differs from rgb size");
    }
  });

  std::optional<AttentionStack> attention;
  std::optional<FeatureStack> features;
  check(kAttentionFile, [&] {
    attention = read_attention(scene_dir / kAttentionFile);
    for (int h = 0; h < attention->heads(); ++h) {
      double total = 0.0;
      for (const double v : attention->head(h)) total += v;
      if (!(total > 0.0)) {
        throw FormatError("head " + std::to_string(h) + " has no positive attention");
      }
    }
  });
  check(kFeaturesFile, [&] { features = read_features(scene_dir / kFeaturesFile); });
  if (attention && features) {
    if (attention->heads() != features->heads()) {
      problems.push_back("attention and feature head counts differ");
    }
    if (!(attention->grid() == features->grid())) {
      problems.push_back("attention and feature patch grids differ");
    }
  }

  const fs::path prompted = scene_dir / kPromptedDir;
  if (fs::is_directory(prompted)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(prompted)) {
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& path : files) {
      const std::string label = "prompted/" + path.filename().string();
      check(label.c_str(), [&] {
        if (path.extension() != ".json") {
          throw FormatError("unexpected file");
        }
        const json j = parse_json(path);
        if (field<std::string>(j, "format") != kPromptedFormat) {
          throw FormatError("unsupported prompted-mask format");
        }
        const std::string key = field<std::string>(j, "key");
        if (crc32_hex(key) != path.stem().string()) {
          throw FormatError("file name is not the hash of its key");
        }
        const BinaryMask mask = mask_from_json(j.at("mask"));
        if (image_size && std::make_pair(mask.height(), mask.width()) != *image_size) {
          throw FormatError("mask size differs from rgb size");
        }
        const double score = field<double>(j, "score");
        if (!(score >= 0.0 && score <= 1.0)) {
          throw FormatError("score outside [0,1]");
        }
      });
    }
  }
  return problems;
}

}  // namespace uois::fixtures
