#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uois/attnfilter.hpp"
#include "uois/backends.hpp"
#include "uois/maskset.hpp"
#include "uois/rle.hpp"

// On-disk formats shared with the extractor. FORMATS.md is the long-form
// description; this header is the reference implementation.
namespace uois::fixtures {

inline constexpr const char* kRgbFile = "rgb.png";
inline constexpr const char* kDepthFile = "depth.png";
inline constexpr const char* kProposalsFile = "proposals.json";
inline constexpr const char* kAttentionFile = "attn.bin";
inline constexpr const char* kFeaturesFile = "feat.bin";
inline constexpr const char* kPromptedDir = "prompted";

// {"size": [H, W], "runs": [start0, length0, start1, length1, ...]}
nlohmann::json rle_to_json(const RleMask& rle);
RleMask rle_from_json(const nlohmann::json& j);

nlohmann::json mask_to_json(const BinaryMask& mask);
BinaryMask mask_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const GeneratorParams& params);
GeneratorParams params_from_json(const nlohmann::json& j);

nlohmann::json proposals_to_json(const ProposalSet& set);
ProposalSet proposals_from_json(const nlohmann::json& j);

struct ProposalFile {
  ProposalSet proposals;
  GeneratorParams params;
};

// proposals.json:
// {"format": "uois-proposals/1", "params": {...}, "height": H, "width": W,
//  "masks": [{"rle": {...}, "score": s, "area": n}, ...]}
void write_proposal_file(const std::filesystem::path& path, const ProposalSet& set,
                         const GeneratorParams& params);
ProposalFile read_proposal_file(const std::filesystem::path& path);

// Binary tensor file: one JSON header line terminated by '\n', then the raw
// little-endian float32 payload in row-major order. Header keys:
//   "dtype": "float32", "shape": [...], "crc32": "<8 hex digits of payload>",
//   "grid": [rows, cols], plus free-form extras.
struct TensorFile {
  nlohmann::json header;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

void write_tensor_file(const std::filesystem::path& path, const std::vector<std::int64_t>& shape,
                       std::span<const float> data, nlohmann::json extra_header = nlohmann::json::object());
TensorFile read_tensor_file(const std::filesystem::path& path);

// attn.bin: shape [N_h, N_p]. feat.bin: shape [N_h, N_p, d] with header
// "feature_source" (e.g. "keys").
void write_attention(const std::filesystem::path& path, const AttentionStack& attention);
AttentionStack read_attention(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureStack& features,
                    const std::string& feature_source = "keys");
FeatureStack read_features(const std::filesystem::path& path);

// prompted/<hash>.json: {"format": "uois-prompted/1", "key": canonical key,
//  "mask": {rle}, "score": s}
void write_prompted_file(const std::filesystem::path& path, const PromptRequest& request,
                         const ScoredMask& result);
ScoredMask read_prompted_file(const std::filesystem::path& path, const PromptRequest& request);

nlohmann::json prompt_request_to_json(const PromptRequest& request);
PromptRequest prompt_request_from_json(const nlohmann::json& j);

// Checks one scene bundle: files present, headers and payloads consistent,
// checksums, RLE decodability, matching grids across files, prompted keys
// matching their file names. Returns human-readable problems; empty means valid.
std::vector<std::string> validate_bundle(const std::filesystem::path& scene_dir);

}  // namespace uois::fixtures
