#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "uois/image.hpp"
#include "uois/maskset.hpp"

namespace uois {

// Supported directory layouts:
//   ocid  any directory holding rgb/, depth/ and label/ siblings; scene id is
//         the path of the rgb file relative to the root, without extension.
//         Default excluded labels {0, 1} (background, table).
//   osd   root/image_color/*.png, root/disparity/*.png (16-bit depth),
//         root/annotation/*.png. Default excluded labels {0}.
//   flat  root/<id>_rgb.png, root/<id>_depth.png, root/<id>_label.png.
//         Default excluded labels {0}.
enum class DatasetLayout { ocid, osd, flat };

std::string_view to_string(DatasetLayout layout);
DatasetLayout dataset_layout_from_string(std::string_view text);
std::set<std::uint32_t> default_excluded_labels(DatasetLayout layout);

struct SceneFiles {
  std::string id;
  std::filesystem::path rgb;
  std::filesystem::path depth;
  std::filesystem::path label;
};

struct SceneError {
  std::string id;
  std::string message;
};

struct DatasetIndex {
  std::vector<SceneFiles> scenes;  // sorted by id
  std::vector<SceneError> errors;  // listed rgb files missing depth or label
};

struct Scene {
  std::string id;
  ColorImage rgb;
  DepthImage depth;
  ProposalSet gt;  // one mask per non-excluded label id, ascending id
};

// Throws InvalidInput when the root does not exist.
DatasetIndex index_dataset(const std::filesystem::path& root, DatasetLayout layout);

// One mask per distinct label id not in `excluded`, ascending by id.
ProposalSet decode_labels(const LabelImage& labels, const std::set<std::uint32_t>& excluded);
// Inverse of decode_labels: mask i gets id i + 1, background 0.
LabelImage encode_labels(const ProposalSet& masks);

// Reads and validates one scene. Throws on unreadable files or mismatched
// sizes.
Scene load_scene(const SceneFiles& files, const std::set<std::uint32_t>& excluded);

// Indexes the dataset and loads scenes one at a time in id order. Scenes that
// fail to load are skipped and their errors appended to the returned list
// together with indexing errors.
std::vector<SceneError> for_each_scene(const std::filesystem::path& root, DatasetLayout layout,
                                       const std::set<std::uint32_t>& excluded,
                                       const std::function<void(const Scene&)>& visit);

}  // namespace uois
