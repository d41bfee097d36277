#include "uois/datasets.hpp"

#include <algorithm>
#include <map>

#include "uois/error.hpp"
#include "uois/image_io.hpp"

namespace uois {

namespace fs = std::filesystem;

std::string_view to_string(DatasetLayout layout) {
  switch (layout) {
    case DatasetLayout::ocid: return "ocid";
    case DatasetLayout::osd: return "osd";
    case DatasetLayout::flat: return "flat";
  }
  return "flat";
}

DatasetLayout dataset_layout_from_string(std::string_view text) {
  if (text == "ocid") return DatasetLayout::ocid;
  if (text == "osd") return DatasetLayout::osd;
  if (text == "flat") return DatasetLayout::flat;
  throw InvalidInput("unknown dataset layout '" + std::string(text) + "' (ocid|osd|flat)");
}

std::set<std::uint32_t> default_excluded_labels(DatasetLayout layout) {
  if (layout == DatasetLayout::ocid) return {0, 1};
  return {0};
}

namespace {

bool is_png(const fs::path& p) { return p.extension() == ".png"; }

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_png(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Adds a scene whose rgb file exists, recording an error when a partner file
// is missing.
void add_scene(DatasetIndex& index, SceneFiles files) {
  std::string missing;
  if (!fs::is_regular_file(files.depth)) missing = "depth " + files.depth.string();
  else if (!fs::is_regular_file(files.label)) missing = "label " + files.label.string();
  if (!missing.empty()) {
    index.errors.push_back({files.id, "missing " + missing});
    return;
  }
  index.scenes.push_back(std::move(files));
}

void index_ocid(const fs::path& root, DatasetIndex& index) {
  std::vector<fs::path> rgb_dirs;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename() == "rgb") rgb_dirs.push_back(entry.path());
  }
  std::sort(rgb_dirs.begin(), rgb_dirs.end());
  for (const fs::path& rgb_dir : rgb_dirs) {
    const fs::path seq = rgb_dir.parent_path();
    for (const fs::path& rgb : sorted_pngs(rgb_dir)) {
      const fs::path relative = fs::relative(rgb, root);
      std::string id = relative.parent_path().parent_path().generic_string();
      id += (id.empty() ? "" : "/") + rgb.stem().string();
      add_scene(index, {id, rgb, seq / "depth" / rgb.filename(), seq / "label" / rgb.filename()});
    }
  }
}

void index_osd(const fs::path& root, DatasetIndex& index) {
  for (const fs::path& rgb : sorted_pngs(root / "image_color")) {
    add_scene(index, {rgb.stem().string(), rgb, root / "disparity" / rgb.filename(),
                      root / "annotation" / rgb.filename()});
  }
}

void index_flat(const fs::path& root, DatasetIndex& index) {
  const std::string suffix = "_rgb.png";
  for (const fs::path& file : sorted_pngs(root)) {
    const std::string name = file.filename().string();
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string id = name.substr(0, name.size() - suffix.size());
    add_scene(index, {id, file, root / (id + "_depth.png"), root / (id + "_label.png")});
  }
}

}  // namespace

DatasetIndex index_dataset(const fs::path& root, DatasetLayout layout) {
  if (!fs::is_directory(root)) {
    throw InvalidInput("dataset root does not exist: " + root.string());
  }
  DatasetIndex index;
  switch (layout) {
    case DatasetLayout::ocid: index_ocid(root, index); break;
    case DatasetLayout::osd: index_osd(root, index); break;
    case DatasetLayout::flat: index_flat(root, index); break;
  }
  std::sort(index.scenes.begin(), index.scenes.end(),
            [](const SceneFiles& a, const SceneFiles& b) { return a.id < b.id; });
  std::sort(index.errors.begin(), index.errors.end(),
            [](const SceneError& a, const SceneError& b) { return a.id < b.id; });
  return index;
}

ProposalSet decode_labels(const LabelImage& labels, const std::set<std::uint32_t>& excluded) {
  std::map<std::uint32_t, BinaryMask> masks;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const std::uint32_t id = labels.at(y, x);
      if (excluded.count(id) != 0) continue;
      auto it = masks.find(id);
      if (it == masks.end()) it = masks.emplace(id, BinaryMask(labels.height(), labels.width())).first;
      it->second.set(y, x);
    }
  }
  ProposalSet set;
  for (auto& [id, mask] : masks) set.add(std::move(mask), 1.0);
  return set;
}

LabelImage encode_labels(const ProposalSet& masks) {
  if (masks.empty()) {
    throw InvalidInput("cannot encode an empty mask set without a grid");
  }
  LabelImage labels(masks.height(), masks.width(), 0);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    masks[i].mask.for_each_pixel([&](int y, int x) {
      if (labels.at(y, x) != 0) throw InvalidInput("masks overlap; labels need disjoint masks");
      labels.at(y, x) = static_cast<std::uint32_t>(i + 1);
    });
  }
  return labels;
}

Scene load_scene(const SceneFiles& files, const std::set<std::uint32_t>& excluded) {
  Scene scene;
  scene.id = files.id;
  scene.rgb = read_color_png(files.rgb);
  scene.depth = read_depth_png(files.depth);
  const LabelImage labels = read_label_png(files.label);
  if (!scene.rgb.same_shape(scene.depth.height(), scene.depth.width()) ||
      !scene.rgb.same_shape(labels.height(), labels.width())) {
    throw InvalidInput("scene '" + files.id + "': rgb, depth and label sizes differ");
  }
  scene.gt = decode_labels(labels, excluded);
  return scene;
}

std::vector<SceneError> for_each_scene(const fs::path& root, DatasetLayout layout,
                                       const std::set<std::uint32_t>& excluded,
                                       const std::function<void(const Scene&)>& visit) {
  DatasetIndex index = index_dataset(root, layout);
  std::vector<SceneError> errors = std::move(index.errors);
  for (const SceneFiles& files : index.scenes) {
    Scene scene;
    try {
      scene = load_scene(files, excluded);
    } catch (const std::exception& e) {
      errors.push_back({files.id, e.what()});
      continue;
    }
    visit(scene);
  }
  return errors;
}

}  // namespace uois
