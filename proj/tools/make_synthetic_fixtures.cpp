// Builds the synthetic tabletop scenes and their recorded model outputs used
// by the test suite.
//
//   make_synthetic_fixtures OUT_DIR [--seed N]...
//
// Writes OUT_DIR/scenes/<id>_{rgb,depth,label}.png (flat dataset layout) and
// OUT_DIR/fixtures/<id>/ replay bundles. Prompted responses are recorded for
// every size-filtered proposal under all three prompt modes and each seed.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "uois/backends.hpp"
#include "uois/depthcolor.hpp"
#include "uois/fixtures.hpp"
#include "uois/image_io.hpp"
#include "uois/pipeline.hpp"

namespace fs = std::filesystem;
using namespace uois;

namespace {

constexpr int kHeight = 120;
constexpr int kWidth = 160;
constexpr int kPatch = 8;
constexpr int kHeads = 6;        // four focused heads, two near-uniform ones
constexpr int kCleanHeads = 4;
constexpr int kHeadDim = 8;
constexpr int kWallRows = 40;    // wall above, table below

constexpr double kWallSimilarity = 0.85;
constexpr double kTableSimilarity = 0.62;

struct Ellipse {
  double cx, cy, rx, ry;
  double similarity;  // to the background patch, in the focused heads
  Rgb color;
  bool contains(int x, int y) const {
    double dx = (x + 0.5 - cx) / rx;
    double dy = (y + 0.5 - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

struct ExtraMask {
  enum Kind { union_of, shrunk, rect, whole } kind;
  std::vector<int> objects;  // union_of, shrunk
  BoundingBox box;           // rect
  double score;
};

struct SceneRecipe {
  std::string id;
  std::vector<Ellipse> objects;
  std::vector<ExtraMask> extras;
  int invalid_columns = 0;  // leftmost columns with zero depth
  bool split_wall = false;
};

std::vector<SceneRecipe> scene_recipes() {
  std::vector<SceneRecipe> recipes;
  recipes.push_back({"scene_a",
                   {{40, 70, 18, 14, -0.25, {200, 40, 40}},
                    {85, 78, 16, 20, -0.05, {40, 160, 60}},
                    {126, 66, 16, 13, 0.16, {40, 60, 200}}},
                   {{ExtraMask::union_of, {0, 1}, {}, 0.91},
                    {ExtraMask::shrunk, {2}, {}, 0.89},
                    {ExtraMask::rect, {}, {60, 104, 71, 111}, 0.88},
                    {ExtraMask::whole, {}, {}, 0.86}},
                   0,
                   false});
  recipes.push_back({"scene_b",
                   {{30, 62, 15, 15, -0.30, {220, 200, 30}},
                    {58, 80, 17, 13, 0.05, {160, 40, 180}},
                    {104, 90, 20, 16, -0.10, {30, 180, 180}},
                    {147, 60, 12, 16, 0.00, {240, 120, 20}}},
                   {{ExtraMask::union_of, {2, 3}, {}, 0.90},
                    {ExtraMask::rect, {}, {120, 108, 131, 116}, 0.87}},
                   4,
                   false});
  recipes.push_back({"scene_c",
                   {{60, 78, 26, 19, -0.15, {90, 90, 220}},
                    {125, 70, 15, 13, 0.07, {220, 90, 90}}},
                   {{ExtraMask::shrunk, {0}, {}, 0.92},
                    {ExtraMask::union_of, {0, 1}, {}, 0.85},
                    {ExtraMask::whole, {}, {}, 0.84}},
                   0,
                   true});
  return recipes;
}

struct Built {
  ColorImage rgb;
  DepthImage depth;
  LabelImage labels;
  std::vector<BinaryMask> gt;
};

std::uint16_t table_depth(int y) { return static_cast<std::uint16_t>(1000 + (kHeight - y) * 5); }

Built build_scene(const SceneRecipe& recipe) {
  Built b{ColorImage(kHeight, kWidth), DepthImage(kHeight, kWidth), LabelImage(kHeight, kWidth), {}};
  for (std::size_t k = 0; k < recipe.objects.size(); ++k) b.gt.emplace_back(kHeight, kWidth);
  for (int y = 0; y < kHeight; ++y) {
    for (int x = 0; x < kWidth; ++x) {
      if (y < kWallRows) {
        b.rgb.at(y, x) = {200, 200, 190};
        b.depth.at(y, x) = 2500;
      } else {
        std::uint8_t grain = static_cast<std::uint8_t>((x * 7 + y * 3) % 16);
        b.rgb.at(y, x) = {static_cast<std::uint8_t>(140 + grain), 100, 60};
        b.depth.at(y, x) = table_depth(y);
      }
      for (std::size_t k = 0; k < recipe.objects.size(); ++k) {
        const Ellipse& e = recipe.objects[k];
        if (!e.contains(x, y)) continue;
        double dx = (x + 0.5 - e.cx) / e.rx;
        double dy = (y + 0.5 - e.cy) / e.ry;
        double dome = 30.0 * (1.0 - (dx * dx + dy * dy));
        b.rgb.at(y, x) = e.color;
        b.depth.at(y, x) = static_cast<std::uint16_t>(table_depth(static_cast<int>(e.cy + e.ry)) - 60 - dome);
        b.labels.at(y, x) = static_cast<std::uint32_t>(k + 1);
        b.gt[k].set(y, x);
        break;
      }
      if (x < recipe.invalid_columns) b.depth.at(y, x) = 0;
    }
  }
  return b;
}

BinaryMask rect_mask(const BoundingBox& box) {
  BinaryMask m(kHeight, kWidth);
  m.fill_rect(box.x0, box.y0, box.x1, box.y1);
  return m;
}

ProposalSet build_proposals(const SceneRecipe& recipe, const Built& b) {
  ProposalSet set(ProposalSource::generator);
  BinaryMask wall(kHeight, kWidth), table(kHeight, kWidth), all(kHeight, kWidth);
  wall.fill_rect(0, 0, kWidth - 1, kWallRows - 1);
  table.fill_rect(0, kWallRows, kWidth - 1, kHeight - 1);
  all.fill_rect(0, 0, kWidth - 1, kHeight - 1);
  if (recipe.split_wall) {
    set.add({rect_mask({0, 0, kWidth / 2 - 1, kWallRows - 1}), 0.93});
    set.add({rect_mask({kWidth / 2, 0, kWidth - 1, kWallRows - 1}), 0.92});
  } else {
    set.add({wall, 0.94});
  }
  set.add({table, 0.95});
  // Coarse object proposals: the bounding rectangle of each ellipse.
  std::vector<BinaryMask> coarse;
  for (std::size_t k = 0; k < b.gt.size(); ++k) {
    coarse.push_back(rect_mask(*b.gt[k].bbox()));
    set.add({coarse.back(), 0.97 - 0.01 * static_cast<double>(k)});
  }
  for (const auto& extra : recipe.extras) {
    BinaryMask m(kHeight, kWidth);
    switch (extra.kind) {
      case ExtraMask::union_of:
        for (int k : extra.objects) m |= coarse[k];
        break;
      case ExtraMask::shrunk: {
        BoundingBox box = *coarse[extra.objects[0]].bbox();
        m = rect_mask({box.x0 + 1, box.y0 + 1, box.x1 - 1, box.y1 - 1});
        break;
      }
      case ExtraMask::rect: m = rect_mask(extra.box); break;
      case ExtraMask::whole: m = all; break;
    }
    set.add({m, extra.score});
  }
  return set;
}

struct PatchMix {
  double wall = 0;
  double table = 0;
  std::vector<double> objects;
};

std::vector<PatchMix> patch_mix(const SceneRecipe& recipe, const Built& b, PatchGrid grid) {
  std::vector<PatchMix> mix(grid.patches());
  for (auto& m : mix) m.objects.assign(recipe.objects.size(), 0.0);
  const double share = 1.0 / (kPatch * kPatch);
  for (int y = 0; y < kHeight; ++y) {
    for (int x = 0; x < kWidth; ++x) {
      PatchMix& m = mix[static_cast<std::size_t>(y / kPatch) * grid.cols + x / kPatch];
      std::uint32_t label = b.labels.at(y, x);
      if (label > 0) m.objects[label - 1] += share;
      else if (y < kWallRows) m.wall += share;
      else m.table += share;
    }
  }
  return mix;
}

DescriptorOutput build_descriptors(const SceneRecipe& recipe, const Built& b, std::uint64_t seed) {
  const PatchGrid grid{kHeight / kPatch, kWidth / kPatch};
  const std::size_t n = grid.patches();
  const auto mix = patch_mix(recipe, b, grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  std::normal_distribution<double> normal;

  std::vector<double> attn(kHeads * n);
  for (int h = 0; h < kHeads; ++h) {
    for (std::size_t p = 0; p < n; ++p) {
      double a;
      if (h < kCleanHeads) {
        a = 1e-4;
        for (std::size_t k = 0; k < recipe.objects.size(); ++k) {
          bool focus = k % kCleanHeads == static_cast<std::size_t>(h) % recipe.objects.size();
          a += mix[p].objects[k] * (focus ? 1.0 : 0.1);
        }
      } else {
        a = 1.0 + 0.1 * (jitter(rng) + 0.02) / 0.04;
      }
      attn[h * n + p] = a;
    }
    attn[h * n] = 1e-6;  // the top-left wall patch is the least attended everywhere
  }

  std::vector<double> feat(kHeads * n * kHeadDim, 0.0);
  for (int h = 0; h < kHeads; ++h) {
    for (std::size_t p = 0; p < n; ++p) {
      double* f = &feat[(h * n + p) * kHeadDim];
      double s;
      if (p == 0) {
        s = 1.0;
      } else if (h < kCleanHeads) {
        s = mix[p].wall * kWallSimilarity + mix[p].table * kTableSimilarity;
        for (std::size_t k = 0; k < recipe.objects.size(); ++k) s += mix[p].objects[k] * recipe.objects[k].similarity;
        s += jitter(rng);
      } else {
        s = 0.9;
      }
      // Unit vector with cosine s to the first axis.
      double o[kHeadDim - 1];
      double norm = 0;
      for (double& v : o) {
        v = normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      const double rest = std::sqrt(std::max(0.0, 1.0 - s * s));
      f[0] = s;
      for (int d = 1; d < kHeadDim; ++d) f[d] = rest * o[d - 1] / norm;
    }
  }
  return {AttentionStack(kHeads, grid, std::move(attn)), FeatureStack(kHeads, grid, kHeadDim, std::move(feat))};
}

// Stand-in for the promptable segmenter. Prompts that land inside one object
// return that object; a box returns the object grown by a pixel inside the
// box; anything touching no object returns the prompted mask unchanged.
ScoredMask respond(const BinaryMask& prompted_mask, const PromptRequest& request, const Built& b) {
  int target = -1;
  std::int64_t best = 0;
  for (std::size_t k = 0; k < b.gt.size(); ++k) {
    std::int64_t overlap = intersection_area(prompted_mask, b.gt[k]);
    if (overlap > best) {
      best = overlap;
      target = static_cast<int>(k);
    }
  }
  if (target < 0) return {prompted_mask, 0.80};
  const BinaryMask& object = b.gt[target];
  const double score = 0.97 - 0.01 * target;
  if (request.box) {
    BinaryMask grown = object;
    object.for_each_pixel([&](int y, int x) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int yy = y + dy, xx = x + dx;
          if (yy >= request.box->y0 && yy <= request.box->y1 && xx >= request.box->x0 && xx <= request.box->x1)
            grown.set(yy, xx);
        }
    });
    return {grown, score - 0.04};
  }
  for (const auto& p : request.points)
    if (!object.test(p.y, p.x)) return {prompted_mask, score - 0.10};
  return {object, score};
}

std::uint64_t scene_seed(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic_fixtures OUT_DIR [--seed N]...\n";
    return 2;
  }
  const fs::path out = argv[1];
  std::vector<std::uint64_t> seeds;
  for (int i = 2; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--seed" && i + 1 < argc) {
      seeds.push_back(std::stoull(argv[++i]));
    } else {
      std::cerr << "unknown argument: " << arg << "\n";
      return 2;
    }
  }
  if (seeds.empty()) seeds.push_back(0);

  try {
    const fs::path scenes_dir = out / "scenes";
    const fs::path fixture_root = out / "fixtures";
    fs::create_directories(scenes_dir);
    const PipelineConfig defaults;
    for (const auto& recipe : scene_recipes()) {
      Built b = build_scene(recipe);
      write_color_png(scenes_dir / (recipe.id + "_rgb.png"), b.rgb);
      write_depth_png(scenes_dir / (recipe.id + "_depth.png"), b.depth);
      write_label_png(scenes_dir / (recipe.id + "_label.png"), b.labels);

      const fs::path bundle = fixture_root / recipe.id;
      fs::create_directories(bundle / fixtures::kPromptedDir);
      ColorImage colorized = colorize_depth(b.depth);
      write_color_png(bundle / fixtures::kRgbFile, colorized);
      write_depth_png(bundle / fixtures::kDepthFile, b.depth);
      fixtures::write_proposal_file(bundle / fixtures::kProposalsFile, build_proposals(recipe, b),
                                    defaults.generator);
      DescriptorOutput d = build_descriptors(recipe, b, scene_seed(recipe.id));
      fixtures::write_attention(bundle / fixtures::kAttentionFile, d.attention);
      fixtures::write_features(bundle / fixtures::kFeaturesFile, d.features);

      ReplayBackend replay(fixture_root);
      ScoredScene scored = prepare_scene(recipe.id, b.rgb, b.depth, defaults, replay);
      std::map<std::string, int> recorded;
      for (std::uint64_t seed : seeds) {
        for (PromptMode mode : {PromptMode::cluster, PromptMode::random, PromptMode::boxes}) {
          PipelineConfig config = defaults;
          config.seed = seed;
          config.prompt_mode = mode;
          for (const auto& m : scored.sized) {
            PromptRequest request = make_prompt_request(m.mask, config);
            std::string hash = prompt_hash(request);
            if (recorded.count(hash)) continue;
            recorded[hash] = 1;
            fixtures::write_prompted_file(bundle / fixtures::kPromptedDir / (hash + ".json"), request,
                                          respond(m.mask, request, b));
          }
        }
      }
      for (double w : scored.weights.weights) std::printf(" %.3f", w);
      std::printf("\n");
      std::printf("%s: %zu proposals, %zu after filtering, %zu prompted records\n", recipe.id.c_str(),
                  scored.raw.size(), scored.sized.size(), recorded.size());
      for (std::size_t i = 0; i < scored.sized.size(); ++i)
        std::printf("  mask %zu area %lld score %.4f\n", i, static_cast<long long>(scored.sized[i].mask.area()),
                    scored.background_scores[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
