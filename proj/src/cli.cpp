#include "uois/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "uois/depthcolor.hpp"
#include "uois/error.hpp"
#include "uois/fixtures.hpp"
#include "uois/fsutil.hpp"
#include "uois/image_io.hpp"
#include "uois/results.hpp"

namespace fs = std::filesystem;

namespace uois::cli {

std::set<std::uint32_t> DatasetOptions::excluded_labels() const {
  return excluded ? *excluded : default_excluded_labels(layout);
}

std::unique_ptr<Backend> make_backend(const BackendOptions& options) {
  if (options.kind == "replay") {
    if (options.fixtures.empty()) throw InvalidInput("replay backend needs --fixtures");
    if (!fs::is_directory(options.fixtures))
      throw InvalidInput("fixture root is not a directory: " + options.fixtures.string());
    return std::make_unique<ReplayBackend>(options.fixtures);
  }
  if (options.kind == "bridge") {
    if (options.extractor.empty()) throw InvalidInput("bridge backend needs --extractor");
    fs::path work = options.work_dir.empty() ? fs::temp_directory_path() / "uois-bridge"
                                             : options.work_dir;
    return std::make_unique<BridgeBackend>(options.extractor, work);
  }
  throw InvalidInput("unknown backend '" + options.kind + "'");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

DatasetIndex open_dataset(const DatasetOptions& options) {
  if (options.root.empty()) throw InvalidInput("missing --dataset");
  return index_dataset(options.root, options.layout);
}

void report_errors(const std::vector<SceneError>& errors, std::ostream& err) {
  for (const auto& e : errors) {
    const std::string prefix = "scene '" + e.id + "': ";
    std::string_view message = e.message;
    if (message.substr(0, prefix.size()) == prefix) message.remove_prefix(prefix.size());
    err << "error: " << prefix << message << "\n";
  }
}

struct SceneOutcome {
  bool ok = false;
  std::string error;
};

// Runs `work` on every scene in the index and collects failures in index
// order so that the log does not depend on thread scheduling.
std::vector<SceneError> run_scenes(const DatasetIndex& index, const DatasetOptions& dataset,
                                   int jobs,
                                   const std::function<void(std::size_t, const Scene&)>& work) {
  auto excluded = dataset.excluded_labels();
  std::vector<SceneOutcome> outcomes(index.scenes.size());
  parallel_for(index.scenes.size(), jobs, [&](std::size_t i) {
    try {
      Scene scene = load_scene(index.scenes[i], excluded);
      work(i, scene);
      outcomes[i].ok = true;
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });
  std::vector<SceneError> errors = index.errors;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (!outcomes[i].ok) errors.push_back({index.scenes[i].id, outcomes[i].error});
  return errors;
}

void write_report(const fs::path& path, const EvalReport& report, const PipelineConfig* config) {
  if (path.empty()) return;
  nlohmann::json j = report_to_json(report);
  if (config) {
    j["seed"] = config->seed;
    j["config"] = format_config(*config);
  }
  write_file_atomic(path, j.dump(1) + "\n");
}

// Runs the pipeline in memory over the dataset and scores it.
EvalReport evaluate_pipeline(const ExperimentOptions& options, const PipelineConfig& config,
                             std::vector<SceneError>& errors) {
  config.validate();
  auto backend = make_backend(options.backend);
  DatasetIndex index = open_dataset(options.dataset);
  std::vector<std::optional<SceneMetrics>> metrics(index.scenes.size());
  errors = run_scenes(index, options.dataset, options.jobs, [&](std::size_t i, const Scene& s) {
    SegmentationResult result = run_scene(s.id, s.rgb, s.depth, config, *backend);
    metrics[i] = evaluate_scene(s.id, result.final_masks, s.gt, options.tolerance);
  });
  std::vector<SceneMetrics> done;
  for (auto& m : metrics)
    if (m) done.push_back(std::move(*m));
  return aggregate(std::move(done));
}

int finish_experiment(const ExperimentOptions& options, const PipelineConfig& config,
                      const char* label, std::ostream& out, std::ostream& err,
                      EvalReport* report_out) {
  std::vector<SceneError> errors;
  EvalReport report = evaluate_pipeline(options, config, errors);
  report_errors(errors, err);
  out << label << "\n" << format_report_table(report);
  write_report(options.report, report, &config);
  if (report_out) *report_out = report;
  return errors.empty() ? kExitOk : kExitFailures;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  options.config.validate();
  if (options.out.empty()) throw InvalidInput("missing --out");
  auto backend = make_backend(options.backend);
  DatasetIndex index = open_dataset(options.dataset);
  std::vector<std::size_t> counts(index.scenes.size(), 0);
  std::vector<std::vector<std::string>> warnings(index.scenes.size());
  auto errors = run_scenes(index, options.dataset, options.jobs, [&](std::size_t i, const Scene& s) {
    SegmentationResult result = run_scene(s.id, s.rgb, s.depth, options.config, *backend);
    write_result(options.out, result, options.config);
    counts[i] = result.final_masks.size();
    warnings[i] = result.warnings;
  });
  std::set<std::string> failed;
  for (const auto& e : errors) failed.insert(e.id);
  for (std::size_t i = 0; i < index.scenes.size(); ++i) {
    if (failed.count(index.scenes[i].id)) continue;
    for (const auto& w : warnings[i])
      err << "warning: scene '" << index.scenes[i].id << "': " << w << "\n";
    out << index.scenes[i].id << "\t" << counts[i] << " objects\n";
  }
  report_errors(errors, err);
  out << (index.scenes.size() - (errors.size() - index.errors.size())) << " of "
      << index.scenes.size() + index.errors.size() << " scenes segmented\n";
  if (errors.empty() || options.keep_going) return kExitOk;
  return kExitFailures;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err,
             EvalReport* report_out) {
  if (options.results.empty()) throw InvalidInput("missing --results");
  if (options.tolerance < 0) throw InvalidInput("tolerance must be >= 0");
  DatasetIndex index = open_dataset(options.dataset);
  std::vector<std::optional<SceneMetrics>> metrics(index.scenes.size());
  auto errors = run_scenes(index, options.dataset, options.jobs, [&](std::size_t i, const Scene& s) {
    StoredResult stored = read_result(options.results, s.id);
    metrics[i] = evaluate_scene(s.id, stored.final_masks, s.gt, options.tolerance);
  });
  std::vector<SceneMetrics> done;
  for (auto& m : metrics)
    if (m) done.push_back(std::move(*m));
  EvalReport report = aggregate(std::move(done));
  report_errors(errors, err);
  out << format_report_table(report);
  fs::path path = options.report.empty() ? options.results / "report.json" : options.report;
  write_report(path, report, nullptr);
  if (report_out) *report_out = report;
  return errors.empty() ? kExitOk : kExitFailures;
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (int i = 0; i <= 20; ++i) taus.push_back(i / 20.0);
  return taus;
}

std::string format_sweep_table(const SweepSeries& series) {
  std::ostringstream s;
  s << "tau\toverlap_p\toverlap_r\toverlap_f\tboundary_p\tboundary_r\tboundary_f\tf_at_75"
       "\tpredictions\n";
  for (const auto& [tau, r] : series) {
    s << format_number(tau) << "\t" << format_number(r.overlap.precision) << "\t"
      << format_number(r.overlap.recall) << "\t" << format_number(r.overlap.f) << "\t"
      << format_number(r.boundary.precision) << "\t" << format_number(r.boundary.recall) << "\t"
      << format_number(r.boundary.f) << "\t" << format_number(r.f_at_75) << "\t"
      << r.predictions << "\n";
  }
  return s.str();
}

int cmd_sweep_tau(const SweepOptions& options, std::ostream& out, std::ostream& err,
                  SweepSeries* series_out) {
  const ExperimentOptions& ex = options.experiment;
  ex.config.validate();
  if (options.taus.empty()) throw InvalidInput("empty tau list");
  for (double tau : options.taus) {
    PipelineConfig probe = ex.config;
    probe.tau = tau;
    probe.validate();
  }
  auto backend = make_backend(ex.backend);
  DatasetIndex index = open_dataset(ex.dataset);
  // metrics[t][scene]
  std::vector<std::vector<std::optional<SceneMetrics>>> metrics(
      options.taus.size(), std::vector<std::optional<SceneMetrics>>(index.scenes.size()));
  auto errors = run_scenes(index, ex.dataset, ex.jobs, [&](std::size_t i, const Scene& s) {
    ScoredScene scored = prepare_scene(s.id, s.rgb, s.depth, ex.config, *backend);
    std::vector<SceneMetrics> row;
    for (double tau : options.taus) {
      PipelineConfig config = ex.config;
      config.tau = tau;
      SegmentationResult result = finish_scene(scored, config, *backend);
      row.push_back(evaluate_scene(s.id, result.final_masks, s.gt, ex.tolerance));
    }
    for (std::size_t t = 0; t < row.size(); ++t) metrics[t][i] = std::move(row[t]);
  });
  SweepSeries series;
  for (std::size_t t = 0; t < options.taus.size(); ++t) {
    std::vector<SceneMetrics> done;
    for (auto& m : metrics[t])
      if (m) done.push_back(std::move(*m));
    series.emplace_back(options.taus[t], aggregate(std::move(done)));
  }
  report_errors(errors, err);
  std::string table = format_sweep_table(series);
  if (options.table.empty()) {
    out << table;
  } else {
    write_file_atomic(options.table, table);
    out << "wrote " << options.table.string() << "\n";
  }
  if (!ex.report.empty()) {
    nlohmann::json j = {{"seed", ex.config.seed},
                        {"config", format_config(ex.config)},
                        {"sweep", nlohmann::json::array()}};
    for (const auto& [tau, r] : series) j["sweep"].push_back({{"tau", tau}, {"report", report_to_json(r)}});
    write_file_atomic(ex.report, j.dump(1) + "\n");
  }
  if (series_out) *series_out = std::move(series);
  return errors.empty() ? kExitOk : kExitFailures;
}

int cmd_ablate_prompts(const ExperimentOptions& options, PromptMode mode, std::ostream& out,
                       std::ostream& err, EvalReport* report) {
  PipelineConfig config = options.config;
  config.refine = true;
  config.prompt_mode = mode;
  std::string label = "prompts: " + std::string(to_string(mode));
  return finish_experiment(options, config, label.c_str(), out, err, report);
}

int cmd_ablate_weighting(const ExperimentOptions& options, bool weighting, std::ostream& out,
                         std::ostream& err, EvalReport* report) {
  PipelineConfig config = options.config;
  config.weighting = weighting;
  return finish_experiment(options, config, weighting ? "weighting: on" : "weighting: off", out,
                           err, report);
}

int cmd_fixture_validate(const fs::path& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
  std::vector<fs::path> bundles;
  if (fs::exists(dir / fixtures::kProposalsFile) || fs::exists(dir / fixtures::kAttentionFile)) {
    bundles.push_back(dir);
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().filename() == fixtures::kProposalsFile)
        bundles.push_back(entry.path().parent_path());
    }
    std::sort(bundles.begin(), bundles.end());
  }
  if (bundles.empty()) {
    err << "error: no fixture bundles under " << dir.string() << "\n";
    return kExitFailures;
  }
  std::size_t bad = 0;
  for (const auto& b : bundles) {
    auto problems = fixtures::validate_bundle(b);
    std::string name = b == dir ? b.filename().string() : fs::relative(b, dir).generic_string();
    if (problems.empty()) {
      out << "ok\t" << name << "\n";
    } else {
      ++bad;
      for (const auto& p : problems) err << "invalid\t" << name << ": " << p << "\n";
    }
  }
  out << (bundles.size() - bad) << " of " << bundles.size() << " bundles valid\n";
  return bad == 0 ? kExitOk : kExitFailures;
}

namespace {

Rgb palette(std::size_t i) {
  static const Rgb colors[] = {{230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
                               {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230},
                               {210, 245, 60}, {250, 190, 212}, {0, 128, 128}, {170, 110, 40}};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

std::uint8_t blend(std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>((a + b + 1) / 2);
}

void draw_cross(ColorImage& image, int x, int y, Rgb color) {
  for (int d = -3; d <= 3; ++d) {
    for (auto [px, py] : {std::pair{x + d, y}, std::pair{x, y + d}}) {
      if (px >= 0 && py >= 0 && px < image.width() && py < image.height()) image.at(py, px) = color;
    }
  }
}

}  // namespace

int cmd_viz(const VizOptions& options, std::ostream& out, std::ostream&) {
  if (options.scene.empty()) throw InvalidInput("missing --scene");
  if (options.out.empty()) throw InvalidInput("missing --out");
  DatasetIndex index = open_dataset(options.dataset);
  auto it = std::find_if(index.scenes.begin(), index.scenes.end(),
                         [&](const SceneFiles& f) { return f.id == options.scene; });
  if (it == index.scenes.end()) throw InvalidInput("scene not in dataset: " + options.scene);
  ColorImage rgb = read_color_png(it->rgb);
  StoredResult stored = read_result(options.results, options.scene);
  if (!stored.final_masks.empty() &&
      !rgb.same_shape(stored.final_masks.height(), stored.final_masks.width()))
    throw InvalidInput("result size does not match image");

  ColorImage overlay = rgb;
  for (std::size_t i = 0; i < stored.final_masks.size(); ++i) {
    Rgb c = palette(i);
    const BinaryMask& m = stored.final_masks[i].mask;
    m.for_each_pixel([&](int y, int x) {
      Rgb& p = overlay.at(y, x);
      p = {blend(p.r, c.r), blend(p.g, c.g), blend(p.b, c.b)};
    });
    mask_boundary(m).for_each_pixel([&](int y, int x) { overlay.at(y, x) = c; });
  }
  for (const auto& points : stored.prompts)
    for (const auto& p : points) draw_cross(overlay, p.x, p.y, {255, 255, 255});
  write_color_png(options.out, overlay);
  out << "wrote " << options.out.string() << "\n";

  if (!options.similarity_out.empty()) {
    const SimilarityMap& sim = stored.similarity;
    const PatchGrid grid = sim.grid();
    if (grid.rows <= 0 || grid.cols <= 0) throw InvalidInput("result has no similarity map");
    ColorImage heat(rgb.height(), rgb.width());
    const auto& lut = viridis_lut();
    for (int y = 0; y < rgb.height(); ++y) {
      for (int x = 0; x < rgb.width(); ++x) {
        int row = static_cast<int>(static_cast<long>(y) * grid.rows / rgb.height());
        int col = static_cast<int>(static_cast<long>(x) * grid.cols / rgb.width());
        double v = sim.at(row, col);
        heat.at(y, x) = lut[lut_index(std::clamp((v + 1.0) / 2.0, 0.0, 1.0))];
      }
    }
    write_color_png(options.similarity_out, heat);
    out << "wrote " << options.similarity_out.string() << "\n";
  }
  return kExitOk;
}

}  // namespace uois::cli
