#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "uois/backends.hpp"
#include "uois/datasets.hpp"
#include "uois/metrics.hpp"
#include "uois/pipeline.hpp"

// Command implementations behind the `uois` executable. Each returns the
// process exit code: 0 success, 1 scene or evaluation failures, 2 bad
// invocation.
namespace uois::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailures = 1;
inline constexpr int kExitUsage = 2;

struct BackendOptions {
  std::string kind = "replay";  // replay | bridge
  std::filesystem::path fixtures;
  std::string extractor;
  std::filesystem::path work_dir;
};

struct DatasetOptions {
  std::filesystem::path root;
  DatasetLayout layout = DatasetLayout::flat;
  std::optional<std::set<std::uint32_t>> excluded;  // layout default when unset

  std::set<std::uint32_t> excluded_labels() const;
};

std::unique_ptr<Backend> make_backend(const BackendOptions& options);

struct RunOptions {
  DatasetOptions dataset;
  BackendOptions backend;
  PipelineConfig config;
  std::filesystem::path out;
  int jobs = 1;
  bool keep_going = false;
};
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path results;
  DatasetOptions dataset;
  int tolerance = kDefaultBoundaryTolerance;
  std::filesystem::path report;  // defaults to <results>/report.json
  int jobs = 1;
};
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err,
             EvalReport* report = nullptr);

struct ExperimentOptions {
  DatasetOptions dataset;
  BackendOptions backend;
  PipelineConfig config;
  int tolerance = kDefaultBoundaryTolerance;
  int jobs = 1;
  std::filesystem::path report;  // optional machine-readable output
};

// 0, 0.05, ..., 1.
std::vector<double> default_tau_grid();

struct SweepOptions {
  ExperimentOptions experiment;
  std::vector<double> taus = default_tau_grid();
  std::filesystem::path table;  // tab-separated; stdout when empty
};
using SweepSeries = std::vector<std::pair<double, EvalReport>>;
int cmd_sweep_tau(const SweepOptions& options, std::ostream& out, std::ostream& err,
                  SweepSeries* series = nullptr);
std::string format_sweep_table(const SweepSeries& series);

int cmd_ablate_prompts(const ExperimentOptions& options, PromptMode mode, std::ostream& out,
                       std::ostream& err, EvalReport* report = nullptr);
int cmd_ablate_weighting(const ExperimentOptions& options, bool weighting, std::ostream& out,
                         std::ostream& err, EvalReport* report = nullptr);

// Accepts a single bundle directory or a root holding bundles at any depth.
int cmd_fixture_validate(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

struct VizOptions {
  std::filesystem::path results;
  DatasetOptions dataset;
  std::string scene;
  std::filesystem::path out;
  std::filesystem::path similarity_out;  // optional
};
int cmd_viz(const VizOptions& options, std::ostream& out, std::ostream& err);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace uois::cli
