#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uois/cli.hpp"
#include "uois/error.hpp"

using namespace uois;
using namespace uois::cli;

namespace {

struct Common {
  std::string dataset;
  std::string layout = "flat";
  std::string exclude;
  std::string backend = "replay";
  std::string fixtures;
  std::string extractor;
  std::string work_dir;
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  int tolerance = kDefaultBoundaryTolerance;
  std::string report;
};

std::set<std::uint32_t> parse_label_list(const std::string& text) {
  std::set<std::uint32_t> labels;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidInput("bad label id '" + item + "'");
    labels.insert(static_cast<std::uint32_t>(v));
  }
  return labels;
}

void add_dataset_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--dataset", c.dataset, "Dataset root")->required();
  cmd->add_option("--layout", c.layout, "ocid | osd | flat")->capture_default_str();
  cmd->add_option("--exclude-labels", c.exclude,
                  "Comma-separated label ids to ignore (default depends on layout)");
}

void add_backend_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--backend", c.backend, "replay | bridge")->capture_default_str();
  cmd->add_option("--fixtures", c.fixtures, "Fixture root for the replay backend");
  cmd->add_option("--extractor", c.extractor, "Extractor command for the bridge backend");
  cmd->add_option("--work-dir", c.work_dir, "Scratch directory for the bridge backend");
}

void add_pipeline_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config file (key = value)");
  cmd->add_option("--seed", c.seed, "Random seed, overrides the config");
  cmd->add_option("--jobs,-j", c.jobs, "Parallel scenes")->capture_default_str();
}

DatasetOptions dataset_options(const Common& c) {
  DatasetOptions d;
  d.root = c.dataset;
  d.layout = dataset_layout_from_string(c.layout);
  if (!c.exclude.empty()) d.excluded = parse_label_list(c.exclude);
  return d;
}

BackendOptions backend_options(const Common& c) {
  return {c.backend, c.fixtures, c.extractor, c.work_dir};
}

PipelineConfig pipeline_config(const Common& c) {
  PipelineConfig config = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.seed) config.seed = *c.seed;
  return config;
}

ExperimentOptions experiment_options(const Common& c) {
  ExperimentOptions e;
  e.dataset = dataset_options(c);
  e.backend = backend_options(c);
  e.config = pipeline_config(c);
  e.tolerance = c.tolerance;
  e.jobs = c.jobs;
  e.report = c.report;
  return e;
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidInput("bad tau '" + item + "'");
    taus.push_back(v);
  }
  return taus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unseen object instance segmentation from depth with frozen foundation models"};
  app.require_subcommand(1);
  Common c;

  auto* run = app.add_subcommand("run", "Segment every scene and write result.json files");
  std::string out_dir;
  bool keep_going = false;
  add_dataset_options(run, c);
  add_backend_options(run, c);
  add_pipeline_options(run, c);
  run->add_option("--out", out_dir, "Results directory")->required();
  run->add_flag("--keep-going", keep_going, "Exit 0 even when some scenes fail");

  auto* eval = app.add_subcommand("eval", "Score results against ground truth");
  std::string results_dir;
  add_dataset_options(eval, c);
  eval->add_option("--results", results_dir, "Results directory")->required();
  eval->add_option("--tol", c.tolerance, "Boundary tolerance in pixels")->capture_default_str();
  eval->add_option("--report", c.report, "Report path (default <results>/report.json)");
  eval->add_option("--jobs,-j", c.jobs, "Parallel scenes")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep-tau", "Evaluate a range of background thresholds");
  std::string taus_text;
  std::string table;
  bool sweep_refine = false;
  add_dataset_options(sweep, c);
  add_backend_options(sweep, c);
  add_pipeline_options(sweep, c);
  sweep->add_option("--taus", taus_text, "Comma-separated thresholds (default 0 to 1 step 0.05)");
  sweep->add_flag("--refine", sweep_refine, "Run prompted refinement at every threshold");
  sweep->add_option("--table", table, "Write the tab-separated table here instead of stdout");
  sweep->add_option("--report", c.report, "JSON report with one evaluation per threshold");
  sweep->add_option("--tol", c.tolerance, "Boundary tolerance in pixels")->capture_default_str();

  auto* ablate_prompts = app.add_subcommand("ablate-prompts", "Compare prompt strategies");
  std::string mode_text = "cluster";
  add_dataset_options(ablate_prompts, c);
  add_backend_options(ablate_prompts, c);
  add_pipeline_options(ablate_prompts, c);
  ablate_prompts->add_option("--mode", mode_text, "cluster | random | boxes")->capture_default_str();
  ablate_prompts->add_option("--report", c.report, "JSON report path");
  ablate_prompts->add_option("--tol", c.tolerance, "Boundary tolerance")->capture_default_str();

  auto* ablate_weighting = app.add_subcommand("ablate-weighting", "Toggle entropy head weighting");
  std::string weighting_text = "on";
  add_dataset_options(ablate_weighting, c);
  add_backend_options(ablate_weighting, c);
  add_pipeline_options(ablate_weighting, c);
  ablate_weighting->add_option("--weighting", weighting_text, "on | off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  ablate_weighting->add_option("--report", c.report, "JSON report path");
  ablate_weighting->add_option("--tol", c.tolerance, "Boundary tolerance")->capture_default_str();

  auto* validate = app.add_subcommand("fixture-validate", "Check recorded fixture bundles");
  std::string validate_dir;
  validate->add_option("dir", validate_dir, "Bundle directory or fixture root")->required();

  auto* viz = app.add_subcommand("viz", "Render a result overlay");
  VizOptions viz_options;
  std::string viz_results, viz_out, viz_sim;
  add_dataset_options(viz, c);
  viz->add_option("--results", viz_results, "Results directory")->required();
  viz->add_option("--scene", viz_options.scene, "Scene id")->required();
  viz->add_option("--out", viz_out, "Overlay PNG")->required();
  viz->add_option("--similarity-out", viz_sim, "Similarity map PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      RunOptions o;
      o.dataset = dataset_options(c);
      o.backend = backend_options(c);
      o.config = pipeline_config(c);
      o.out = out_dir;
      o.jobs = c.jobs;
      o.keep_going = keep_going;
      return cmd_run(o, std::cout, std::cerr);
    }
    if (eval->parsed()) {
      EvalOptions o;
      o.results = results_dir;
      o.dataset = dataset_options(c);
      o.tolerance = c.tolerance;
      o.report = c.report;
      o.jobs = c.jobs;
      return cmd_eval(o, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
      SweepOptions o;
      o.experiment = experiment_options(c);
      o.experiment.config.refine = sweep_refine;
      if (!taus_text.empty()) o.taus = parse_taus(taus_text);
      o.table = table;
      return cmd_sweep_tau(o, std::cout, std::cerr);
    }
    if (ablate_prompts->parsed()) {
      return cmd_ablate_prompts(experiment_options(c), prompt_mode_from_string(mode_text),
                                std::cout, std::cerr);
    }
    if (ablate_weighting->parsed()) {
      return cmd_ablate_weighting(experiment_options(c), weighting_text == "on", std::cout,
                                  std::cerr);
    }
    if (validate->parsed()) return cmd_fixture_validate(validate_dir, std::cout, std::cerr);
    if (viz->parsed()) {
      viz_options.results = viz_results;
      viz_options.dataset = dataset_options(c);
      viz_options.out = viz_out;
      viz_options.similarity_out = viz_sim;
      return cmd_viz(viz_options, std::cout, std::cerr);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailures;
  }
  return kExitUsage;
}
