#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "uois/cli.hpp"
#include "uois/fsutil.hpp"
#include "uois/image_io.hpp"

using namespace uois;
namespace fs = std::filesystem;

namespace {

const fs::path kSynthetic = fs::path(UOIS_TEST_DATA) / "synthetic";
const std::string kScenes = (kSynthetic / "scenes").string();
const std::string kFixtures = (kSynthetic / "fixtures").string();
const fs::path kGolden = kSynthetic / "golden";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::string& args) {
  static int counter = 0;
  fs::path base = fs::temp_directory_path() / ("uois_cli_io_" + std::to_string(counter++));
  std::string command = std::string(UOIS_CLI) + " " + args + " >" + base.string() + ".out 2>" + base.string() + ".err";
  int status = std::system(command.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = read_file(base.string() + ".out");
  o.err = read_file(base.string() + ".err");
  fs::remove(base.string() + ".out");
  fs::remove(base.string() + ".err");
  return o;
}

void check_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (!entry.is_regular_file() || entry.path().filename() == "report.json") continue;
    ++files;
    fs::path rel = fs::relative(entry.path(), b);
    REQUIRE_MESSAGE(fs::exists(a / rel), rel.string());
    CHECK_MESSAGE(read_file(a / rel) == read_file(entry.path()), rel.string());
  }
  CHECK(files > 0);
}

cli::ExperimentOptions experiment() {
  cli::ExperimentOptions e;
  e.dataset.root = kScenes;
  e.backend.fixtures = kFixtures;
  return e;
}

}  // namespace

TEST_CASE("bad invocations exit 2") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("run --dataset " + kScenes).code == 2);  // no --out
  CHECK(run_cli("run --dataset " + kScenes + " --out /tmp/x --layout coco --fixtures " + kFixtures).code == 2);
  CHECK(run_cli("run --dataset " + kScenes + " --out /tmp/x --fixtures /nonexistent").code == 2);
  CHECK(run_cli("run --dataset " + kScenes + " --out /tmp/x --backend bridge").code == 2);
  Outcome bad_tau = run_cli("sweep-tau --dataset " + kScenes + " --fixtures " + kFixtures + " --taus 0.1,abc");
  CHECK(bad_tau.code == 2);
  CHECK(bad_tau.err.find("bad tau") != std::string::npos);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("run reproduces the goldens for any job count") {
  for (int jobs : {1, 2, 4}) {
    TempDir out("uois_cli_run_" + std::to_string(jobs));
    Outcome o = run_cli("run --dataset " + kScenes + " --fixtures " + kFixtures + " --out " + out.path.string() +
                        " --jobs " + std::to_string(jobs));
    CHECK(o.code == 0);
    CHECK(o.out.find("3 of 3 scenes segmented") != std::string::npos);
    check_same_tree(out.path, kGolden / "results");
  }
}

TEST_CASE("bridge backend through the cli matches replay") {
  TempDir out("uois_cli_bridge"), work("uois_cli_bridge_work");
  std::string extractor = std::string(UOIS_FAKE_EXTRACTOR) + " " + kFixtures;
  Outcome o = run_cli("run --dataset " + kScenes + " --backend bridge --extractor '" + extractor + "' --work-dir " +
                      work.path.string() + " --out " + out.path.string() + " --jobs 2");
  CHECK(o.code == 0);
  check_same_tree(out.path, kGolden / "results");
}

TEST_CASE("scene failures exit 1 unless --keep-going") {
  TempDir data("uois_cli_partial");
  for (const auto& entry : fs::directory_iterator(kScenes)) fs::copy(entry.path(), data.path / entry.path().filename());
  for (const char* suffix : {"_rgb.png", "_depth.png", "_label.png"})
    fs::copy(data.path / (std::string("scene_a") + suffix), data.path / (std::string("scene_z") + suffix));
  TempDir out("uois_cli_partial_out");
  std::string base = "run --dataset " + data.path.string() + " --fixtures " + kFixtures + " --out " + out.path.string();
  Outcome strict = run_cli(base);
  CHECK(strict.code == 1);
  CHECK(strict.err.find("error: scene 'scene_z': fixture not found") != std::string::npos);
  CHECK(strict.out.find("3 of 4 scenes segmented") != std::string::npos);
  CHECK(fs::exists(out.path / "scene_a" / "result.json"));
  CHECK(run_cli(base + " --keep-going").code == 0);
}

TEST_CASE("eval matches the golden report") {
  TempDir out("uois_cli_eval");
  Outcome o = run_cli("eval --dataset " + kScenes + " --results " + (kGolden / "results").string() + " --report " +
                      (out.path / "report.json").string());
  CHECK(o.code == 0);
  CHECK(read_file(out.path / "report.json") == read_file(kGolden / "report.json"));
  CHECK(o.out.find("100.0") != std::string::npos);

  Outcome missing = run_cli("eval --dataset " + kScenes + " --results " + out.path.string() + " --report " +
                            (out.path / "r2.json").string());
  CHECK(missing.code == 1);
}

TEST_CASE("tau sweep table matches the golden") {
  Outcome o = run_cli("sweep-tau --dataset " + kScenes + " --fixtures " + kFixtures + " --jobs 3");
  CHECK(o.code == 0);
  CHECK(o.out == read_file(kGolden / "sweep.tsv"));
  Outcome two = run_cli("sweep-tau --dataset " + kScenes + " --fixtures " + kFixtures + " --taus 0,1");
  CHECK(two.code == 0);
  CHECK(std::count(two.out.begin(), two.out.end(), '\n') == 3);
}

TEST_CASE("prompt ablation ranks cluster above random and boxes") {
  std::ostringstream out, err;
  EvalReport cluster, random, boxes;
  CHECK(cli::cmd_ablate_prompts(experiment(), PromptMode::cluster, out, err, &cluster) == 0);
  CHECK(cli::cmd_ablate_prompts(experiment(), PromptMode::random, out, err, &random) == 0);
  CHECK(cli::cmd_ablate_prompts(experiment(), PromptMode::boxes, out, err, &boxes) == 0);
  CHECK(cluster.overlap.f > random.overlap.f);
  CHECK(cluster.overlap.f > boxes.overlap.f);
  CHECK(cluster.boundary.f == 1.0);
  CHECK(err.str().empty());
}

TEST_CASE("weighting ablation") {
  std::ostringstream out, err;
  EvalReport on, off;
  CHECK(cli::cmd_ablate_weighting(experiment(), true, out, err, &on) == 0);
  CHECK(cli::cmd_ablate_weighting(experiment(), false, out, err, &off) == 0);
  CHECK(on.overlap.f > off.overlap.f);
  CHECK(on.predictions > off.predictions);
  TempDir dir("uois_cli_ablate");
  Outcome o = run_cli("ablate-weighting --dataset " + kScenes + " --fixtures " + kFixtures + " --weighting off --report " +
                      (dir.path / "w.json").string());
  CHECK(o.code == 0);
  CHECK(o.out.find("weighting: off") != std::string::npos);
  CHECK(read_file(dir.path / "w.json").find("\"seed\"") != std::string::npos);
}

TEST_CASE("fixture validation") {
  Outcome ok = run_cli("fixture-validate " + kFixtures);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("3 of 3 bundles valid") != std::string::npos);
  CHECK(run_cli("fixture-validate " + kFixtures + "/scene_b").code == 0);

  TempDir dir("uois_cli_validate");
  fs::copy(kFixtures + "/scene_c", dir.path / "scene_c", fs::copy_options::recursive);
  write_file_atomic(dir.path / "scene_c" / "attn.bin", "{}\n");
  Outcome bad = run_cli("fixture-validate " + dir.path.string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("invalid") != std::string::npos);
  CHECK(run_cli("fixture-validate /nonexistent").code == 2);
}

TEST_CASE("viz writes an overlay and a similarity map") {
  TempDir dir("uois_cli_viz");
  Outcome o = run_cli("viz --dataset " + kScenes + " --results " + (kGolden / "results").string() +
                      " --scene scene_a --out " + (dir.path / "o.png").string() + " --similarity-out " +
                      (dir.path / "s.png").string());
  CHECK(o.code == 0);
  ColorImage overlay = read_color_png(dir.path / "o.png");
  ColorImage sim = read_color_png(dir.path / "s.png");
  CHECK(overlay.height() == 120);
  CHECK(sim.width() == 160);
  CHECK(run_cli("viz --dataset " + kScenes + " --results " + (kGolden / "results").string() +
                " --scene nope --out " + (dir.path / "o.png").string())
            .code == 2);
}

TEST_CASE("fixture generator output is reproducible") {
  TempDir dir("uois_cli_regen");
  std::string command = std::string(UOIS_FIXTURE_GENERATOR) + " " + dir.path.string() + " >/dev/null";
  REQUIRE(std::system(command.c_str()) == 0);
  check_same_tree(dir.path / "scenes", kSynthetic / "scenes");
  check_same_tree(dir.path / "fixtures", kSynthetic / "fixtures");
}
