#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

#include "gce/groups.hpp"
#include "gce/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path Scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gce_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run Cli(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(GCE_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(out), Slurp(err)};
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    files[entry.path().filename().string()] = Slurp(entry.path());
  }
  return files;
}

std::size_t CountLines(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

const char* kFastDemo = "synth-demo --points 160 --restarts 3 --lambda-grid 0,0.001,0.01";

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("error categories map to exit codes") {
  const auto dir = Scratch("errors");
  SUBCASE("missing dataset") {
    const auto r = Cli("calibrate --data " + (dir / "nope.csv").string() + " --model x.json",
                       dir);
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: config: ", 0) == 0);
    CHECK(CountLines(r.err, "error:") == 1);
  }
  SUBCASE("unknown flag") {
    CHECK(Cli("explain --bogus 1", dir).code == 2);
  }
  SUBCASE("unknown method") {
    std::ofstream(dir / "d.csv") << "1,2,3\n4,5,6\n";
    CHECK(Cli("explain --method pca --data " + (dir / "d.csv").string(), dir).code == 2);
  }
  SUBCASE("malformed data") {
    std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3,NaN\n";
    const auto r = Cli("train --data " + (dir / "bad.csv").string() + " --output-dir " +
                           (dir / "out").string(),
                       dir);
    CHECK(r.code == 4);
    CHECK(r.err.rfind("error: data: ", 0) == 0);
  }
  SUBCASE("exhausted epsilon grid") {
    const auto out = dir / "gen";
    REQUIRE(Cli("gen-synth --points 80 --output-dir " + out.string(), dir).code == 0);
    std::ofstream(dir / "lin.json") << R"({"kind": "linear", "dims": {"input": 4, "output": 2},
      "layers": [{"rows": 2, "cols": 4, "weights": [1,0,0,0, 0,1,0,0], "bias": [0,0],
      "activation": "identity"}]})";
    const auto r = Cli("calibrate --data " + (out / "data.csv").string() + " --model " +
                           (dir / "lin.json").string() + " --labels " +
                           (out / "truth.txt").string() + " --epsilon-grid 1e-12 --output-dir " +
                           out.string(),
                       dir);
    CHECK(r.code == 3);
    CHECK(r.err.rfind("error: numeric: ", 0) == 0);
  }
}

TEST_CASE("staged commands compose and DBM metrics have a calibrated diagonal") {
  const auto dir = Scratch("staged");
  const auto out = dir / "out";
  const std::string o = " --output-dir " + out.string();
  const std::string data = " --data " + (out / "data.csv").string();
  const std::string model = " --model " + (out / "model.json").string();
  const std::string labels = " --labels " + (out / "labels.txt").string();

  REQUIRE(Cli("gen-synth --points 200 --seed 3" + o, dir).code == 0);
  const auto data_before = Slurp(out / "data.csv");
  REQUIRE(Cli("train --restarts 2 --seed 3" + data + o, dir).code == 0);
  REQUIRE(Cli("group --seed 3" + data + model + o, dir).code == 0);
  REQUIRE(Cli("calibrate" + data + model + labels + o, dir).code == 0);
  const auto r = Cli("explain --method dbm" + data + model + labels + o, dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("explanations_dbm.json") != std::string::npos);
  REQUIRE(Cli("metrics" + data + model + labels + " --explanations " +
                  (out / "explanations_dbm.json").string() + o,
              dir)
              .code == 0);
  const auto report = gce::ReadJson(out / "metrics_dbm.json");
  const auto& diag = report["correctness"];
  for (std::size_t g = 0; g < diag.size(); ++g) CHECK(diag[g][g].get<double>() >= 0.95);
  // Heatmap cells pass the report through unchanged.
  const auto heat = gce::ReadJson(out / "metrics_dbm_heatmap.json");
  CHECK(heat["series"]["correctness"] == report["correctness"]);
  CHECK(heat["series"]["coverage"] == report["coverage"]);
  // Inputs are never rewritten.
  CHECK(Slurp(out / "data.csv") == data_before);
}

TEST_CASE("config files supply defaults and flags override them") {
  const auto dir = Scratch("config");
  std::ofstream(dir / "cfg.json") << R"({"points": 50, "seed": 9})";
  REQUIRE(Cli("gen-synth --config " + (dir / "cfg.json").string() + " --output-dir " +
                  (dir / "a").string(),
              dir)
              .code == 0);
  REQUIRE(Cli("gen-synth --config " + (dir / "cfg.json").string() + " --points 60 --output-dir " +
                  (dir / "b").string(),
              dir)
              .code == 0);
  CHECK(CountLines(Slurp(dir / "a" / "truth.txt"), "") == 50);
  CHECK(CountLines(Slurp(dir / "b" / "truth.txt"), "") == 60);
  std::ofstream(dir / "typo.json") << R"({"pionts": 50})";
  CHECK(Cli("gen-synth --config " + (dir / "typo.json").string(), dir).code == 2);
}

TEST_CASE("the one-shot demo is deterministic and honors the plot contracts") {
  const auto dir = Scratch("demo");
  REQUIRE(Cli(std::string(kFastDemo) + " --output-dir " + (dir / "a").string(), dir).code == 0);
  REQUIRE(Cli(std::string(kFastDemo) + " --output-dir " + (dir / "b").string(), dir).code == 0);
  const auto a = Snapshot(dir / "a");
  CHECK(a == Snapshot(dir / "b"));
  for (const char* name : {"model.json", "labels.txt", "epsilon.json", "explanations_tgt.json",
                           "explanations_dbm.json", "metrics_tgt.json", "metrics_dbm.json",
                           "sweep.json", "summary.json"}) {
    CHECK_MESSAGE(a.count(name) == 1, name);
  }

  // One tradeoff row per default sparsity level.
  CHECK(CountLines(a.at("sweep_tgt.csv"), "") == 1 + 4);

  // Each overlay carries one translated point per source member.
  const auto labels = gce::LoadLabels(dir / "a" / "labels.txt");
  const auto& scatter = a.at("representation_scatter.csv");
  CHECK(CountLines(scatter, "points,") == labels.size());
  for (int i = 0; i < 4; ++i) {
    const auto size = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), i));
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      CHECK(CountLines(scatter, "translated_" + std::to_string(i) + "_to_" +
                                    std::to_string(j) + ",") == size);
    }
  }
}

TEST_CASE("a representation that is not 2-d skips the scatter with a warning") {
  const auto dir = Scratch("dim3");
  const auto out = dir / "out";
  REQUIRE(Cli("gen-synth --points 80 --output-dir " + out.string(), dir).code == 0);
  REQUIRE(Cli("train --code-dim 3 --restarts 1 --epochs 20 --data " +
                  (out / "data.csv").string() + " --output-dir " + out.string(),
              dir)
              .code == 0);
  const auto r = Cli("group --data " + (out / "data.csv").string() + " --model " +
                         (out / "model.json").string() + " --output-dir " + out.string(),
                     dir);
  CHECK(r.code == 0);
  CHECK(r.err.find("warning:") != std::string::npos);
  CHECK(fs::exists(out / "labels.txt"));
  CHECK_FALSE(fs::exists(out / "groups_scatter.svg"));
}

}  // TEST_SUITE
