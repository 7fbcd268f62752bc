// Command-line front end: one subcommand per pipeline stage.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gce/error.hpp"
#include "gce/io.hpp"
#include "gce/pipeline.hpp"

namespace {

using gce::RunConfig;

// Flags shared by every subcommand plus the stage-specific groups below.
struct Flags {
  RunConfig cfg;
  std::string config_path;
  std::string method = "tgt";
  double epsilon = 0.0;
  int k = 0;
  bool no_header = false;
  std::vector<std::string> pairs;
};

void AddCommon(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.cfg.seed, "Seed for every random stream")->capture_default_str();
  cmd->add_option("--output-dir", f.cfg.output_dir, "Directory for artifacts")
      ->capture_default_str();
  cmd->add_option("--config", f.config_path,
                  "JSON object whose keys mirror the long flag names");
}

void AddData(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.cfg.dataset.path, "Dataset CSV");
  cmd->add_flag("--no-header", f.no_header, "The CSV has no header row");
}

void AddModel(CLI::App* cmd, Flags& f) {
  auto& m = f.cfg.model;
  cmd->add_option("--model", m.path, "Model JSON file");
  cmd->add_option("--model-command", m.command,
                  "External evaluator: one input vector per stdin line, one output per "
                  "stdout line");
  cmd->add_option("--model-input-dim", m.input_dim, "Input dimension of --model-command");
  cmd->add_option("--model-output-dim", m.output_dim,
                  "Output dimension of --model-command");
  cmd->add_option("--fd-step", m.fd_step, "Finite-difference step for --model-command")
      ->capture_default_str();
}

void AddEpsilon(CLI::App* cmd, Flags& f) {
  cmd->add_option("--epsilon", f.epsilon, "Fixed epsilon; calibrated when omitted");
  cmd->add_option("--epsilon-grid", f.cfg.epsilon_grid, "Ascending calibration grid")
      ->delimiter(',');
}

void AddTraining(CLI::App* cmd, Flags& f) {
  auto& t = f.cfg.train;
  cmd->add_option("--hidden", t.hidden_widths, "Hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--code-dim", t.code_dim, "Representation dimension")
      ->capture_default_str();
  cmd->add_option("--epochs", t.epochs)->capture_default_str();
  cmd->add_option("--train-learning-rate", t.learning_rate)->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--restarts", f.cfg.restarts,
                  "Trainings to run; the best-separated encoder is kept")
      ->capture_default_str();
  cmd->add_option("--clusters", f.cfg.clusters, "Groups used to score separation")
      ->capture_default_str();
}

void AddExplain(CLI::App* cmd, Flags& f) {
  auto& o = f.cfg.optimizer;
  cmd->add_option("--lambda-grid", f.cfg.lambda_grid, "Candidate l1 weights")
      ->delimiter(',');
  cmd->add_option("--tie-tolerance", f.cfg.tie_tolerance,
                  "Correctness gap treated as a tie when tuning lambda")
      ->capture_default_str();
  cmd->add_option("--learning-rate", o.learning_rate)->capture_default_str();
  cmd->add_option("--max-pairs", o.max_pairs)->capture_default_str();
  cmd->add_option("--steps-per-pair", o.steps_per_pair)->capture_default_str();
  cmd->add_option("--window", o.window)->capture_default_str();
  cmd->add_option("--patience", o.patience)->capture_default_str();
  cmd->add_option("--tolerance", o.tolerance)->capture_default_str();
  cmd->add_option("--reference", o.reference)->capture_default_str();
}

// Turns {"key": value} config entries into "--key value" arguments for every
// key not already given on the command line.
std::vector<std::string> ExpandConfig(std::vector<std::string> args) {
  std::string path;
  for (std::size_t a = 1; a < args.size(); ++a) {
    if (args[a] == "--config" && a + 1 < args.size()) path = args[a + 1];
    if (args[a].rfind("--config=", 0) == 0) path = args[a].substr(9);
  }
  if (path.empty()) return args;

  gce::Json doc;
  try {
    doc = gce::ReadJson(path);
  } catch (const gce::Error& e) {
    gce::ThrowConfig(std::string("config file: ") + e.what());
  }
  if (!doc.is_object()) gce::ThrowConfig("config file must hold a JSON object");

  auto given = [&](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  auto scalar = [](const gce::Json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return gce::FormatDouble(v.get<double>());
    if (v.is_number()) return v.dump();
    gce::ThrowConfig("config values must be scalars or arrays of scalars");
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "config") gce::ThrowConfig("config files cannot nest --config");
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar(item);
      if (!joined.empty()) args.push_back(flag + "=" + joined);
    } else {
      args.push_back(flag + "=" + scalar(value));
    }
  }
  return args;
}

std::vector<std::pair<int, int>> ParsePairs(const std::vector<std::string>& specs) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& spec : specs) {
    const auto colon = spec.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(spec);
      pairs.emplace_back(std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1)));
    } catch (const std::exception&) {
      gce::ThrowConfig("pairs are written i:j, got '" + spec + "'");
    }
  }
  return pairs;
}

int Fail(gce::ErrorCategory category, const std::string& detail) {
  std::cerr << "error: " << gce::CategoryName(category) << ": " << detail << '\n';
  return gce::ExitCode(category);
}

}  // namespace

int main(int argc, char** argv) {
  Flags f;
  CLI::App app{"Consistent global counterfactual explanations between groups"};
  app.require_subcommand(1);

  using Runner = gce::CommandOutput (*)(const RunConfig&);
  std::vector<std::pair<CLI::App*, Runner>> commands;
  auto add = [&](const char* name, const char* help, Runner run) {
    auto* cmd = app.add_subcommand(name, help);
    AddCommon(cmd, f);
    commands.emplace_back(cmd, run);
    return cmd;
  };

  auto* gen = add("gen-synth", "Write the synthetic causal dataset and its true labels",
                  gce::GenSynthCommand);
  gen->add_option("--points", f.cfg.points)->capture_default_str();

  auto* train = add("train", "Train an autoencoder and save its encoder", gce::TrainCommand);
  AddData(train, f);
  AddTraining(train, f);
  train->add_flag("--standardize,!--no-standardize", f.cfg.standardize,
                  "Z-score features before training (folded into the saved model)")
      ->capture_default_str();

  auto* group = add("group", "Assign groups by k-means on the representation",
                    gce::GroupCommand);
  AddData(group, f);
  AddModel(group, f);
  group->add_option("--clusters", f.cfg.clusters)->capture_default_str();
  group->add_option("--labels", f.cfg.labels, "Validate and pass through these labels");

  auto* calibrate = add("calibrate", "Calibrate epsilon from group self-similarity",
                        gce::CalibrateCommand);
  AddData(calibrate, f);
  AddModel(calibrate, f);
  calibrate->add_option("--labels", f.cfg.labels);
  calibrate->add_option("--epsilon-grid", f.cfg.epsilon_grid)->delimiter(',');

  auto* explain = add("explain", "Compute TGT or DBM explanations", gce::ExplainCommand);
  AddData(explain, f);
  AddModel(explain, f);
  explain->add_option("--labels", f.cfg.labels);
  explain->add_option("--method", f.method, "tgt or dbm")->capture_default_str();
  explain->add_option("--k", f.k, "Tune lambda for k-sparse translations");
  AddEpsilon(explain, f);
  AddExplain(explain, f);

  auto* metrics = add("metrics", "Pairwise correctness and coverage", gce::MetricsCommand);
  AddData(metrics, f);
  AddModel(metrics, f);
  metrics->add_option("--labels", f.cfg.labels);
  metrics->add_option("--explanations", f.cfg.explanations);
  metrics->add_option("--k", f.k, "Threshold translations to k features");
  AddEpsilon(metrics, f);

  auto* sweep = add("sweep", "Correctness, coverage and similarity across sparsity levels",
                    gce::SweepCommand);
  AddData(sweep, f);
  AddModel(sweep, f);
  sweep->add_option("--labels", f.cfg.labels);
  sweep->add_option("--k-levels", f.cfg.k_levels)->delimiter(',')->capture_default_str();
  AddEpsilon(sweep, f);
  AddExplain(sweep, f);

  auto* modify = add("modify", "Append a perturbed copy of a group", gce::ModifyCommand);
  AddData(modify, f);
  modify->add_option("--labels", f.cfg.labels);
  modify->add_option("--perturbation", f.cfg.perturbation, "Perturbation spec JSON");

  auto* compare = add("compare", "Scaled differences between two explanation sets",
                      gce::CompareCommand);
  compare->add_option("--explanations", f.cfg.explanations, "Original explanations");
  compare->add_option("--other", f.cfg.other_explanations, "Explanations to compare");
  compare->add_option("--pairs", f.pairs, "Pairs i:j (default: all original pairs)")
      ->delimiter(',');

  auto* demo = add("synth-demo", "End-to-end run on the synthetic causal dataset",
                   gce::SynthDemoCommand);
  demo->add_option("--points", f.cfg.points)->capture_default_str();
  demo->add_option("--k", f.k, "Tune and report k-sparse translations");
  AddTraining(demo, f);
  AddEpsilon(demo, f);
  AddExplain(demo, f);
  demo->add_option("--k-levels", f.cfg.k_levels)->delimiter(',')->capture_default_str();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = ExpandConfig(std::move(args));
    std::vector<const char*> raw;
    for (const auto& a : args) raw.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::Success& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      return Fail(gce::ErrorCategory::kConfig, e.what());
    }

    for (const auto& [cmd, run] : commands) {
      if (!cmd->parsed()) continue;
      f.cfg.dataset.has_header = !f.no_header;
      f.cfg.method = gce::ParseMethod(f.method);
      auto given = [cmd = cmd](const char* name) {
        const auto* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
      };
      if (given("--epsilon")) f.cfg.epsilon = f.epsilon;
      if (given("--k")) {
        if (f.k < 1) gce::ThrowConfig("--k must be positive");
        f.cfg.k = f.k;
      }
      f.cfg.pairs = ParsePairs(f.pairs);
      const auto result = run(f.cfg);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& file : result.files) std::cout << file.string() << '\n';
    }
  } catch (const gce::Error& e) {
    return Fail(e.category(), e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
