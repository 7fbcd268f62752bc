#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gce/explain.hpp"
#include "gce/groups.hpp"
#include "gce/repr.hpp"
#include "gce/types.hpp"

namespace gce {

/// Where the representation comes from: a model JSON file or an external
/// command speaking the line protocol.
struct ModelSource {
  std::filesystem::path path;
  std::string command;
  int input_dim = 0;
  int output_dim = 0;
  double fd_step = 1e-4;

  ReprModel Load() const;
};

struct DatasetSource {
  std::filesystem::path path;
  bool has_header = true;
};

struct RunConfig {
  std::filesystem::path output_dir = ".";
  Seed seed = 0;

  DatasetSource dataset;
  ModelSource model;
  std::filesystem::path labels;
  std::filesystem::path explanations;
  std::filesystem::path other_explanations;
  std::filesystem::path perturbation;

  // train
  bool standardize = true;
  TrainConfig train;
  /// Independent trainings; the encoder that best separates `clusters`
  /// groups is kept.
  int restarts = 20;

  // group
  int clusters = 4;

  // calibrate / metrics
  std::vector<double> epsilon_grid;  // empty: default grid
  std::optional<double> epsilon;     // skips calibration when set

  // explain / sweep
  Method method = Method::kTgt;
  std::vector<double> lambda_grid;  // empty: default grid
  std::optional<int> k;
  std::vector<int> k_levels = {1, 2, 3, 4};
  OptimizerConfig optimizer;
  double tie_tolerance = kDefaultTieTolerance;

  // gen-synth / synth-demo
  int points = 400;

  // compare
  std::vector<std::pair<int, int>> pairs;  // empty: every ordered pair of the original groups
};

struct SelectedEncoder {
  AutoencoderFit fit;
  int restart = 0;
  /// Share of the encoding variance explained by a k-means partition.
  double separation = 0.0;
};

/// Between-cluster share of the total sum of squares of `points` under
/// `grouping`; 1 means every cluster collapses to a point.
double ClusterSeparation(const Matrix& points, const Grouping& grouping);

/// Trains `restarts` autoencoders from derived seeds and keeps the one whose
/// encodings are best separated by k-means with `clusters` groups. Ties go
/// to the earlier restart.
SelectedEncoder TrainSelectedEncoder(const Dataset& data, const TrainConfig& cfg,
                                     int restarts, int clusters);

struct CommandOutput {
  std::vector<std::filesystem::path> files;  // in write order
  std::vector<std::string> warnings;
};

/// Each subcommand writes its artifacts under cfg.output_dir. Errors surface
/// as gce::Error.
CommandOutput GenSynthCommand(const RunConfig& cfg);
CommandOutput TrainCommand(const RunConfig& cfg);
CommandOutput GroupCommand(const RunConfig& cfg);
CommandOutput CalibrateCommand(const RunConfig& cfg);
CommandOutput ExplainCommand(const RunConfig& cfg);
CommandOutput MetricsCommand(const RunConfig& cfg);
CommandOutput SweepCommand(const RunConfig& cfg);
CommandOutput ModifyCommand(const RunConfig& cfg);
CommandOutput CompareCommand(const RunConfig& cfg);
/// One-shot synthetic causal experiment: data, representation, groups,
/// epsilon, TGT and DBM explanations, metrics, sweep and plots. The
/// generator's features already share a unit scale, so the encoder is
/// trained on them directly.
CommandOutput SynthDemoCommand(const RunConfig& cfg);

}  // namespace gce
