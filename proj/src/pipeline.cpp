#include "gce/pipeline.hpp"

#include <fstream>
#include <system_error>

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/io.hpp"
#include "gce/metrics.hpp"
#include "gce/plot.hpp"

namespace gce {
namespace fs = std::filesystem;

ReprModel ModelSource::Load() const {
  if (!command.empty()) {
    if (input_dim <= 0 || output_dim <= 0) {
      ThrowConfig("a model command needs positive input and output dimensions");
    }
    if (!(fd_step > 0.0)) ThrowConfig("finite-difference step must be positive");
    return ReprModel::BlackBox(CommandEvaluator(command, output_dim), input_dim,
                               output_dim, fd_step);
  }
  if (path.empty()) ThrowConfig("a model file or model command is required");
  if (!fs::exists(path)) ThrowConfig("model file not found: " + path.string());
  return ModelFromJson(ReadJson(path));
}

double ClusterSeparation(const Matrix& points, const Grouping& grouping) {
  if (static_cast<std::size_t>(points.rows()) != grouping.size()) {
    ThrowConfig("grouping does not match the number of points");
  }
  const Eigen::RowVectorXd center = points.colwise().mean();
  const double total = (points.rowwise() - center).squaredNorm();
  if (total == 0.0) return 0.0;
  double within = 0.0;
  for (int g = 0; g < grouping.count(); ++g) {
    const auto members = grouping.Members(g);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
    for (auto i : members) mean += points.row(i);
    mean /= static_cast<double>(members.size());
    for (auto i : members) within += (points.row(i) - mean).squaredNorm();
  }
  return 1.0 - within / total;
}

SelectedEncoder TrainSelectedEncoder(const Dataset& data, const TrainConfig& cfg,
                                     int restarts, int clusters) {
  if (restarts < 1) ThrowConfig("restarts must be positive");
  std::optional<SelectedEncoder> best;
  for (int r = 0; r < restarts; ++r) {
    TrainConfig run = cfg;
    run.seed = restarts == 1 ? cfg.seed : DeriveSeed(cfg.seed, r);
    AutoencoderFit fit = TrainAutoencoder(data, run);
    double score = 0.0;
    if (restarts > 1) {
      const Matrix codes = fit.encoder.ForwardBatch(data.rows());
      score = ClusterSeparation(codes, KMeans(codes, {clusters, cfg.seed}));
    }
    if (!best || score > best->separation) {
      best = SelectedEncoder{std::move(fit), r, score};
    }
  }
  return std::move(*best);
}

namespace {

struct Output {
  fs::path dir;
  CommandOutput result;

  fs::path Path(const std::string& name) {
    auto path = dir / name;
    result.files.push_back(path);
    return path;
  }
  void Add(const PlotOutput& plots) {
    result.files.insert(result.files.end(), plots.files.begin(), plots.files.end());
    result.warnings.insert(result.warnings.end(), plots.warnings.begin(),
                           plots.warnings.end());
  }
};

Output OpenOutput(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir)) {
    ThrowConfig("cannot create output directory " + cfg.output_dir.string());
  }
  return Output{cfg.output_dir, {}};
}

void RequireFile(const fs::path& path, const std::string& what) {
  if (path.empty()) ThrowConfig(what + " is required");
  if (!fs::is_regular_file(path)) ThrowConfig(what + " not found: " + path.string());
}

Dataset LoadDataset(const RunConfig& cfg) {
  RequireFile(cfg.dataset.path, "dataset");
  return LoadCsv(cfg.dataset.path, cfg.dataset.has_header);
}

ReprModel LoadModel(const RunConfig& cfg, const Dataset& data) {
  ReprModel model = cfg.model.Load();
  if (model.input_dim() != data.dim()) {
    ThrowData("model expects " + std::to_string(model.input_dim()) +
              " features but the dataset has " + std::to_string(data.dim()));
  }
  return model;
}

Grouping LoadGrouping(const RunConfig& cfg, const Dataset& data) {
  RequireFile(cfg.labels, "labels file");
  auto labels = LoadLabels(cfg.labels);
  if (labels.size() != static_cast<std::size_t>(data.size())) {
    ThrowData("labels file has " + std::to_string(labels.size()) +
              " entries but the dataset has " + std::to_string(data.size()) + " rows");
  }
  try {
    return Grouping(std::move(labels));
  } catch (const Error& e) {
    ThrowData(std::string("invalid labels: ") + e.what());
  }
}

ExplanationSet LoadExplanations(const fs::path& path, const std::string& what) {
  RequireFile(path, what);
  return ExplanationsFromJson(ReadJson(path));
}

std::vector<double> EpsilonGrid(const RunConfig& cfg, const Matrix& reps) {
  return cfg.epsilon_grid.empty() ? DefaultEpsilonGrid(reps) : cfg.epsilon_grid;
}

std::vector<double> LambdaGrid(const RunConfig& cfg) {
  return cfg.lambda_grid.empty() ? DefaultLambdaGrid() : cfg.lambda_grid;
}

OptimizerConfig Optimizer(const RunConfig& cfg) {
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  return opt;
}

double ResolveEpsilon(const RunConfig& cfg, const Matrix& reps, const Grouping& grouping) {
  if (cfg.epsilon) {
    if (!(*cfg.epsilon > 0.0)) ThrowConfig("epsilon must be positive");
    return *cfg.epsilon;
  }
  return CalibrateEpsilon(reps, grouping, EpsilonGrid(cfg, reps)).epsilon;
}

void CheckGroupsMatch(const ExplanationSet& set, const Grouping& grouping,
                      const Dataset& data) {
  if (set.group_count() != grouping.count()) {
    ThrowData("explanations cover " + std::to_string(set.group_count()) +
              " groups but the labels define " + std::to_string(grouping.count()));
  }
  if (set.dim() != data.dim()) ThrowData("explanations and dataset differ in dimension");
}

Json StandardizationToJson(const Standardization& s) {
  Json mean = Json::array(), stddev = Json::array(), constant = Json::array();
  for (Eigen::Index f = 0; f < s.mean.size(); ++f) {
    mean.push_back(s.mean[f]);
    stddev.push_back(s.stddev[f]);
    constant.push_back(static_cast<bool>(s.constant[static_cast<std::size_t>(f)]));
  }
  return Json{{"mean", mean}, {"stddev", stddev}, {"constant", constant}};
}

Json TrainSummary(const SelectedEncoder& chosen, const TrainConfig& train,
                  int restarts, const std::optional<Standardization>& standardization) {
  Json doc;
  doc["hidden_widths"] = train.hidden_widths;
  doc["code_dim"] = train.code_dim;
  doc["epochs"] = train.epochs;
  doc["learning_rate"] = train.learning_rate;
  doc["batch_size"] = train.batch_size;
  doc["restarts"] = restarts;
  doc["selected_restart"] = chosen.restart;
  doc["separation"] = chosen.separation;
  doc["reconstruction_mse"] = chosen.fit.reconstruction_mse;
  doc["standardization"] =
      standardization ? StandardizationToJson(*standardization) : Json(nullptr);
  return doc;
}

Json CalibrationToJson(const Matrix& reps, const Grouping& grouping,
                       const EpsilonCalibration& cal, std::size_t grid_size) {
  Json self = Json::array();
  for (int g = 0; g < grouping.count(); ++g) {
    self.push_back(SelfSimilarity(reps, grouping, g, cal.epsilon));
  }
  return Json{{"epsilon", cal.epsilon},
              {"min_self_similarity", cal.min_self_similarity},
              {"self_similarity", self},
              {"grid_size", grid_size}};
}

Json TuningToJson(const LambdaChoice& choice, const std::vector<double>& grid,
                  std::optional<int> k, double epsilon, double tie_tolerance) {
  Json rows = Json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    rows.push_back({{"lambda", grid[g]}, {"mean_correctness", choice.grid_correctness[g]}});
  }
  return Json{{"k", k ? Json(*k) : Json(nullptr)},
              {"epsilon", epsilon},
              {"tie_tolerance", tie_tolerance},
              {"lambda", choice.lambda},
              {"mean_correctness", choice.mean_correctness},
              {"grid", rows}};
}

ExplanationSet ComputeExplanations(const RunConfig& cfg, const ExperimentContext& ctx,
                                   const Dataset& data, Output& out) {
  ExplanationSet set;
  const std::string method(MethodName(cfg.method));
  if (cfg.method == Method::kDbm) {
    set = Dbm(ctx.stats, cfg.optimizer.reference);
  } else {
    const auto grid = LambdaGrid(cfg);
    const auto choice = TuneLambda(ctx, cfg.k, grid, Optimizer(cfg), cfg.tie_tolerance);
    set = choice.explanations;
    WriteJson(TuningToJson(choice, grid, cfg.k, ctx.epsilon, cfg.tie_tolerance),
              out.Path("tuning_" + method + ".json"));
  }
  set.feature_names = data.feature_names();
  WriteJson(ExplanationsToJson(set), out.Path("explanations_" + method + ".json"));
  WritePairwiseCsv(set, out.Path("pairwise_" + method + ".csv"));
  return set;
}

MetricsReport WriteMetrics(const ExplanationSet& set, const ExperimentContext& ctx,
                           std::optional<int> k, Output& out) {
  const auto report =
      PairwiseReport(ctx.model, ctx.data, ctx.grouping, set, ctx.epsilon, k);
  const std::string stem = "metrics_" + std::string(MethodName(set.method));
  Json doc = MetricsToJson(report);
  doc["k"] = k ? Json(*k) : Json(nullptr);
  WriteJson(doc, out.Path(stem + ".json"));
  WriteMetricsCsv(report, out.Path(stem + ".csv"));
  out.Add(EmitReportPlots(report, out.dir, stem));
  return report;
}

SweepResult WriteSweep(const RunConfig& cfg, const ExperimentContext& ctx, Output& out) {
  const auto sweep =
      SparsitySweep(ctx, cfg.k_levels, LambdaGrid(cfg), Optimizer(cfg), cfg.tie_tolerance);
  WriteJson(Json{{"epsilon", ctx.epsilon},
                 {"tgt", TradeoffToJson(sweep.tgt)},
                 {"dbm", TradeoffToJson(sweep.dbm)}},
            out.Path("sweep.json"));
  out.Add(EmitCurvePlots(sweep, out.dir, "sweep"));
  return sweep;
}

std::vector<Overlay> TranslationOverlays(const ReprModel& model, const Dataset& data,
                                         const Grouping& grouping,
                                         const ExplanationSet& set) {
  std::vector<Overlay> overlays;
  for (int i = 0; i < set.group_count(); ++i) {
    const auto members = grouping.Members(i);
    Matrix source(static_cast<Eigen::Index>(members.size()), data.dim());
    for (std::size_t r = 0; r < members.size(); ++r) {
      source.row(static_cast<Eigen::Index>(r)) = data.rows().row(members[r]);
    }
    for (int j = 0; j < set.group_count(); ++j) {
      if (i == j) continue;
      const Matrix moved = source.rowwise() + set.Construct(i, j).transpose();
      overlays.push_back({i, j, model.ForwardBatch(moved)});
    }
  }
  return overlays;
}

Json SummaryEntry(const ExplanationSet& set, const MetricsReport& report) {
  return Json{{"lambda", set.lambda},
              {"mean_correctness", report.mean_correctness},
              {"mean_coverage", report.mean_coverage}};
}

}  // namespace

CommandOutput GenSynthCommand(const RunConfig& cfg) {
  auto out = OpenOutput(cfg);
  const auto synthetic = GenerateSynthetic(cfg.seed, cfg.points);
  SaveCsv(synthetic.data, out.Path("data.csv"));
  SaveLabels(synthetic.truth, out.Path("truth.txt"));
  return out.result;
}

CommandOutput TrainCommand(const RunConfig& cfg) {
  const Dataset raw = LoadDataset(cfg);
  auto out = OpenOutput(cfg);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  const Dataset data = cfg.standardize ? Standardize(raw) : raw;
  const auto chosen = TrainSelectedEncoder(data, train, cfg.restarts, cfg.clusters);
  // The saved model always reads raw features.
  const ReprModel model =
      cfg.standardize ? FoldStandardization(chosen.fit.encoder,
                                            data.standardization()->mean,
                                            data.standardization()->stddev)
                      : chosen.fit.encoder;
  WriteJson(ModelToJson(model), out.Path("model.json"));
  WriteJson(TrainSummary(chosen, train, cfg.restarts, data.standardization()),
            out.Path("train.json"));
  return out.result;
}

CommandOutput GroupCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const ReprModel model = LoadModel(cfg, data);
  auto out = OpenOutput(cfg);
  const Matrix reps = model.ForwardBatch(data.rows());
  const Grouping grouping = cfg.labels.empty()
                                ? KMeans(reps, {cfg.clusters, cfg.seed})
                                : LoadGrouping(cfg, data);
  SaveLabels(grouping.labels(), out.Path("labels.txt"));
  out.Add(EmitScatterPlots(reps, grouping.labels(), {}, out.dir, "groups"));
  return out.result;
}

CommandOutput CalibrateCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const ReprModel model = LoadModel(cfg, data);
  const Grouping grouping = LoadGrouping(cfg, data);
  auto out = OpenOutput(cfg);
  const Matrix reps = model.ForwardBatch(data.rows());
  const auto grid = EpsilonGrid(cfg, reps);
  const auto cal = CalibrateEpsilon(reps, grouping, grid);
  WriteJson(CalibrationToJson(reps, grouping, cal, grid.size()), out.Path("epsilon.json"));
  return out.result;
}

CommandOutput ExplainCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const ReprModel model = LoadModel(cfg, data);
  const Grouping grouping = LoadGrouping(cfg, data);
  auto out = OpenOutput(cfg);
  const auto stats = ComputeGroupStats(data, grouping, model);
  // DBM needs no epsilon; TGT uses it to tune lambda.
  const double epsilon = cfg.method == Method::kTgt
                             ? ResolveEpsilon(cfg, model.ForwardBatch(data.rows()), grouping)
                             : 0.0;
  const ExperimentContext ctx{model, data, grouping, stats, epsilon};
  ComputeExplanations(cfg, ctx, data, out);
  return out.result;
}

CommandOutput MetricsCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const ReprModel model = LoadModel(cfg, data);
  const Grouping grouping = LoadGrouping(cfg, data);
  const ExplanationSet set = LoadExplanations(cfg.explanations, "explanations file");
  CheckGroupsMatch(set, grouping, data);
  auto out = OpenOutput(cfg);
  const auto stats = ComputeGroupStats(data, grouping, model);
  const double epsilon = ResolveEpsilon(cfg, model.ForwardBatch(data.rows()), grouping);
  const ExperimentContext ctx{model, data, grouping, stats, epsilon};
  WriteMetrics(set, ctx, cfg.k, out);
  return out.result;
}

CommandOutput SweepCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const ReprModel model = LoadModel(cfg, data);
  const Grouping grouping = LoadGrouping(cfg, data);
  auto out = OpenOutput(cfg);
  const auto stats = ComputeGroupStats(data, grouping, model);
  const double epsilon = ResolveEpsilon(cfg, model.ForwardBatch(data.rows()), grouping);
  const ExperimentContext ctx{model, data, grouping, stats, epsilon};
  WriteSweep(cfg, ctx, out);
  return out.result;
}

CommandOutput ModifyCommand(const RunConfig& cfg) {
  const Dataset data = LoadDataset(cfg);
  const Grouping grouping = LoadGrouping(cfg, data);
  RequireFile(cfg.perturbation, "perturbation spec");
  const auto spec = PerturbationFromJson(ReadJson(cfg.perturbation));
  auto out = OpenOutput(cfg);
  const auto modified = ModifyDataset(data, grouping, spec, cfg.seed);
  SaveCsv(modified.data, out.Path("modified.csv"));
  SaveLabels(modified.grouping.labels(), out.Path("modified_labels.txt"));
  WriteJson(Json{{"source_group", spec.group},
                 {"new_group", modified.new_group},
                 {"rows_added", modified.data.size() - data.size()},
                 {"perturbation", PerturbationToJson(spec)}},
            out.Path("modification.json"));
  return out.result;
}

CommandOutput CompareCommand(const RunConfig& cfg) {
  const auto original = LoadExplanations(cfg.explanations, "explanations file");
  const auto other = LoadExplanations(cfg.other_explanations, "other explanations file");
  auto out = OpenOutput(cfg);
  auto pairs = cfg.pairs;
  if (pairs.empty()) {
    for (int i = 0; i < original.group_count(); ++i) {
      for (int j = 0; j < original.group_count(); ++j) {
        if (i != j) pairs.emplace_back(i, j);
      }
    }
  }
  WriteJson(ComparisonToJson(CompareExplanations(original, other, pairs)),
            out.Path("comparison.json"));
  return out.result;
}

CommandOutput SynthDemoCommand(const RunConfig& cfg) {
  auto out = OpenOutput(cfg);
  const auto synthetic = GenerateSynthetic(cfg.seed, cfg.points);
  const Dataset& data = synthetic.data;
  SaveCsv(data, out.Path("data.csv"));
  SaveLabels(synthetic.truth, out.Path("truth.txt"));

  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  const auto chosen = TrainSelectedEncoder(data, train, cfg.restarts, cfg.clusters);
  const ReprModel& model = chosen.fit.encoder;
  WriteJson(ModelToJson(model), out.Path("model.json"));
  WriteJson(TrainSummary(chosen, train, cfg.restarts, std::nullopt), out.Path("train.json"));

  const Matrix reps = model.ForwardBatch(data.rows());
  const Grouping grouping = KMeans(reps, {cfg.clusters, cfg.seed});
  SaveLabels(grouping.labels(), out.Path("labels.txt"));

  const auto grid = EpsilonGrid(cfg, reps);
  const auto cal = cfg.epsilon ? EpsilonCalibration{*cfg.epsilon, 0.0}
                               : CalibrateEpsilon(reps, grouping, grid);
  WriteJson(CalibrationToJson(reps, grouping, cal, grid.size()), out.Path("epsilon.json"));

  const auto stats = ComputeGroupStats(data, grouping, model);
  const ExperimentContext ctx{model, data, grouping, stats, cal.epsilon};

  RunConfig tgt_cfg = cfg;
  tgt_cfg.method = Method::kTgt;
  const auto tgt = ComputeExplanations(tgt_cfg, ctx, data, out);
  RunConfig dbm_cfg = cfg;
  dbm_cfg.method = Method::kDbm;
  const auto dbm = ComputeExplanations(dbm_cfg, ctx, data, out);

  const auto tgt_report = WriteMetrics(tgt, ctx, cfg.k, out);
  const auto dbm_report = WriteMetrics(dbm, ctx, cfg.k, out);
  WriteSweep(cfg, ctx, out);
  out.Add(EmitScatterPlots(reps, grouping.labels(),
                           TranslationOverlays(model, data, grouping, tgt), out.dir,
                           "representation"));

  WriteJson(Json{{"seed", cfg.seed},
                 {"points", cfg.points},
                 {"adjusted_rand_index", AdjustedRandIndex(grouping.labels(), synthetic.truth)},
                 {"epsilon", cal.epsilon},
                 {"tgt", SummaryEntry(tgt, tgt_report)},
                 {"dbm", SummaryEntry(dbm, dbm_report)}},
            out.Path("summary.json"));
  return out.result;
}

}  // namespace gce
