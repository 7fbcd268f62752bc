// Python bindings: NumPy arrays in and out, errors mapped to Python exceptions.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/explain.hpp"
#include "gce/groups.hpp"
#include "gce/io.hpp"
#include "gce/metrics.hpp"
#include "gce/pipeline.hpp"
#include "gce/repr.hpp"

namespace py = pybind11;
using namespace gce;

namespace {

PyObject* g_config_error = nullptr;
PyObject* g_numeric_error = nullptr;
PyObject* g_data_error = nullptr;

PyObject* NewError(py::module_& m, const char* name, PyObject* base, PyObject* builtin) {
  const std::string qualified = std::string("gce._core.") + name;
  PyObject* type = PyErr_NewException(qualified.c_str(),
                                      py::make_tuple(py::handle(base), py::handle(builtin)).ptr(),
                                      nullptr);
  m.attr(name) = py::handle(type);
  return type;
}

Dataset ToDataset(const Matrix& x) { return Dataset(x); }

GroupStats Stats(const ReprModel& model, const Matrix& x, const std::vector<int>& labels) {
  return ComputeGroupStats(Dataset(x), Grouping(labels), model);
}

py::dict ReportToDict(const MetricsReport& r) {
  py::dict d;
  d["correctness"] = r.correctness;
  d["coverage"] = r.coverage;
  d["epsilon"] = r.epsilon;
  d["mean_correctness"] = r.mean_correctness;
  d["mean_coverage"] = r.mean_coverage;
  return d;
}

py::list CurveToList(const TradeoffCurve& curve) {
  py::list points;
  for (const auto& p : curve.points) {
    py::dict d;
    d["k"] = p.k;
    d["lambda"] = p.lambda;
    d["correctness"] = p.mean_correctness;
    d["coverage"] = p.mean_coverage;
    d["similarity"] = p.similarity;
    points.append(d);
  }
  return points;
}

OptimizerConfig MakeOptimizer(double lambda, Seed seed, double learning_rate, int max_pairs,
                              int steps_per_pair, int reference) {
  OptimizerConfig cfg;
  cfg.lambda = lambda;
  cfg.seed = seed;
  cfg.learning_rate = learning_rate;
  cfg.max_pairs = max_pairs;
  cfg.steps_per_pair = steps_per_pair;
  cfg.reference = reference;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Consistent global counterfactual explanations between groups";

  PyObject* base = PyErr_NewException("gce._core.Error", PyExc_Exception, nullptr);
  m.attr("Error") = py::handle(base);
  g_config_error = NewError(m, "ConfigError", base, PyExc_ValueError);
  g_numeric_error = NewError(m, "NumericError", base, PyExc_ArithmeticError);
  g_data_error = NewError(m, "DataError", base, PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyObject* type = g_config_error;
      if (e.category() == ErrorCategory::kNumeric) type = g_numeric_error;
      if (e.category() == ErrorCategory::kData) type = g_data_error;
      PyErr_SetString(type, e.what());
    }
  });

  py::class_<ReprModel>(m, "ReprModel", "Representation r: R^d -> R^m")
      .def_static("linear", &ReprModel::Linear, py::arg("a"), py::arg("offset") = std::nullopt)
      .def_static("identity", &ReprModel::Identity, py::arg("dim"))
      .def_static(
          "load", [](const std::filesystem::path& p) { return ModelFromJson(ReadJson(p)); },
          py::arg("path"))
      .def("save", [](const ReprModel& self, const std::filesystem::path& p) {
        WriteJson(ModelToJson(self), p);
      })
      .def_property_readonly("input_dim", &ReprModel::input_dim)
      .def_property_readonly("output_dim", &ReprModel::output_dim)
      .def("forward", &ReprModel::Forward, py::arg("x"))
      .def("forward_batch", &ReprModel::ForwardBatch, py::arg("x"))
      .def(
          "loss_and_gradient",
          [](const ReprModel& self, const Vector& delta, const Vector& x_bar,
             const Vector& target) {
            const auto lg = LossAndGradient(self, delta, x_bar, target);
            return std::make_tuple(lg.loss, lg.gradient);
          },
          py::arg("delta"), py::arg("x_bar"), py::arg("target"));

  py::class_<ExplanationSet>(m, "ExplanationSet",
                             "Reference-relative basis translations between groups")
      .def(py::init<int, Eigen::Index, int>(), py::arg("group_count"), py::arg("dim"),
           py::arg("reference") = 0)
      .def_property_readonly("group_count", &ExplanationSet::group_count)
      .def_property_readonly("reference", &ExplanationSet::reference)
      .def_property_readonly("dim", &ExplanationSet::dim)
      .def_readwrite("lambda_", &ExplanationSet::lambda)
      .def_property_readonly("method",
                             [](const ExplanationSet& s) { return std::string(MethodName(s.method)); })
      .def("basis", &ExplanationSet::basis, py::arg("group"))
      .def(
          "set_basis",
          [](ExplanationSet& s, int g, const Vector& v) {
            if (v.size() != s.dim()) ThrowConfig("basis vector length mismatch");
            s.mutable_basis(g) = v;
          },
          py::arg("group"), py::arg("vector"))
      .def("construct", &ExplanationSet::Construct, py::arg("i"), py::arg("j"))
      .def("to_json", [](const ExplanationSet& s) { return ExplanationsToJson(s).dump(2); })
      .def_static(
          "from_json",
          [](const std::string& text) {
            Json doc;
            try {
              doc = Json::parse(text);
            } catch (const std::exception& e) {
              ThrowData(e.what());
            }
            return ExplanationsFromJson(doc);
          },
          py::arg("text"));

  m.def(
      "generate_synthetic",
      [](Seed seed, int n) {
        auto s = GenerateSynthetic(seed, n);
        return std::make_tuple(s.data.rows(), s.truth);
      },
      py::arg("seed") = 0, py::arg("n") = 400,
      "Four-feature causal dataset and its ground-truth labels");

  m.def(
      "standardize",
      [](const Matrix& x) {
        const auto s = Standardize(ToDataset(x));
        return std::make_tuple(s.rows(), s.standardization()->mean,
                               s.standardization()->stddev);
      },
      py::arg("x"), "Z-scored copy plus the per-feature mean and stddev");

  m.def(
      "train_encoder",
      [](const Matrix& x, Seed seed, int restarts, int clusters, int epochs, int code_dim,
         std::vector<int> hidden) {
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.epochs = epochs;
        cfg.code_dim = code_dim;
        cfg.hidden_widths = std::move(hidden);
        return TrainSelectedEncoder(ToDataset(x), cfg, restarts, clusters).fit.encoder;
      },
      py::arg("x"), py::arg("seed") = 0, py::arg("restarts") = 20, py::arg("clusters") = 4,
      py::arg("epochs") = 200, py::arg("code_dim") = 2, py::arg("hidden") = std::vector<int>{16},
      "Trains autoencoders and returns the encoder that best separates `clusters` groups");

  m.def(
      "kmeans",
      [](const Matrix& points, int k, Seed seed) { return KMeans(points, {k, seed}).labels(); },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def("adjusted_rand_index", &AdjustedRandIndex, py::arg("a"), py::arg("b"));

  m.def(
      "calibrate_epsilon",
      [](const Matrix& reps, const std::vector<int>& labels, std::vector<double> grid) {
        if (grid.empty()) grid = DefaultEpsilonGrid(reps);
        const auto cal = CalibrateEpsilon(reps, Grouping(labels), grid);
        return std::make_tuple(cal.epsilon, cal.min_self_similarity);
      },
      py::arg("reps"), py::arg("labels"), py::arg("grid") = std::vector<double>{},
      "Smallest grid epsilon at which every group's self-similarity reaches 0.95");

  m.def(
      "dbm",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels, int reference) {
        return Dbm(Stats(model, x, labels), reference);
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("reference") = 0,
      "Difference-between-means explanations");

  m.def(
      "tgt",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels, double lambda,
         Seed seed, double learning_rate, int max_pairs, int steps_per_pair, int reference) {
        return TgtOptimize(model, Stats(model, x, labels),
                           MakeOptimizer(lambda, seed, learning_rate, max_pairs,
                                         steps_per_pair, reference));
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("lambda_") = 0.0,
      py::arg("seed") = 0, py::arg("learning_rate") = 0.05, py::arg("max_pairs") = 4000,
      py::arg("steps_per_pair") = 50, py::arg("reference") = 0,
      "Transitive global translations with an l1 penalty");

  m.def(
      "tune_lambda",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels,
         double epsilon, std::optional<int> k, std::vector<double> grid, Seed seed,
         double tie_tolerance) {
        if (grid.empty()) grid = DefaultLambdaGrid();
        const Dataset data(x);
        const Grouping grouping(labels);
        const auto stats = ComputeGroupStats(data, grouping, model);
        const ExperimentContext ctx{model, data, grouping, stats, epsilon};
        OptimizerConfig cfg;
        cfg.seed = seed;
        auto choice = TuneLambda(ctx, k, grid, cfg, tie_tolerance);
        return std::make_tuple(choice.lambda, std::move(choice.explanations),
                               choice.grid_correctness);
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("epsilon"),
      py::arg("k") = std::nullopt, py::arg("grid") = std::vector<double>{}, py::arg("seed") = 0,
      py::arg("tie_tolerance") = kDefaultTieTolerance,
      "Returns (lambda, explanations, mean correctness per grid value)");

  m.def(
      "sparsity_sweep",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels,
         double epsilon, const std::vector<int>& k_levels, std::vector<double> grid, Seed seed) {
        if (grid.empty()) grid = DefaultLambdaGrid();
        const Dataset data(x);
        const Grouping grouping(labels);
        const auto stats = ComputeGroupStats(data, grouping, model);
        const ExperimentContext ctx{model, data, grouping, stats, epsilon};
        OptimizerConfig cfg;
        cfg.seed = seed;
        const auto sweep = SparsitySweep(ctx, k_levels, grid, cfg);
        py::dict d;
        d["tgt"] = CurveToList(sweep.tgt);
        d["dbm"] = CurveToList(sweep.dbm);
        return d;
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("epsilon"),
      py::arg("k_levels") = std::vector<int>{1, 2, 3, 4},
      py::arg("grid") = std::vector<double>{}, py::arg("seed") = 0);

  m.def(
      "correctness",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels, int i, int j,
         const Vector& delta, double epsilon) {
        return Correctness(model, Dataset(x), Grouping(labels), i, j, delta, epsilon);
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("i"), py::arg("j"),
      py::arg("delta"), py::arg("epsilon"));

  m.def(
      "coverage",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels, int i, int j,
         const Vector& delta, double epsilon) {
        return Coverage(model, Dataset(x), Grouping(labels), i, j, delta, epsilon);
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("i"), py::arg("j"),
      py::arg("delta"), py::arg("epsilon"));

  m.def(
      "pairwise_report",
      [](const ReprModel& model, const Matrix& x, const std::vector<int>& labels,
         const ExplanationSet& explanations, double epsilon, std::optional<int> k) {
        return ReportToDict(
            PairwiseReport(model, Dataset(x), Grouping(labels), explanations, epsilon, k));
      },
      py::arg("model"), py::arg("x"), py::arg("labels"), py::arg("explanations"),
      py::arg("epsilon"), py::arg("k") = std::nullopt);

  m.def("similarity", &Similarity, py::arg("e1"), py::arg("e2"));
  m.def("threshold_k", &ThresholdK, py::arg("delta"), py::arg("k"));
  m.def("soft_threshold", &SoftThreshold, py::arg("v"), py::arg("threshold"));

  m.def(
      "modify_dataset",
      [](const Matrix& x, const std::vector<int>& labels, int group,
         const std::vector<std::tuple<int, double, double>>& edits, Seed seed) {
        PerturbationSpec spec;
        spec.group = group;
        for (const auto& [f, offset, jitter] : edits) spec.edits.push_back({f, offset, jitter});
        auto mod = ModifyDataset(Dataset(x), Grouping(labels), spec, seed);
        return std::make_tuple(mod.data.rows(), mod.grouping.labels(), mod.new_group);
      },
      py::arg("x"), py::arg("labels"), py::arg("group"), py::arg("edits"), py::arg("seed") = 0,
      "Appends a perturbed copy of `group`; edits are (feature, offset, jitter) triples");

  m.def(
      "compare_explanations",
      [](const ExplanationSet& original, const ExplanationSet& other,
         const std::vector<std::pair<int, int>>& pairs) {
        const auto cmp = CompareExplanations(original, other, pairs);
        py::list out;
        for (const auto& p : cmp.pairs) {
          py::dict d;
          d["from"] = p.from;
          d["to"] = p.to;
          d["comparable"] = p.comparable;
          d["scale"] = p.scale;
          d["scaled_difference"] = p.scaled_difference;
          out.append(d);
        }
        return out;
      },
      py::arg("original"), py::arg("other"), py::arg("pairs"));
}
