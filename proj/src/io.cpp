#include "gce/io.hpp"

#include <charconv>
#include <fstream>

#include "gce/error.hpp"

namespace gce {
namespace {

Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Vector VectorFromJson(const Json& doc, const char* what) {
  if (!doc.is_array()) ThrowData(std::string(what) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t k = 0; k < doc.size(); ++k) {
    if (!doc[k].is_number()) ThrowData(std::string(what) + " must contain only numbers");
    v[static_cast<Eigen::Index>(k)] = doc[k].get<double>();
  }
  return v;
}

Json MatrixToJson(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(VectorToJson(m.row(r).transpose()));
  }
  return out;
}

template <typename T>
T Field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    ThrowData(std::string("missing field '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    ThrowData(std::string("field '") + key + "' has the wrong type");
  }
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowConfig("cannot write " + path.string());
  return out;
}

}  // namespace

std::string FormatDouble(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

Json ModelToJson(const ReprModel& model) {
  if (model.kind() == ReprModel::Kind::kBlackBox) {
    ThrowConfig("black-box models are configured by command, not saved to file");
  }
  Json doc;
  doc["kind"] = model.kind() == ReprModel::Kind::kLinear ? "linear" : "feedforward";
  doc["dims"] = {{"input", model.input_dim()}, {"output", model.output_dim()}};
  Json layers = Json::array();
  for (const auto& layer : model.layers()) {
    Json entry;
    entry["rows"] = layer.weights.rows();
    entry["cols"] = layer.weights.cols();
    Json weights = Json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        weights.push_back(layer.weights(r, c));
      }
    }
    entry["weights"] = std::move(weights);
    entry["bias"] = model.kind() == ReprModel::Kind::kLinear && !model.has_offset()
                        ? Json::array()
                        : VectorToJson(layer.bias);
    entry["activation"] = std::string(ActivationName(layer.activation));
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

ReprModel ModelFromJson(const Json& doc) {
  const auto kind = Field<std::string>(doc, "kind");
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    ThrowData("model file needs a 'layers' array");
  }
  std::vector<DenseLayer> layers;
  std::vector<bool> has_bias;
  for (const auto& entry : doc["layers"]) {
    const auto rows = Field<Eigen::Index>(entry, "rows");
    const auto cols = Field<Eigen::Index>(entry, "cols");
    if (rows <= 0 || cols <= 0) ThrowData("layer shapes must be positive");
    const Vector flat = VectorFromJson(entry.at("weights"), "weights");
    if (flat.size() != rows * cols) {
      ThrowData("layer weights have " + std::to_string(flat.size()) + " entries, expected " +
                std::to_string(rows * cols));
    }
    DenseLayer layer;
    layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(flat.data(), rows, cols);
    Vector bias = entry.contains("bias") ? VectorFromJson(entry["bias"], "bias") : Vector();
    has_bias.push_back(bias.size() > 0);
    layer.bias = bias.size() > 0 ? bias : Vector::Zero(rows);
    layer.activation = ParseActivation(Field<std::string>(entry, "activation"));
    layers.push_back(std::move(layer));
  }
  if (layers.empty()) ThrowData("model file has no layers");

  ReprModel model = [&] {
    try {
      if (kind == "linear") {
        if (layers.size() != 1 || layers[0].activation != Activation::kIdentity) {
          ThrowData("a linear model is a single identity-activation layer");
        }
        if (has_bias[0]) return ReprModel::Linear(layers[0].weights, layers[0].bias);
        return ReprModel::Linear(layers[0].weights);
      }
      if (kind == "feedforward") return ReprModel::FeedForward(std::move(layers));
    } catch (const Error& e) {
      ThrowData(std::string("invalid model: ") + e.what());
    }
    ThrowData("unknown model kind '" + kind + "'");
  }();
  if (doc.contains("dims")) {
    const auto& dims = doc["dims"];
    if (Field<Eigen::Index>(dims, "input") != model.input_dim() ||
        Field<Eigen::Index>(dims, "output") != model.output_dim()) {
      ThrowData("model 'dims' disagree with its layers");
    }
  }
  return model;
}

Json ExplanationsToJson(const ExplanationSet& set) {
  Json doc;
  doc["method"] = std::string(MethodName(set.method));
  doc["reference"] = set.reference();
  doc["lambda"] = set.lambda;
  Json basis = Json::array();
  for (const auto& v : set.StoredBasis()) basis.push_back(VectorToJson(v));
  doc["basis"] = std::move(basis);
  doc["feature_names"] = set.feature_names;
  return doc;
}

ExplanationSet ExplanationsFromJson(const Json& doc) {
  const auto reference = Field<int>(doc, "reference");
  if (!doc.contains("basis") || !doc["basis"].is_array() || doc["basis"].empty()) {
    ThrowData("explanation file needs a non-empty 'basis' array");
  }
  const auto& basis = doc["basis"];
  const int groups = static_cast<int>(basis.size()) + 1;
  const Vector first = VectorFromJson(basis[0], "basis");
  ExplanationSet set = [&] {
    try {
      return ExplanationSet(groups, first.size(), reference);
    } catch (const Error& e) {
      ThrowData(std::string("invalid explanation set: ") + e.what());
    }
  }();
  std::size_t slot = 0;
  for (int g = 0; g < groups; ++g) {
    if (g == reference) continue;
    Vector v = VectorFromJson(basis[slot++], "basis");
    if (v.size() != first.size()) ThrowData("basis vectors differ in length");
    set.mutable_basis(g) = std::move(v);
  }
  set.method = ParseMethod(Field<std::string>(doc, "method"));
  set.lambda = Field<double>(doc, "lambda");
  if (doc.contains("feature_names")) {
    set.feature_names = doc["feature_names"].get<std::vector<std::string>>();
  }
  return set;
}

Json MetricsToJson(const MetricsReport& report) {
  Json doc;
  doc["epsilon"] = report.epsilon;
  doc["mean_correctness"] = report.mean_correctness;
  doc["mean_coverage"] = report.mean_coverage;
  doc["correctness"] = MatrixToJson(report.correctness);
  doc["coverage"] = MatrixToJson(report.coverage);
  return doc;
}

Json TradeoffToJson(const TradeoffCurve& curve) {
  Json doc;
  doc["method"] = std::string(MethodName(curve.method));
  Json points = Json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"k", p.k},
                      {"lambda", p.lambda},
                      {"correctness", p.mean_correctness},
                      {"coverage", p.mean_coverage},
                      {"similarity", p.similarity}});
  }
  doc["points"] = std::move(points);
  return doc;
}

Json ComparisonToJson(const ExplanationComparison& comparison) {
  Json doc;
  doc["scale"] = comparison.scale_rule;
  doc["max_scaled_difference"] = comparison.MaxScaledDifference();
  Json pairs = Json::array();
  for (const auto& p : comparison.pairs) {
    Json entry{{"i", p.from}, {"j", p.to}, {"comparable", p.comparable}};
    if (p.comparable) {
      entry["scale"] = p.scale;
      entry["scaled_difference"] = VectorToJson(p.scaled_difference);
    }
    pairs.push_back(std::move(entry));
  }
  doc["pairs"] = std::move(pairs);
  return doc;
}

Json PerturbationToJson(const PerturbationSpec& spec) {
  Json edits = Json::array();
  for (const auto& e : spec.edits) {
    edits.push_back({{"feature", e.feature}, {"offset", e.offset}, {"jitter", e.jitter}});
  }
  return Json{{"group", spec.group}, {"edits", std::move(edits)}};
}

PerturbationSpec PerturbationFromJson(const Json& doc) {
  PerturbationSpec spec;
  spec.group = Field<int>(doc, "group");
  if (!doc.contains("edits") || !doc["edits"].is_array()) {
    ThrowData("perturbation spec needs an 'edits' array");
  }
  for (const auto& e : doc["edits"]) {
    spec.edits.push_back({Field<int>(e, "feature"), Field<double>(e, "offset"),
                          e.contains("jitter") ? Field<double>(e, "jitter") : 0.0});
  }
  return spec;
}

Json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowConfig("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    ThrowData(path.string() + ": " + e.what());
  }
}

void WriteJson(const Json& doc, const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << doc.dump(2) << '\n';
}

void WritePairwiseCsv(const ExplanationSet& set, const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << "i,j,feature,value\n";
  for (int i = 0; i < set.group_count(); ++i) {
    for (int j = 0; j < set.group_count(); ++j) {
      if (i == j) continue;
      const Vector delta = set.Construct(i, j);
      for (Eigen::Index f = 0; f < delta.size(); ++f) {
        const std::string name = static_cast<std::size_t>(f) < set.feature_names.size()
                                      ? set.feature_names[static_cast<std::size_t>(f)]
                                      : std::to_string(f);
        out << i << ',' << j << ',' << name << ',' << FormatDouble(delta[f]) << '\n';
      }
    }
  }
}

void WriteMetricsCsv(const MetricsReport& report, const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << "i,j,correctness,coverage\n";
  for (Eigen::Index i = 0; i < report.correctness.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.correctness.cols(); ++j) {
      if (i == j) continue;
      out << i << ',' << j << ',' << FormatDouble(report.correctness(i, j)) << ','
          << FormatDouble(report.coverage(i, j)) << '\n';
    }
  }
}

void WriteTradeoffCsv(const TradeoffCurve& curve, const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << "k,lambda,correctness,coverage,similarity\n";
  for (const auto& p : curve.points) {
    out << p.k << ',' << FormatDouble(p.lambda) << ',' << FormatDouble(p.mean_correctness)
        << ',' << FormatDouble(p.mean_coverage) << ',' << FormatDouble(p.similarity) << '\n';
  }
}

}  // namespace gce
