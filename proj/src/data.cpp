#include "gce/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gce/error.hpp"
#include "gce/explain.hpp"

namespace gce {

Dataset::Dataset(Matrix rows, std::vector<std::string> names)
    : rows_(std::move(rows)), names_(std::move(names)) {
  if (names_.empty()) {
    for (Eigen::Index c = 0; c < rows_.cols(); ++c) {
      names_.push_back("x" + std::to_string(c + 1));
    }
  }
  if (static_cast<Eigen::Index>(names_.size()) != rows_.cols()) {
    ThrowData("dataset has " + std::to_string(rows_.cols()) + " columns but " +
              std::to_string(names_.size()) + " feature names");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) ThrowData("duplicate feature name '" + name + "'");
  }
  if (!rows_.allFinite()) ThrowData("dataset contains non-finite values");
}

SyntheticData GenerateSynthetic(Seed seed, int n) {
  if (n < 4) ThrowConfig("synthetic dataset needs at least 4 points");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> cause_noise(0.0, 0.2);
  std::normal_distribution<double> nuisance(0.0, 0.5);
  std::normal_distribution<double> proxy_noise(0.0, 0.05);

  Matrix rows(n, 4);
  std::vector<int> truth(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const double x1 = (coin(rng) ? 1.0 : 0.0) + cause_noise(rng);
    const double x2 = (coin(rng) ? 1.0 : 0.0) + cause_noise(rng);
    const double x3 = nuisance(rng);
    const double x4 = x1 + proxy_noise(rng);
    rows.row(p) << x1, x2, x3, x4;
    const int b1 = static_cast<int>(std::lround(std::clamp(x1, 0.0, 1.0)));
    const int b2 = static_cast<int>(std::lround(std::clamp(x2, 0.0, 1.0)));
    truth[static_cast<std::size_t>(p)] = 2 * b1 + b2;
  }
  return {Dataset(std::move(rows), {"x1", "x2", "x3", "x4"}), std::move(truth)};
}

namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> SplitCommas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset LoadCsv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) ThrowConfig("cannot open dataset " + path.string());

  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto cells = SplitCommas(line);
    if (has_header && names.empty() && values.empty()) {
      names = std::move(cells);
      width = names.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      ThrowData(path.string() + ": row " + std::to_string(line_no) + " has " +
                std::to_string(cells.size()) + " cells, expected " +
                std::to_string(width));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& cell = cells[c];
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, row[c]);
      const std::string where = path.string() + ": row " + std::to_string(line_no) +
                                ", column " + std::to_string(c + 1);
      if (cell.empty()) ThrowData(where + ": missing value");
      if (ec != std::errc() || ptr != last) {
        ThrowData(where + ": '" + cell + "' is not a number");
      }
      if (!std::isfinite(row[c])) ThrowData(where + ": non-finite value '" + cell + "'");
    }
    values.push_back(std::move(row));
  }
  if (values.empty()) ThrowData(path.string() + ": no data rows");

  Matrix rows(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
    }
  }
  return Dataset(std::move(rows), std::move(names));
}

void SaveCsv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) ThrowConfig("cannot write " + path.string());
  const auto& names = data.feature_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), data.rows()(r, c));
      if (c) out << ',';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

Dataset Standardize(const Dataset& data) {
  const Eigen::Index n = data.size();
  if (n == 0) ThrowConfig("cannot standardize an empty dataset");
  const Vector mean = data.rows().colwise().mean().transpose();
  Matrix centered = data.rows().rowwise() - mean.transpose();
  Vector stddev = (centered.colwise().squaredNorm() / static_cast<double>(n))
                      .cwiseSqrt()
                      .transpose();
  std::vector<bool> constant(static_cast<std::size_t>(data.dim()), false);
  for (Eigen::Index c = 0; c < data.dim(); ++c) {
    if (stddev[c] == 0.0) {
      stddev[c] = 1.0;
      constant[static_cast<std::size_t>(c)] = true;
    }
  }
  Matrix z = centered.array().rowwise() / stddev.transpose().array();

  Standardization applied{mean, stddev, constant};
  if (const auto& prior = data.standardization()) {
    // raw = prior.mean + prior.std * (applied.mean + applied.std * z)
    applied.mean = prior->mean + prior->stddev.cwiseProduct(mean);
    applied.stddev = prior->stddev.cwiseProduct(stddev);
    for (std::size_t c = 0; c < constant.size(); ++c) {
      applied.constant[c] = constant[c] || prior->constant[c];
    }
  }
  Dataset out(std::move(z), data.feature_names());
  out.set_standardization(std::move(applied));
  return out;
}

Vector TranslationToRaw(const Standardization& s, const Vector& delta) {
  if (delta.size() != s.stddev.size()) ThrowConfig("translation length mismatch");
  return delta.cwiseProduct(s.stddev);
}

Vector TranslationToStandardized(const Standardization& s, const Vector& delta) {
  if (delta.size() != s.stddev.size()) ThrowConfig("translation length mismatch");
  return delta.cwiseQuotient(s.stddev);
}

void PerturbationSpec::Validate(Eigen::Index dim) const {
  std::set<int> seen;
  for (const auto& edit : edits) {
    if (edit.feature < 0 || edit.feature >= dim) {
      ThrowConfig("perturbation feature index " + std::to_string(edit.feature) +
                  " out of range [0, " + std::to_string(dim) + ")");
    }
    if (!seen.insert(edit.feature).second) {
      ThrowConfig("perturbation edits feature " + std::to_string(edit.feature) +
                  " twice");
    }
    if (!(edit.jitter >= 0.0) || !std::isfinite(edit.offset)) {
      ThrowConfig("perturbation jitter must be nonnegative and offsets finite");
    }
  }
}

ModifiedDataset ModifyDataset(const Dataset& data, const Grouping& grouping,
                              const PerturbationSpec& spec, Seed seed) {
  spec.Validate(data.dim());
  if (static_cast<Eigen::Index>(grouping.size()) != data.size()) {
    ThrowConfig("grouping does not cover the dataset rows");
  }
  if (spec.group < 0 || spec.group >= grouping.count()) {
    ThrowConfig("perturbation group " + std::to_string(spec.group) + " does not exist");
  }
  const auto members = grouping.Members(spec.group);
  const auto copies = static_cast<Eigen::Index>(members.size());

  Matrix rows(data.size() + copies, data.dim());
  rows.topRows(data.size()) = data.rows();
  std::mt19937_64 rng(seed);
  for (Eigen::Index c = 0; c < copies; ++c) {
    Eigen::Index dst = data.size() + c;
    rows.row(dst) = data.rows().row(members[static_cast<std::size_t>(c)]);
    for (const auto& edit : spec.edits) {
      double shift = edit.offset;
      if (edit.jitter > 0.0) {
        shift += std::uniform_real_distribution<double>(-edit.jitter, edit.jitter)(rng);
      }
      rows(dst, edit.feature) += shift;
    }
  }

  std::vector<int> labels = grouping.labels();
  const int new_group = grouping.count();
  labels.insert(labels.end(), static_cast<std::size_t>(copies), new_group);

  ModifiedDataset out{Dataset(std::move(rows), data.feature_names()),
                      Grouping(std::move(labels)), new_group};
  if (data.standardization()) out.data.set_standardization(*data.standardization());
  return out;
}

double ExplanationComparison::MaxScaledDifference() const {
  double best = 0.0;
  for (const auto& pair : pairs) {
    if (pair.comparable) best = std::max(best, pair.scaled_difference.maxCoeff());
  }
  return best;
}

ExplanationComparison CompareExplanations(
    const ExplanationSet& original, const ExplanationSet& other,
    const std::vector<std::pair<int, int>>& pairs) {
  if (original.dim() != other.dim()) {
    ThrowConfig("explanation sets have different feature dimensions");
  }
  ExplanationComparison out;
  out.scale_rule = "max_abs_original";
  for (const auto& [i, j] : pairs) {
    if (std::max(i, j) >= std::min(original.group_count(), other.group_count())) {
      ThrowConfig("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                  ") is not valid in both explanation sets");
    }
    const Vector base = original.Construct(i, j);
    PairComparison cmp{i, j, false, base.cwiseAbs().maxCoeff(), {}};
    if (cmp.scale > 0.0) {
      cmp.comparable = true;
      cmp.scaled_difference = (other.Construct(i, j) - base).cwiseAbs() / cmp.scale;
    }
    out.pairs.push_back(std::move(cmp));
  }
  return out;
}

}  // namespace gce
