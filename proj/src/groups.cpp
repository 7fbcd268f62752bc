#include "gce/groups.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/metrics.hpp"
#include "gce/repr.hpp"

namespace gce {

Grouping::Grouping(std::vector<int> labels) : labels_(std::move(labels)) {
  int max_label = -1;
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    if (labels_[p] < -1) {
      ThrowData("label " + std::to_string(labels_[p]) + " at row " +
                std::to_string(p + 1) + " is invalid");
    }
    max_label = std::max(max_label, labels_[p]);
  }
  count_ = max_label + 1;
  if (count_ < 2) ThrowData("a grouping needs at least two groups");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count_), 0);
  for (int label : labels_) {
    if (label >= 0) ++sizes[static_cast<std::size_t>(label)];
  }
  for (int g = 0; g < count_; ++g) {
    if (sizes[static_cast<std::size_t>(g)] == 0) {
      ThrowData("group " + std::to_string(g) + " has no members");
    }
  }
}

std::vector<Eigen::Index> Grouping::Members(int group) const {
  if (group < 0 || group >= count_) {
    ThrowConfig("group " + std::to_string(group) + " does not exist");
  }
  std::vector<Eigen::Index> out;
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    if (labels_[p] == group) out.push_back(static_cast<Eigen::Index>(p));
  }
  return out;
}

std::vector<int> LoadLabels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowConfig("cannot open labels file " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    int label = 0;
    std::string rest;
    if (!(fields >> label) || (fields >> rest)) {
      ThrowData(path.string() + ": line " + std::to_string(line_no) +
                " is not a single integer label");
    }
    labels.push_back(label);
  }
  return labels;
}

void SaveLabels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) ThrowConfig("cannot write " + path.string());
  for (int label : labels) out << label << '\n';
}

namespace {

// Returns empty labels when some cluster ended up empty.
std::vector<int> LloydOnce(const Matrix& points, int k, int max_iterations,
                           std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = points.row(pick(rng));
  Vector nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index chosen = 0;
    if (nearest.sum() > 0.0) {
      std::discrete_distribution<Eigen::Index> weighted(nearest.data(),
                                                        nearest.data() + n);
      chosen = weighted(rng);
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = points.row(chosen);
    nearest = nearest.cwiseMin(
        (points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Eigen::Index p = 0; p < n; ++p) {
      Eigen::Index best = 0;
      (centers.rowwise() - points.row(p)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[static_cast<std::size_t>(p)] != static_cast<int>(best)) {
        labels[static_cast<std::size_t>(p)] = static_cast<int>(best);
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index p = 0; p < n; ++p) {
      const int label = labels[static_cast<std::size_t>(p)];
      sums.row(label) += points.row(p);
      ++sizes[static_cast<std::size_t>(label)];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) return {};
      centers.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
    if (!changed) break;
  }
  return labels;
}

}  // namespace

Grouping KMeans(const Matrix& points, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (n < 2) ThrowConfig("k-means needs at least two points");
  if (options.k < 2 || options.k > n) {
    ThrowConfig("k-means needs 2 <= k <= n, got k = " + std::to_string(options.k));
  }
  if (!points.allFinite()) ThrowNumeric("k-means input contains non-finite values");
  std::mt19937_64 rng(options.seed);
  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    auto labels = LloydOnce(points, options.k, options.max_iterations, rng);
    if (!labels.empty()) return Grouping(std::move(labels));
  }
  ThrowNumeric("k-means left a cluster empty after " +
               std::to_string(options.max_restarts + 1) + " attempts");
}

double AdjustedRandIndex(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) ThrowConfig("labelings have different lengths");
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t p = 0; p < a.size(); ++p) {
    joint[{a[p], b[p]}] += 1.0;
    rows[a[p]] += 1.0;
    cols[b[p]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, count] : joint) index += choose2(count);
  double sum_rows = 0.0;
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  double sum_cols = 0.0;
  for (const auto& [key, count] : cols) sum_cols += choose2(count);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

GroupStats ComputeGroupStats(const Dataset& data, const Grouping& grouping,
                             const ReprModel& model) {
  if (static_cast<Eigen::Index>(grouping.size()) != data.size()) {
    ThrowConfig("grouping has " + std::to_string(grouping.size()) +
                " labels for " + std::to_string(data.size()) + " rows");
  }
  const Matrix reps = model.ForwardBatch(data.rows());
  const int l = grouping.count();
  GroupStats stats;
  stats.x_bar.assign(static_cast<std::size_t>(l), Vector::Zero(data.dim()));
  stats.r_bar.assign(static_cast<std::size_t>(l), Vector::Zero(model.output_dim()));
  stats.counts.assign(static_cast<std::size_t>(l), 0);
  for (Eigen::Index p = 0; p < data.size(); ++p) {
    const int g = grouping.labels()[static_cast<std::size_t>(p)];
    if (g < 0) continue;
    const auto gi = static_cast<std::size_t>(g);
    stats.x_bar[gi] += data.rows().row(p).transpose();
    stats.r_bar[gi] += reps.row(p).transpose();
    ++stats.counts[gi];
  }
  for (std::size_t g = 0; g < stats.counts.size(); ++g) {
    if (stats.counts[g] == 0) ThrowConfig("group " + std::to_string(g) + " is empty");
    stats.x_bar[g] /= static_cast<double>(stats.counts[g]);
    stats.r_bar[g] /= static_cast<double>(stats.counts[g]);
  }
  return stats;
}

namespace {

Matrix GatherRows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  }
  return out;
}

// Squared distance from each group member to its nearest other member.
std::vector<double> NearestOtherMember(const Matrix& reps) {
  const Eigen::Index n = reps.rows();
  std::vector<double> out(static_cast<std::size_t>(n),
                          std::numeric_limits<double>::infinity());
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a == b) continue;
      const double d2 = (reps.row(a) - reps.row(b)).squaredNorm();
      out[static_cast<std::size_t>(a)] = std::min(out[static_cast<std::size_t>(a)], d2);
    }
  }
  return out;
}

void CheckReps(const Matrix& reps, const Grouping& grouping) {
  if (static_cast<Eigen::Index>(grouping.size()) != reps.rows()) {
    ThrowConfig("grouping has " + std::to_string(grouping.size()) + " labels for " +
                std::to_string(reps.rows()) + " representations");
  }
}

}  // namespace

double SelfSimilarity(const Matrix& reps, const Grouping& grouping, int group,
                      double epsilon) {
  CheckReps(reps, grouping);
  const Matrix members = GatherRows(reps, grouping.Members(group));
  return MatchFraction(members, members, epsilon, /*exclude_same_index=*/true);
}

EpsilonCalibration CalibrateEpsilon(const Matrix& reps, const Grouping& grouping,
                                    const std::vector<double>& grid) {
  CheckReps(reps, grouping);
  if (grid.empty()) ThrowConfig("epsilon grid is empty");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] > 0.0)) ThrowConfig("epsilon grid values must be positive");
    if (g > 0 && !(grid[g] > grid[g - 1])) {
      ThrowConfig("epsilon grid must be strictly ascending");
    }
  }
  constexpr double kFloor = 0.95;

  std::vector<std::vector<double>> nearest;
  for (int g = 0; g < grouping.count(); ++g) {
    auto d2 = NearestOtherMember(GatherRows(reps, grouping.Members(g)));
    std::sort(d2.begin(), d2.end());
    nearest.push_back(std::move(d2));
  }
  double best_min = 0.0;
  for (double eps : grid) {
    double min_sim = 1.0;
    for (const auto& d2 : nearest) {
      const auto hits = std::upper_bound(d2.begin(), d2.end(), eps) - d2.begin();
      min_sim = std::min(min_sim, static_cast<double>(hits) / static_cast<double>(d2.size()));
    }
    best_min = std::max(best_min, min_sim);
    if (min_sim >= kFloor) return {eps, min_sim};
  }
  std::ostringstream msg;
  msg << "epsilon grid exhausted: best minimum self-similarity " << best_min
      << " < " << kFloor;
  ThrowNumeric(msg.str());
}

std::vector<double> DefaultEpsilonGrid(const Matrix& reps) {
  double scale = 0.0;
  if (reps.rows() > 0) {
    scale = (reps.colwise().maxCoeff() - reps.colwise().minCoeff()).squaredNorm();
  }
  if (!(scale > 0.0)) scale = 1.0;
  constexpr int kCount = 60;
  std::vector<double> grid;
  grid.reserve(kCount);
  for (int g = 0; g < kCount; ++g) {
    const double exponent = -6.0 + 8.0 * g / (kCount - 1);
    grid.push_back(scale * std::pow(10.0, exponent));
  }
  return grid;
}

}  // namespace gce
