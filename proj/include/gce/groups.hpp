#pragma once

#include <filesystem>
#include <vector>

#include "gce/types.hpp"

namespace gce {

class Dataset;
class ReprModel;

/// Group label per point. Labels run over 0..count-1; -1 marks a point that
/// belongs to no group.
class Grouping {
 public:
  Grouping() = default;
  /// Validates: at least two groups, each non-empty, labels in [-1, count).
  explicit Grouping(std::vector<int> labels);

  const std::vector<int>& labels() const { return labels_; }
  int count() const { return count_; }
  std::size_t size() const { return labels_.size(); }

  /// Row indices belonging to `group`, ascending.
  std::vector<Eigen::Index> Members(int group) const;

 private:
  std::vector<int> labels_;
  int count_ = 0;
};

std::vector<int> LoadLabels(const std::filesystem::path& path);
void SaveLabels(const std::vector<int>& labels, const std::filesystem::path& path);

struct KMeansOptions {
  int k = 2;
  Seed seed = 0;
  int max_iterations = 300;
  /// Reseeded attempts allowed when a cluster ends up empty.
  int max_restarts = 10;
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic per seed.
Grouping KMeans(const Matrix& points, const KMeansOptions& options);

/// Adjusted Rand index between two labelings of the same points.
double AdjustedRandIndex(const std::vector<int>& a, const std::vector<int>& b);

struct GroupStats {
  std::vector<Vector> x_bar;  // feature-space means
  std::vector<Vector> r_bar;  // means of the images r(x), not r(mean)
  std::vector<std::size_t> counts;

  int group_count() const { return static_cast<int>(counts.size()); }
};

GroupStats ComputeGroupStats(const Dataset& data, const Grouping& grouping,
                             const ReprModel& model);

/// Fraction of points of `group` whose image has another point of the same
/// group within squared distance epsilon.
double SelfSimilarity(const Matrix& reps, const Grouping& grouping, int group,
                      double epsilon);

struct EpsilonCalibration {
  double epsilon = 0.0;
  double min_self_similarity = 0.0;
};

/// Smallest grid value at which every group's self-similarity is >= 0.95.
EpsilonCalibration CalibrateEpsilon(const Matrix& reps, const Grouping& grouping,
                                    const std::vector<double>& grid);

/// 60 log-spaced values from 1e-6 to 1e2, times the squared diameter of the
/// bounding box of `reps`.
std::vector<double> DefaultEpsilonGrid(const Matrix& reps);

}  // namespace gce
