#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gce/types.hpp"

namespace gce {

class Dataset;
class Grouping;
class ReprModel;
struct GroupStats;

enum class Method { kTgt, kDbm };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);

/// A consistent family of translations between l groups, stored as l-1
/// basis vectors relative to a reference group. basis(g) is the translation
/// reference -> g; every other pairwise translation is derived from these.
class ExplanationSet {
 public:
  ExplanationSet() = default;
  ExplanationSet(int group_count, Eigen::Index dim, int reference = 0);

  int group_count() const { return group_count_; }
  int reference() const { return reference_; }
  Eigen::Index dim() const { return dim_; }

  Method method = Method::kTgt;
  double lambda = 0.0;
  std::vector<std::string> feature_names;

  /// Translation reference -> g. Zero for the reference itself.
  const Vector& basis(int group) const;
  Vector& mutable_basis(int group);
  /// The l-1 stored vectors in ascending group order, reference skipped.
  std::vector<Vector> StoredBasis() const;

  /// delta_{i->j}. Rejects i == j.
  Vector Construct(int i, int j) const;

  /// Distributes a gradient step on delta_{i->j} onto the basis vectors it
  /// was built from.
  void ApplyUpdate(int i, int j, const Vector& gradient, double step);

  /// Soft-thresholds every stored basis vector by `threshold`.
  void Shrink(double threshold);

  bool AllFinite() const;

 private:
  void CheckGroup(int group) const;

  int group_count_ = 0;
  Eigen::Index dim_ = 0;
  int reference_ = 0;
  std::vector<Vector> basis_;  // indexed by group id; basis_[reference_] == 0
};

/// sign(v) * max(|v| - threshold, 0), elementwise.
Vector SoftThreshold(const Vector& v, double threshold);

/// Keeps the k largest-magnitude entries (lower index wins ties).
Vector ThresholdK(const Vector& delta, int k);

/// Difference between the group means, relative to `reference`.
ExplanationSet Dbm(const GroupStats& stats, int reference = 0);

struct OptimizerConfig {
  double learning_rate = 0.05;
  double lambda = 0.0;
  /// Hard cap on sampled pairs.
  int max_pairs = 4000;
  /// Gradient steps taken on each sampled pair.
  int steps_per_pair = 50;
  /// Sampled pairs per loss window.
  int window = 20;
  /// Windows compared when testing for convergence.
  int patience = 10;
  double tolerance = 1e-4;
  Seed seed = 0;
  int reference = 0;

  void Validate() const;
};

struct OptimizerTrace {
  int pairs_sampled = 0;
  bool converged = false;
  double final_window_loss = 0.0;
};

ExplanationSet TgtOptimize(const ReprModel& model, const GroupStats& stats,
                           const OptimizerConfig& cfg,
                           OptimizerTrace* trace = nullptr);

/// Shared inputs for lambda tuning and sparsity sweeps.
struct ExperimentContext {
  const ReprModel& model;
  const Dataset& data;
  const Grouping& grouping;
  const GroupStats& stats;
  double epsilon = 0.0;
};

struct LambdaChoice {
  double lambda = 0.0;
  ExplanationSet explanations;
  double mean_correctness = 0.0;
  std::vector<double> grid_correctness;  // aligned with the grid
};

/// Scores within this much of the best mean correctness count as ties.
inline constexpr double kDefaultTieTolerance = 0.02;

/// Runs TGT for every lambda in the grid and keeps the one whose k-sparse
/// pairwise translations have the best mean correctness. Scores within
/// `tie_tolerance` of the best are ties, and ties go to the larger lambda.
/// `k` unset means no thresholding.
LambdaChoice TuneLambda(const ExperimentContext& ctx, std::optional<int> k,
                        const std::vector<double>& grid,
                        const OptimizerConfig& cfg,
                        double tie_tolerance = kDefaultTieTolerance);

/// {0} plus 12 log-spaced points in [1e-4, 1e1].
std::vector<double> DefaultLambdaGrid();

/// Mixes a base seed with a grid lambda so each optimization in a grid has
/// its own stream regardless of evaluation order. The optimization does not
/// depend on k, so one run per lambda serves every sparsity level.
Seed DeriveSeed(Seed base, double lambda);

/// One TGT run per grid value, evaluated concurrently.
std::vector<ExplanationSet> RunLambdaGrid(const ReprModel& model,
                                          const GroupStats& stats,
                                          const std::vector<double>& grid,
                                          const OptimizerConfig& cfg);

struct TradeoffPoint {
  int k = 0;
  double lambda = 0.0;
  double mean_correctness = 0.0;
  double mean_coverage = 0.0;
  /// Mean similarity of the previous level's pairwise translations to this
  /// level's. 1 for the first level.
  double similarity = 1.0;
};

struct TradeoffCurve {
  Method method = Method::kTgt;
  std::vector<TradeoffPoint> points;
};

struct SweepResult {
  TradeoffCurve tgt;
  TradeoffCurve dbm;
};

SweepResult SparsitySweep(const ExperimentContext& ctx,
                          const std::vector<int>& k_levels,
                          const std::vector<double>& lambda_grid,
                          const OptimizerConfig& cfg,
                          double tie_tolerance = kDefaultTieTolerance);

}  // namespace gce
