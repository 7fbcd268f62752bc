#include "gce/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/groups.hpp"
#include "gce/metrics.hpp"
#include "gce/repr.hpp"

namespace gce {

std::string_view MethodName(Method method) {
  return method == Method::kDbm ? "dbm" : "tgt";
}

Method ParseMethod(std::string_view name) {
  if (name == "tgt" || name == "TGT") return Method::kTgt;
  if (name == "dbm" || name == "DBM") return Method::kDbm;
  ThrowConfig("unknown explanation method '" + std::string(name) + "'");
}

ExplanationSet::ExplanationSet(int group_count, Eigen::Index dim, int reference)
    : group_count_(group_count), dim_(dim), reference_(reference) {
  if (group_count < 2) ThrowConfig("explanations need at least two groups");
  if (dim <= 0) ThrowConfig("explanations need a positive feature dimension");
  if (reference < 0 || reference >= group_count) {
    ThrowConfig("reference group " + std::to_string(reference) + " out of range");
  }
  basis_.assign(static_cast<std::size_t>(group_count), Vector::Zero(dim));
}

void ExplanationSet::CheckGroup(int group) const {
  if (group < 0 || group >= group_count_) {
    ThrowConfig("group " + std::to_string(group) + " out of range [0, " +
                std::to_string(group_count_) + ")");
  }
}

const Vector& ExplanationSet::basis(int group) const {
  CheckGroup(group);
  return basis_[static_cast<std::size_t>(group)];
}

Vector& ExplanationSet::mutable_basis(int group) {
  CheckGroup(group);
  if (group == reference_) ThrowConfig("the reference group has no basis vector");
  return basis_[static_cast<std::size_t>(group)];
}

std::vector<Vector> ExplanationSet::StoredBasis() const {
  std::vector<Vector> out;
  for (int g = 0; g < group_count_; ++g) {
    if (g != reference_) out.push_back(basis_[static_cast<std::size_t>(g)]);
  }
  return out;
}

Vector ExplanationSet::Construct(int i, int j) const {
  CheckGroup(i);
  CheckGroup(j);
  if (i == j) ThrowConfig("no explanation between a group and itself");
  const auto& to = basis_[static_cast<std::size_t>(j)];
  const auto& from = basis_[static_cast<std::size_t>(i)];
  if (i == reference_) return to;
  if (j == reference_) return -from;
  return to - from;
}

void ExplanationSet::ApplyUpdate(int i, int j, const Vector& gradient, double step) {
  CheckGroup(i);
  CheckGroup(j);
  if (i == j) ThrowConfig("no explanation between a group and itself");
  if (gradient.size() != dim_) ThrowConfig("gradient length mismatch");
  auto& to = basis_[static_cast<std::size_t>(j)];
  auto& from = basis_[static_cast<std::size_t>(i)];
  if (i == reference_) {
    to -= step * gradient;
  } else if (j == reference_) {
    from += step * gradient;
  } else {
    to -= 0.5 * step * gradient;
    from += 0.5 * step * gradient;
  }
}

void ExplanationSet::Shrink(double threshold) {
  if (threshold <= 0.0) return;
  for (int g = 0; g < group_count_; ++g) {
    if (g == reference_) continue;
    auto& v = basis_[static_cast<std::size_t>(g)];
    v = SoftThreshold(v, threshold);
  }
}

bool ExplanationSet::AllFinite() const {
  return std::all_of(basis_.begin(), basis_.end(),
                     [](const Vector& v) { return v.allFinite(); });
}

Vector SoftThreshold(const Vector& v, double threshold) {
  return v.unaryExpr([threshold](double x) {
    const double mag = std::abs(x) - threshold;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
  });
}

Vector ThresholdK(const Vector& delta, int k) {
  if (k < 1) ThrowConfig("sparsity level k must be at least 1");
  if (k >= delta.size()) return delta;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(delta.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(delta[a]) > std::abs(delta[b]);
  });
  Vector out = Vector::Zero(delta.size());
  for (int r = 0; r < k; ++r) {
    const auto f = order[static_cast<std::size_t>(r)];
    out[f] = delta[f];
  }
  return out;
}

ExplanationSet Dbm(const GroupStats& stats, int reference) {
  const int l = stats.group_count();
  if (l < 2 || stats.x_bar.size() != static_cast<std::size_t>(l)) {
    ThrowConfig("group statistics are incomplete");
  }
  ExplanationSet out(l, stats.x_bar.front().size(), reference);
  out.method = Method::kDbm;
  const Vector& base = stats.x_bar[static_cast<std::size_t>(reference)];
  for (int g = 0; g < l; ++g) {
    if (g == reference) continue;
    const Vector& mean = stats.x_bar[static_cast<std::size_t>(g)];
    if (mean.size() != base.size()) ThrowConfig("group means differ in length");
    out.mutable_basis(g) = mean - base;
  }
  return out;
}

void OptimizerConfig::Validate() const {
  if (!(learning_rate > 0.0)) ThrowConfig("learning rate must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    ThrowConfig("lambda must be a nonnegative finite value");
  }
  if (max_pairs <= 0) ThrowConfig("max_pairs must be positive");
  if (steps_per_pair <= 0) ThrowConfig("steps_per_pair must be positive");
  if (window <= 0 || patience <= 0) ThrowConfig("convergence window must be positive");
  if (!(tolerance > 0.0)) ThrowConfig("convergence tolerance must be positive");
}

namespace {

// Objective averaged over every ordered pair, evaluated at the current basis.
double MeanObjective(const ReprModel& model, const GroupStats& stats,
                     const ExplanationSet& set, double lambda) {
  const int l = stats.group_count();
  double total = 0.0;
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      if (i == j) continue;
      const Vector delta = set.Construct(i, j);
      const Vector image =
          model.Forward(stats.x_bar[static_cast<std::size_t>(i)] + delta);
      total += (image - stats.r_bar[static_cast<std::size_t>(j)]).squaredNorm() +
               lambda * delta.lpNorm<1>();
    }
  }
  return total / (static_cast<double>(l) * static_cast<double>(l - 1));
}

}  // namespace

ExplanationSet TgtOptimize(const ReprModel& model, const GroupStats& stats,
                           const OptimizerConfig& cfg, OptimizerTrace* trace) {
  cfg.Validate();
  const int l = stats.group_count();
  if (l < 2) ThrowConfig("TGT needs at least two groups");
  for (int g = 0; g < l; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (stats.x_bar[gi].size() != model.input_dim() ||
        stats.r_bar[gi].size() != model.output_dim()) {
      ThrowConfig("group statistics do not match the model dimensions");
    }
  }
  ExplanationSet set(l, model.input_dim(), cfg.reference);
  set.method = Method::kTgt;
  set.lambda = cfg.lambda;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> first(0, l - 1);
  std::uniform_int_distribution<int> second(0, l - 2);
  const double shrink = cfg.learning_rate * cfg.lambda;

  std::vector<double> windows;
  OptimizerTrace local;
  for (int pair = 0; pair < cfg.max_pairs; ++pair) {
    const int i = first(rng);
    int j = second(rng);
    if (j >= i) ++j;
    const auto ii = static_cast<std::size_t>(i);
    const auto jj = static_cast<std::size_t>(j);
    for (int step = 0; step < cfg.steps_per_pair; ++step) {
      LossGradient lg;
      try {
        lg = LossAndGradient(model, set.Construct(i, j), stats.x_bar[ii], stats.r_bar[jj]);
      } catch (const Error& e) {
        std::ostringstream msg;
        msg << e.what() << " (pair " << i << "->" << j << ", sampled pair " << pair
            << ", step " << step << ")";
        throw Error(e.category(), msg.str());
      }
      set.ApplyUpdate(i, j, lg.gradient, cfg.learning_rate);
      set.Shrink(shrink);
    }
    if (!set.AllFinite()) {
      ThrowNumeric("TGT diverged at sampled pair " + std::to_string(pair) + " (" +
                   std::to_string(i) + "->" + std::to_string(j) + ")");
    }
    local.pairs_sampled = pair + 1;

    if ((pair + 1) % cfg.window != 0) continue;
    const double objective = MeanObjective(model, stats, set, cfg.lambda);
    if (!std::isfinite(objective)) {
      ThrowNumeric("non-finite TGT objective at sampled pair " + std::to_string(pair));
    }
    windows.push_back(objective);
    local.final_window_loss = objective;
    if (windows.size() > static_cast<std::size_t>(cfg.patience)) {
      const double before = windows[windows.size() - 1 - static_cast<std::size_t>(cfg.patience)];
      if (before - objective <= cfg.tolerance * before) {
        local.converged = true;
        break;
      }
    }
  }
  if (trace != nullptr) *trace = local;
  return set;
}

std::vector<double> DefaultLambdaGrid() {
  std::vector<double> grid{0.0};
  constexpr int kCount = 12;
  for (int g = 0; g < kCount; ++g) {
    grid.push_back(std::pow(10.0, -4.0 + 5.0 * g / (kCount - 1)));
  }
  return grid;
}

Seed DeriveSeed(Seed base, double lambda) {
  // splitmix64 finalizer over the seed mixed with the lambda bit pattern.
  Seed z = base ^ (std::bit_cast<std::uint64_t>(lambda) + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<ExplanationSet> RunLambdaGrid(const ReprModel& model,
                                          const GroupStats& stats,
                                          const std::vector<double>& grid,
                                          const OptimizerConfig& cfg) {
  if (grid.empty()) ThrowConfig("lambda grid is empty");
  std::vector<std::future<ExplanationSet>> runs;
  runs.reserve(grid.size());
  for (double lambda : grid) {
    OptimizerConfig run_cfg = cfg;
    run_cfg.lambda = lambda;
    run_cfg.seed = DeriveSeed(cfg.seed, lambda);
    run_cfg.Validate();
    runs.push_back(std::async(std::launch::async, [&model, &stats, run_cfg] {
      return TgtOptimize(model, stats, run_cfg);
    }));
  }
  std::vector<ExplanationSet> out;
  out.reserve(runs.size());
  for (auto& run : runs) out.push_back(run.get());
  return out;
}

namespace {

LambdaChoice SelectLambda(const ExperimentContext& ctx, std::optional<int> k,
                          const std::vector<double>& grid,
                          const std::vector<ExplanationSet>& runs, double tie_tolerance) {
  if (grid.empty()) ThrowConfig("lambda grid is empty");
  if (!(tie_tolerance >= 0.0)) ThrowConfig("tie tolerance must be nonnegative");
  LambdaChoice best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    best.grid_correctness.push_back(
        PairwiseReport(ctx.model, ctx.data, ctx.grouping, runs[g], ctx.epsilon, k)
            .mean_correctness);
  }
  const double top =
      *std::max_element(best.grid_correctness.begin(), best.grid_correctness.end());
  std::size_t chosen = grid.size();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (best.grid_correctness[g] < top - tie_tolerance) continue;
    if (chosen == grid.size() || grid[g] > grid[chosen]) chosen = g;
  }
  best.lambda = grid[chosen];
  best.mean_correctness = best.grid_correctness[chosen];
  best.explanations = runs[chosen];
  return best;
}

std::vector<Vector> PairTranslations(const ExplanationSet& set, int k) {
  std::vector<Vector> out;
  for (int i = 0; i < set.group_count(); ++i) {
    for (int j = 0; j < set.group_count(); ++j) {
      if (i != j) out.push_back(ThresholdK(set.Construct(i, j), k));
    }
  }
  return out;
}

// Mean similarity of each sparser translation to its denser counterpart.
// All-zero sparser translations are vacuously contained and count as 1.
double LevelSimilarity(const std::vector<Vector>& sparser,
                       const std::vector<Vector>& denser) {
  double total = 0.0;
  for (std::size_t p = 0; p < sparser.size(); ++p) {
    total += sparser[p].isZero(0.0) ? 1.0 : Similarity(sparser[p], denser[p]);
  }
  return sparser.empty() ? 1.0 : total / static_cast<double>(sparser.size());
}

}  // namespace

LambdaChoice TuneLambda(const ExperimentContext& ctx, std::optional<int> k,
                        const std::vector<double>& grid,
                        const OptimizerConfig& cfg, double tie_tolerance) {
  const auto runs = RunLambdaGrid(ctx.model, ctx.stats, grid, cfg);
  return SelectLambda(ctx, k, grid, runs, tie_tolerance);
}

SweepResult SparsitySweep(const ExperimentContext& ctx,
                          const std::vector<int>& k_levels,
                          const std::vector<double>& lambda_grid,
                          const OptimizerConfig& cfg, double tie_tolerance) {
  if (k_levels.empty()) ThrowConfig("sparsity sweep needs at least one level");
  for (std::size_t t = 0; t < k_levels.size(); ++t) {
    if (k_levels[t] < 1) ThrowConfig("sparsity levels must be positive");
    if (t > 0 && k_levels[t] <= k_levels[t - 1]) {
      ThrowConfig("sparsity levels must be strictly increasing");
    }
  }
  const auto runs = RunLambdaGrid(ctx.model, ctx.stats, lambda_grid, cfg);
  const ExplanationSet dbm = Dbm(ctx.stats, cfg.reference);

  SweepResult out;
  out.tgt.method = Method::kTgt;
  out.dbm.method = Method::kDbm;
  std::vector<Vector> prev_tgt;
  std::vector<Vector> prev_dbm;
  for (int k : k_levels) {
    const auto choice = SelectLambda(ctx, k, lambda_grid, runs, tie_tolerance);
    const auto tgt_report = PairwiseReport(ctx.model, ctx.data, ctx.grouping,
                                           choice.explanations, ctx.epsilon, k);
    auto tgt_pairs = PairTranslations(choice.explanations, k);
    out.tgt.points.push_back({k, choice.lambda, tgt_report.mean_correctness,
                              tgt_report.mean_coverage,
                              prev_tgt.empty() ? 1.0 : LevelSimilarity(prev_tgt, tgt_pairs)});
    prev_tgt = std::move(tgt_pairs);

    const auto dbm_report =
        PairwiseReport(ctx.model, ctx.data, ctx.grouping, dbm, ctx.epsilon, k);
    auto dbm_pairs = PairTranslations(dbm, k);
    out.dbm.points.push_back({k, 0.0, dbm_report.mean_correctness,
                              dbm_report.mean_coverage,
                              prev_dbm.empty() ? 1.0 : LevelSimilarity(prev_dbm, dbm_pairs)});
    prev_dbm = std::move(dbm_pairs);
  }
  return out;
}

}  // namespace gce
