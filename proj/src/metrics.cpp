#include "gce/metrics.hpp"

#include <cmath>
#include <string>

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/explain.hpp"
#include "gce/groups.hpp"
#include "gce/repr.hpp"

namespace gce {

double MatchFraction(const Matrix& source, const Matrix& target, double epsilon,
                     bool exclude_same_index) {
  if (source.rows() == 0) ThrowConfig("cannot score an empty group");
  if (source.cols() != target.cols()) ThrowConfig("representation dims differ");
  if (exclude_same_index && source.rows() != target.rows()) {
    ThrowConfig("self-matching needs row-aligned point sets");
  }
  Eigen::Index hits = 0;
  for (Eigen::Index a = 0; a < source.rows(); ++a) {
    for (Eigen::Index b = 0; b < target.rows(); ++b) {
      if (exclude_same_index && a == b) continue;
      if ((source.row(a) - target.row(b)).squaredNorm() <= epsilon) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(source.rows());
}

namespace {

struct GroupImages {
  Matrix translated_source;  // r(x + delta) for x in X_i
  Matrix target;             // r(x') for x' in X_j
};

Matrix MemberRows(const Dataset& data, const Grouping& grouping, int group) {
  const auto members = grouping.Members(group);
  Matrix out(static_cast<Eigen::Index>(members.size()), data.dim());
  for (std::size_t r = 0; r < members.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = data.rows().row(members[r]);
  }
  return out;
}

GroupImages Images(const ReprModel& model, const Dataset& data,
                   const Grouping& grouping, int i, int j, const Vector& delta,
                   double epsilon) {
  if (!(epsilon > 0.0)) ThrowConfig("epsilon must be positive");
  if (static_cast<Eigen::Index>(grouping.size()) != data.size()) {
    ThrowConfig("grouping does not cover the dataset rows");
  }
  if (delta.size() != data.dim()) {
    ThrowConfig("translation has length " + std::to_string(delta.size()) +
                ", expected " + std::to_string(data.dim()));
  }
  if (i == j && !delta.isZero(0.0)) {
    ThrowConfig("a group can only be compared with itself under a zero translation");
  }
  Matrix source = MemberRows(data, grouping, i);
  source.rowwise() += delta.transpose();
  GroupImages out{model.ForwardBatch(source), {}};
  out.target = i == j ? out.translated_source
                      : model.ForwardBatch(MemberRows(data, grouping, j));
  return out;
}

}  // namespace

double Correctness(const ReprModel& model, const Dataset& data,
                   const Grouping& grouping, int i, int j, const Vector& delta,
                   double epsilon) {
  const auto images = Images(model, data, grouping, i, j, delta, epsilon);
  return MatchFraction(images.translated_source, images.target, epsilon, i == j);
}

double Coverage(const ReprModel& model, const Dataset& data,
                const Grouping& grouping, int i, int j, const Vector& delta,
                double epsilon) {
  const auto images = Images(model, data, grouping, i, j, delta, epsilon);
  return MatchFraction(images.target, images.translated_source, epsilon, i == j);
}

double Similarity(const Vector& e1, const Vector& e2) {
  if (e1.size() != e2.size()) ThrowConfig("explanations have different lengths");
  const double mass = e1.lpNorm<1>();
  if (!(mass > 0.0)) ThrowConfig("similarity is undefined for an all-zero explanation");
  double shared = 0.0;
  for (Eigen::Index f = 0; f < e1.size(); ++f) {
    if (e2[f] != 0.0) shared += std::abs(e1[f]);
  }
  return shared / mass;
}

MetricsReport PairwiseReport(const ReprModel& model, const Dataset& data,
                             const Grouping& grouping,
                             const ExplanationSet& explanations, double epsilon,
                             std::optional<int> k) {
  const int l = grouping.count();
  if (explanations.group_count() != l) {
    ThrowConfig("explanation set covers " + std::to_string(explanations.group_count()) +
                " groups, grouping has " + std::to_string(l));
  }
  MetricsReport report;
  report.epsilon = epsilon;
  report.correctness = Matrix::Zero(l, l);
  report.coverage = Matrix::Zero(l, l);
  const Vector zero = Vector::Zero(data.dim());
  double sum_cr = 0.0;
  double sum_cv = 0.0;
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      Vector delta = zero;
      if (i != j) {
        delta = explanations.Construct(i, j);
        if (k) delta = ThresholdK(delta, *k);
      }
      const auto images = Images(model, data, grouping, i, j, delta, epsilon);
      report.correctness(i, j) =
          MatchFraction(images.translated_source, images.target, epsilon, i == j);
      report.coverage(i, j) =
          MatchFraction(images.target, images.translated_source, epsilon, i == j);
      if (i != j) {
        sum_cr += report.correctness(i, j);
        sum_cv += report.coverage(i, j);
      }
    }
  }
  const double pairs = static_cast<double>(l) * static_cast<double>(l - 1);
  report.mean_correctness = sum_cr / pairs;
  report.mean_coverage = sum_cv / pairs;
  return report;
}

}  // namespace gce
