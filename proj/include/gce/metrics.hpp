#pragma once

#include <optional>

#include "gce/types.hpp"

namespace gce {

class Dataset;
class ExplanationSet;
class Grouping;
class ReprModel;

/// Fraction of rows of `source` with some row of `target` within squared
/// distance epsilon. With `exclude_same_index`, row k of source never matches
/// row k of target (self-similarity of a group against itself).
double MatchFraction(const Matrix& source, const Matrix& target, double epsilon,
                     bool exclude_same_index = false);

/// Fraction of X_i whose translated image lands within squared distance
/// epsilon of some image of X_j. For i == j, delta must be zero and a point
/// never matches itself.
double Correctness(const ReprModel& model, const Dataset& data,
                   const Grouping& grouping, int i, int j, const Vector& delta,
                   double epsilon);

/// Fraction of X_j whose image has some translated point of X_i within
/// squared distance epsilon.
double Coverage(const ReprModel& model, const Dataset& data,
                const Grouping& grouping, int i, int j, const Vector& delta,
                double epsilon);

/// Share of e1's l1 mass that sits on features also used by e2.
double Similarity(const Vector& e1, const Vector& e2);

struct MetricsReport {
  Matrix correctness;  // l x l, diagonal = self-similarity
  Matrix coverage;
  double epsilon = 0.0;
  double mean_correctness = 0.0;  // over ordered pairs i != j
  double mean_coverage = 0.0;
};

MetricsReport PairwiseReport(const ReprModel& model, const Dataset& data,
                             const Grouping& grouping,
                             const ExplanationSet& explanations, double epsilon,
                             std::optional<int> k = std::nullopt);

}  // namespace gce
