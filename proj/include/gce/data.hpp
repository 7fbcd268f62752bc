#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gce/groups.hpp"
#include "gce/types.hpp"

namespace gce {

class ExplanationSet;

/// Per-feature z-scoring parameters.
struct Standardization {
  Vector mean;
  Vector stddev;
  /// Features with zero variance; their stddev is recorded as 1.
  std::vector<bool> constant;
};

/// An n x d table of finite reals with unique feature names.
class Dataset {
 public:
  Dataset() = default;
  /// Generates names x1..xd when `names` is empty.
  explicit Dataset(Matrix rows, std::vector<std::string> names = {});

  const Matrix& rows() const { return rows_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::optional<Standardization>& standardization() const {
    return standardization_;
  }
  void set_standardization(Standardization s) { standardization_ = std::move(s); }

  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }

 private:
  Matrix rows_;
  std::vector<std::string> names_;
  std::optional<Standardization> standardization_;
};

struct SyntheticData {
  Dataset data;
  /// 2 * round(x1) + round(x2), with x1, x2 clamped to [0, 1].
  std::vector<int> truth;
};

/// Four-feature causal toy problem:
///   x1, x2 ~ Bern(0.5) + N(0, 0.2), x3 ~ N(0, 0.5), x4 ~ x1 + N(0, 0.05).
SyntheticData GenerateSynthetic(Seed seed, int n = 400);

Dataset LoadCsv(const std::filesystem::path& path, bool has_header);
void SaveCsv(const Dataset& data, const std::filesystem::path& path);

/// Z-scores every feature. Constant features are centered and left unscaled.
/// The returned dataset records the transform; already-standardized data
/// composes the new transform with the recorded one.
Dataset Standardize(const Dataset& data);

/// Maps a translation expressed in standardized units back to raw units.
Vector TranslationToRaw(const Standardization& s, const Vector& delta);
Vector TranslationToStandardized(const Standardization& s, const Vector& delta);

struct FeatureEdit {
  int feature = 0;
  double offset = 0.0;
  double jitter = 0.0;  // half-width of the uniform noise
};

struct PerturbationSpec {
  int group = 0;
  std::vector<FeatureEdit> edits;

  void Validate(Eigen::Index dim) const;
};

struct ModifiedDataset {
  Dataset data;
  Grouping grouping;
  int new_group = 0;
};

/// Copies `spec.group`, shifts each edited feature by offset + U(-w, w), and
/// appends the copy as a new group after the original rows.
ModifiedDataset ModifyDataset(const Dataset& data, const Grouping& grouping,
                              const PerturbationSpec& spec, Seed seed);

struct PairComparison {
  int from = 0;
  int to = 0;
  /// False when the original translation is identically zero.
  bool comparable = false;
  double scale = 0.0;
  Vector scaled_difference;
};

struct ExplanationComparison {
  std::string scale_rule;
  std::vector<PairComparison> pairs;

  double MaxScaledDifference() const;
};

/// |delta'_{i->j} - delta_{i->j}| / max_k |delta_{i->j}[k]| for each pair.
ExplanationComparison CompareExplanations(
    const ExplanationSet& original, const ExplanationSet& other,
    const std::vector<std::pair<int, int>>& pairs);

}  // namespace gce
