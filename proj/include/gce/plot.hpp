#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gce/explain.hpp"
#include "gce/metrics.hpp"
#include "gce/types.hpp"

namespace gce {

struct PlotOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Translated images of one source group, drawn over the base scatter.
struct Overlay {
  int from = 0;
  int to = 0;
  Matrix points;  // r(x + delta_{from->to}) for x in X_from
};

/// Pairwise heatmaps for correctness and coverage, plus a JSON plot spec.
PlotOutput EmitReportPlots(const MetricsReport& report,
                           const std::filesystem::path& dir, const std::string& stem);

/// Correctness / coverage / similarity against k for both methods.
PlotOutput EmitCurvePlots(const SweepResult& sweep, const std::filesystem::path& dir,
                          const std::string& stem);

/// Representation scatter colored by group, with optional translated-point
/// overlays. Skipped with a warning unless the representation is 2-D.
PlotOutput EmitScatterPlots(const Matrix& reps, const std::vector<int>& labels,
                            const std::vector<Overlay>& overlays,
                            const std::filesystem::path& dir, const std::string& stem);

}  // namespace gce
