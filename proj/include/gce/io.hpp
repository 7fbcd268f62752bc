#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "gce/data.hpp"
#include "gce/explain.hpp"
#include "gce/metrics.hpp"
#include "gce/repr.hpp"

namespace gce {

using Json = nlohmann::ordered_json;

// Model file: {kind, dims: {input, output}, layers: [{rows, cols, weights
// (row-major), bias, activation}]}. Black-box models are not serializable.
Json ModelToJson(const ReprModel& model);
ReprModel ModelFromJson(const Json& doc);

Json ExplanationsToJson(const ExplanationSet& set);
ExplanationSet ExplanationsFromJson(const Json& doc);

Json MetricsToJson(const MetricsReport& report);
Json TradeoffToJson(const TradeoffCurve& curve);
Json ComparisonToJson(const ExplanationComparison& comparison);

Json PerturbationToJson(const PerturbationSpec& spec);
PerturbationSpec PerturbationFromJson(const Json& doc);

Json ReadJson(const std::filesystem::path& path);
/// Two-space indented, trailing newline. Output is a pure function of `doc`.
void WriteJson(const Json& doc, const std::filesystem::path& path);

/// Columns i, j, feature, value; one row per ordered pair and feature.
void WritePairwiseCsv(const ExplanationSet& set, const std::filesystem::path& path);
/// Columns i, j, correctness, coverage; one row per ordered pair i != j.
void WriteMetricsCsv(const MetricsReport& report, const std::filesystem::path& path);
/// Columns k, lambda, correctness, coverage, similarity.
void WriteTradeoffCsv(const TradeoffCurve& curve, const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string FormatDouble(double value);

}  // namespace gce
