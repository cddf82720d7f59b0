#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "altprobe/experiments.hpp"

namespace altprobe {

enum class ExportFormat { Csv, Json };
std::optional<ExportFormat> parse_export_format(std::string_view token);

/// One row per (model, task, layer); columns in a fixed order.  Doubles
/// are written in shortest round-trip form, so import(export(x)) == x.
void export_results(std::span<const LayerResult> results, const std::filesystem::path& path, ExportFormat format);
std::vector<LayerResult> import_results(const std::filesystem::path& path, ExportFormat format);

void export_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path, ExportFormat format);

/// Best layer of one (model, task) series.
struct ReportRow {
  std::string model_id;
  std::string task;
  bool degenerate = false;
  std::size_t best_layer = 0;
  double best_mcc = 0.0;
  double best_accuracy = 0.0;  // accuracy at best_layer
  std::vector<std::size_t> layers;
  std::vector<double> mcc;
  std::vector<double> accuracy;
};

struct ReportTable {
  std::vector<ReportRow> rows;  // sorted by model, then canonical task order
};

/// Argmax of MCC over layers, ties to the lowest layer.  Metrics are taken
/// from each result's confusion matrix.  Throws EmptyResults.
ReportTable best_layer_table(std::span<const LayerResult> results);

/// "0.972 [10]" for a measured task, "0.000" / "1.000" for a degenerate one.
std::string render_cell(const ReportRow& row);
std::string render_table(const ReportTable& table);

struct CurveSeries {
  std::string model_id;
  std::vector<std::size_t> x;  // layers
  std::vector<double> y;       // mean MCC over non-degenerate tasks
  std::size_t tasks = 0;
};

/// One mean curve per model.  Throws AxisMismatch when the non-degenerate
/// tasks of a model disagree on their layer set, EmptyResults when a model
/// has none.
std::vector<CurveSeries> mean_curves(std::span<const LayerResult> results);

void export_curves(std::span<const CurveSeries> curves, const std::filesystem::path& path, ExportFormat format);

}  // namespace altprobe
