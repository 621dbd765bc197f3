#pragma once

#include "fasr/experiment.hpp"

#include <filesystem>
#include <string>

namespace fasr {

enum class ExportFormat { csv, md };

ExportFormat export_format_from_name(std::string_view name);

/// CSV: header, one row per seed, then "mean" and "std" rows, reals as %.17g.
std::string summary_to_csv(const RunSummary& summary);
/// Markdown table of mean +- std per metric.
std::string summary_to_markdown(const RunSummary& summary);

/// Writes the summary; an empty summary is rejected before anything is created.
void export_metrics(const RunSummary& summary, ExportFormat format, const std::filesystem::path& path);

/// Parses summary_to_csv output back (seed rows only; aggregates are recomputed).
RunSummary read_summary_csv(const std::filesystem::path& path);

/// Per-step training log.
void write_step_log(const std::filesystem::path& path, const TrainOutcome& outcome);

}  // namespace fasr
