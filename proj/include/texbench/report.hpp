#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "texbench/harness.hpp"

namespace texbench {

/// One data row of a results CSV.
struct CsvRow {
    std::string pipeline;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::size_t feature_dim = 0;
    double wall_time_s = 0.0;
};

/// `#` metadata rows (one per result with its seeds and protocol) followed by
/// the header and one row per result, all numbers with 6 decimals.
void write_csv(std::ostream& out, std::span<const ExperimentResult> results);
std::string format_csv(std::span<const ExperimentResult> results);

/// Data rows of a CSV written by write_csv; `#` rows are skipped.
std::vector<CsvRow> parse_csv(std::istream& in, const std::string& source = "<csv>");
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// Bar chart of mean accuracy with std error bars, plus the feature
/// dimension as a polyline against a log-scale right axis.
std::string render_svg(std::span<const CsvRow> rows, const std::string& title = "");

std::vector<CsvRow> to_rows(std::span<const ExperimentResult> results);

/// Writes both files; an empty svg_path skips the chart.
void report(std::span<const ExperimentResult> results, const std::filesystem::path& csv_path,
            const std::filesystem::path& svg_path);

} // namespace texbench
