#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "raf/series.hpp"

namespace raf {

/// Additive vertical-datum correction (ft) for one water-level column.
struct DatumAdjustment {
    std::string variable_name;
    double offset = 0.0;
};

struct IngestConfig {
    std::filesystem::path csv_path;
    std::string date_column = "date";
    std::string date_format = "%Y-%m-%d";
    std::vector<DatumAdjustment> adjustments;
    std::vector<std::string> target_station_names;
    /// Optional per-column units ("name" -> unit); unknown columns get an empty unit.
    std::vector<Variable> units;
};

/// Parses `text` with a strftime-style pattern. Throws ParseError.
Date parse_date(const std::string& text, const std::string& format);

/// Reads a CSV onto a uniform daily grid. Dates absent from the file become
/// NaN rows; empty cells become NaN.
MultivariateSeries load_csv(const IngestConfig& config);
MultivariateSeries load_csv(std::istream& in, const IngestConfig& config);

MultivariateSeries apply_datum_adjustments(const MultivariateSeries& series,
                                           const std::vector<DatumAdjustment>& adjustments);

/// Linear interpolation over interior gaps, backward fill at the head of a
/// column and forward fill at its tail.
MultivariateSeries interpolate_gaps(const MultivariateSeries& series);

/// Writes the series as CSV (date column first) with round-trip precision.
void write_csv(std::ostream& out, const MultivariateSeries& series,
               const std::string& date_column = "date");

}  // namespace raf
