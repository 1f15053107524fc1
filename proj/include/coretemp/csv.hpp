#pragma once

#include <string>
#include <vector>

#include "coretemp/coupled_sim.hpp"

namespace coretemp {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  /// Index of `name` in the header, or -1.
  int find(const std::string& name) const;
  const std::vector<double>& column(const std::string& name, const std::string& path) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Numeric CSV with one header row. Blank lines and '#' comments are skipped.
CsvTable read_csv(const std::string& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

struct IngestResult {
  TimeSeries series;
  std::vector<std::string> warnings;
};

// Column names of the time-series schema.
inline constexpr const char* kColTime = "time_s";
inline constexpr const char* kColCurrent = "current_a";
inline constexpr const char* kColVoltage = "voltage_v";
inline constexpr const char* kColSurf = "surf_temp_c";
inline constexpr const char* kColCore = "core_temp_c";
inline constexpr const char* kColFluid = "coolant_temp_c";

/// Reads a measured or simulated series. core_temp_c is optional; spacing other
/// than 1 s is resampled onto a 1 s grid by linear interpolation (with a warning).
IngestResult ingest_csv(const std::string& path);

void write_series_csv(const TimeSeries& series, const std::string& path);

/// Long-format table writer: header plus rows of preformatted cells.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace coretemp
