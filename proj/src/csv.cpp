#include "coretemp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coretemp/errors.hpp"

namespace coretemp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& CsvTable::column(const std::string& name, const std::string& path) const {
  const int i = find(name);
  if (i < 0) throw ParseError(path, 1, "missing column '" + name + "'");
  return columns[static_cast<std::size_t>(i)];
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split(t);
    if (!have_header) {
      table.header = cells;
      table.columns.assign(cells.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError(path, lineno, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                         std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(path, lineno, "bad number '" + s + "' in column '" + table.header[c] + "'");
      table.columns[c].push_back(v);
    }
  }
  if (!have_header) throw ParseError(path, lineno, "empty file");
  return table;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

IngestResult ingest_csv(const std::string& path) {
  const CsvTable tab = read_csv(path);
  const auto& t = tab.column(kColTime, path);
  const auto& cur = tab.column(kColCurrent, path);
  const auto& volt = tab.column(kColVoltage, path);
  const auto& ts = tab.column(kColSurf, path);
  const auto& tf = tab.column(kColFluid, path);
  const int core_idx = tab.find(kColCore);
  const std::size_t n = t.size();
  if (n == 0) throw ParseError(path, 2, "no data rows");

  bool uniform = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) throw ParseError(path, i + 2, "time is not strictly increasing");
    if (std::abs(t[i] - t[i - 1] - 1.0) > 1e-9) uniform = false;
  }

  IngestResult res;
  TimeSeries& s = res.series;
  s.inputs.dt = 1.0;
  if (uniform) {
    s.inputs.t = t;
    s.inputs.current = cur;
    s.inputs.voltage = volt;
    s.inputs.t_surf = ts;
    s.inputs.t_fluid = tf;
    if (core_idx >= 0) s.t_core = tab.columns[static_cast<std::size_t>(core_idx)];
    return res;
  }

  res.warnings.push_back("'" + path + "': sample spacing is not 1 s; resampled to 1 Hz by linear interpolation");
  const double t0 = t.front();
  const auto m = static_cast<std::size_t>(std::floor(t.back() - t0 + 1e-9)) + 1;
  auto interp = [&](const std::vector<double>& col) {
    std::vector<double> out(m);
    std::size_t j = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double tk = t0 + static_cast<double>(k);
      while (j + 2 < n && t[j + 1] <= tk) ++j;
      const double w = std::clamp((tk - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
      out[k] = col[j] + w * (col[j + 1] - col[j]);
    }
    return out;
  };
  if (n == 1) throw ParseError(path, 2, "cannot resample a single row");
  std::vector<double> grid(m);
  for (std::size_t k = 0; k < m; ++k) grid[k] = t0 + static_cast<double>(k);
  s.inputs.t = grid;
  s.inputs.current = interp(cur);
  s.inputs.voltage = interp(volt);
  s.inputs.t_surf = interp(ts);
  s.inputs.t_fluid = interp(tf);
  if (core_idx >= 0) s.t_core = interp(tab.columns[static_cast<std::size_t>(core_idx)]);
  return res;
}

void write_series_csv(const TimeSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << kColTime << ',' << kColCurrent << ',' << kColVoltage << ',' << kColSurf << ',';
  if (s.labeled()) out << kColCore << ',';
  out << kColFluid << '\n';
  const auto& in = s.inputs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_double(in.t[i]) << ',' << format_double(in.current[i]) << ',' << format_double(in.voltage[i])
        << ',' << format_double(in.t_surf[i]) << ',';
    if (s.labeled()) out << format_double((*s.t_core)[i]) << ',';
    out << format_double(in.t_fluid[i]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace coretemp
