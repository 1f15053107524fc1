#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "coretemp/csv.hpp"
#include "coretemp/errors.hpp"

using namespace coretemp;

namespace {

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

void put(const std::string& path, const std::string& body) {
  std::ofstream f(path);
  f << body;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("series write/ingest round trip is exact") {
  TimeSeries s;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> core;
  for (int i = 0; i < 50; ++i) {
    s.inputs.t.push_back(i + 1);
    s.inputs.current.push_back(g(rng));
    s.inputs.voltage.push_back(3.3 + g(rng) * 0.01);
    s.inputs.t_surf.push_back(25 + g(rng));
    s.inputs.t_fluid.push_back(25.0);
    core.push_back(26 + g(rng));
  }
  s.t_core = core;
  const auto path = tmp("coretemp_rt.csv");
  write_series_csv(s, path);
  const auto in = ingest_csv(path);
  CHECK(in.warnings.empty());
  CHECK(in.series.inputs.t == s.inputs.t);
  CHECK(in.series.inputs.current == s.inputs.current);
  CHECK(in.series.inputs.voltage == s.inputs.voltage);
  CHECK(in.series.inputs.t_surf == s.inputs.t_surf);
  CHECK(in.series.core() == core);

  s.t_core.reset();
  write_series_csv(s, path);
  const auto unl = ingest_csv(path);
  CHECK_FALSE(unl.series.labeled());
  CHECK(unl.series.size() == 50);
  std::filesystem::remove(path);
}

TEST_CASE("coarse sampling is resampled to 1 Hz with a warning") {
  const auto path = tmp("coretemp_half.csv");
  std::string body = "time_s,current_a,voltage_v,surf_temp_c,coolant_temp_c\n";
  const int n = 6;
  for (int i = 0; i < n; ++i) {
    const int t = 2 * i;
    body += std::to_string(t) + "," + std::to_string(t) + ",3.3,25," + std::to_string(10 + t) + "\n";
  }
  put(path, body);
  const auto r = ingest_csv(path);
  REQUIRE(r.series.size() == 2 * n - 1);
  CHECK(r.warnings.size() == 1);
  for (std::size_t k = 0; k < r.series.size(); ++k) {
    CHECK(r.series.inputs.t[k] == doctest::Approx(k));
    CHECK(r.series.inputs.current[k] == doctest::Approx(k));
    CHECK(r.series.inputs.t_fluid[k] == doctest::Approx(10.0 + k));
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed files report file and line") {
  const auto path = tmp("coretemp_bad.csv");
  put(path, "time_s,current_a,voltage_v,surf_temp_c,coolant_temp_c\n# note\n1,0,3.3,25,25\n2,0,3.3,25\n");
  try {
    ingest_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 4);
    CHECK(e.file == path);
  }
  put(path, "time_s,current_a,voltage_v,surf_temp_c,coolant_temp_c\n1,0,3.3,25,25\n2,x,3.3,25,25\n");
  CHECK_THROWS_AS(ingest_csv(path), ParseError);
  put(path, "time_s,current_a,voltage_v,surf_temp_c,coolant_temp_c\n1,0,3.3,25,25\n1,0,3.3,25,25\n");
  try {
    ingest_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
  put(path, "time_s,current_a,voltage_v,coolant_temp_c\n1,0,3.3,25\n");
  CHECK_THROWS_AS(ingest_csv(path), ParseError);
  put(path, "");
  CHECK_THROWS_AS(ingest_csv(path), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ingest_csv(path), IoError);
}
