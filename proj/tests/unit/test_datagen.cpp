#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coretemp/datagen.hpp"
#include "coretemp/errors.hpp"

using namespace coretemp;

namespace {

std::map<std::string, ProfileSpec> two_profiles() {
  std::map<std::string, ProfileSpec> m;
  for (int i = 0; i < 2; ++i) {
    ProfileSpec p;
    p.id = "q" + std::to_string(i);
    p.kind = i ? ProfileKind::RandomWalk : ProfileKind::PulseTrain;
    p.seed = 40 + i;
    p.duration = 600;
    m[p.id] = p;
  }
  return m;
}

}  // namespace

TEST_CASE("generated profiles respect the current limit and are reproducible") {
  for (auto kind : {ProfileKind::PulseTrain, ProfileKind::RandomWalk}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      ProfileSpec s;
      s.kind = kind;
      s.seed = seed;
      s.max_current = 7.5;
      const auto a = gen_profile(s), b = gen_profile(s);
      CHECK(a.samples == b.samples);
      CHECK(a.size() == s.duration);
      double peak = 0.0, sum = 0.0;
      for (double v : a.samples) {
        peak = std::max(peak, std::abs(v));
        sum += v;
      }
      CHECK(peak <= 7.5);
      CHECK(sum > 0.0);  // net discharge
    }
  }
  ProfileSpec r;
  r.kind = ProfileKind::Rest;
  r.duration = 10;
  CHECK(gen_profile(r).samples == std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(profile_kind_from_string("fuds"), InvalidArgument);
}

TEST_CASE("pulse segments last between 1 and 60 samples") {
  ProfileSpec s;
  s.seed = 8;
  const auto p = gen_profile(s);
  std::size_t run = 1;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p.samples[i] == p.samples[i - 1]) {
      ++run;
    } else {
      CHECK(run <= 60);
      run = 1;
    }
  }
}

TEST_CASE("scaled replay multiplies by the peak ratio") {
  const auto path = (std::filesystem::temp_directory_path() / "coretemp_replay.csv").string();
  {
    std::ofstream f(path);
    f << "time_s,current_a\n1,2\n2,-10\n3,5\n";
  }
  ProfileSpec s;
  s.kind = ProfileKind::ScaledReplay;
  s.path = path;
  s.max_current = 35.0;
  const auto p = gen_profile(s);
  REQUIRE(p.size() == 3);
  CHECK(p.samples[0] == doctest::Approx(7.0));
  CHECK(p.samples[1] == doctest::Approx(-35.0));
  CHECK(p.samples[2] == doctest::Approx(17.5));
  {
    std::ofstream f(path);
    f << "time_s,current_a\n";
  }
  CHECK_THROWS_AS(gen_profile(s), InvalidArgument);
  std::filesystem::remove(path);
}

TEST_CASE("perturbation touches exactly the selected fields") {
  CellParams nom;
  Perturbation p;
  p[Param::H] = 0.45;
  p[Param::R1] = -0.3;
  const auto c = apply_perturbation(nom, p);
  CHECK(c.thermal.h == doctest::Approx(nom.thermal.h * 1.45));
  CHECK(c.electrical.r1 == doctest::Approx(nom.electrical.r1 * 0.7));
  CHECK(c.thermal.k_t == nom.thermal.k_t);
  CHECK(c.thermal.c_p == nom.thermal.c_p);
  CHECK(c.electrical.r0 == nom.electrical.r0);
  ScenarioSpec sc;
  sc.profile_id = "x";
  sc.eps[Param::KT] = 0.95;
  CHECK_THROWS(sc.validate());
}

TEST_CASE("identity sweep reproduces a direct simulation") {
  const auto profs = two_profiles();
  ScenarioSpec sc;
  sc.id = "only";
  sc.profile_id = "q0";
  sc.coolant_temp = 25.0;
  const Dataset ds = build_dataset({sc}, profs, CellParams{}, SimSettings{});
  REQUIRE(ds.series.size() == 1);
  const auto direct = simulate(gen_profile(profs.at("q0")), {}, {}, {0.8, 25.0}, 25.0);
  CHECK(ds.series[0].series.core() == direct.core());
  CHECK(ds.series[0].series.inputs.voltage == direct.inputs.voltage);
}

TEST_CASE("sweep count, canonical order and scenario-tagged errors") {
  const auto profs = two_profiles();
  std::vector<ScenarioSpec> scs;
  for (const auto& [id, _] : profs)
    for (double e : {-0.45, 0.0, 0.45}) {
      ScenarioSpec s;
      s.id = id + "_" + std::to_string(static_cast<int>(e * 100 + 100));
      s.profile_id = id;
      s.eps[Param::H] = e;
      scs.push_back(s);
    }
  std::reverse(scs.begin(), scs.end());
  SimSettings st;
  st.workers = 3;
  const Dataset ds = build_dataset(scs, profs, CellParams{}, st);
  CHECK(ds.series.size() == 6);
  for (std::size_t i = 1; i < ds.series.size(); ++i) CHECK(ds.series[i - 1].scenario_id < ds.series[i].scenario_id);
  st.workers = 1;
  const Dataset serial = build_dataset(scs, profs, CellParams{}, st);
  CHECK(serial.norm.hash() == ds.norm.hash());

  ScenarioSpec bad;
  bad.id = "overloaded";
  bad.profile_id = "q0";
  bad.eps[Param::R0] = 0.9;
  CellParams weak;
  weak.electrical.r0 = 0.08;
  try {
    build_dataset({bad}, profs, weak, SimSettings{});
    FAIL("expected a cutoff");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("overloaded") != std::string::npos);
    CHECK(e.kind() == ErrorKind::VoltageCutoff);
  }
}

TEST_CASE("normalization stats of rest data floor the spread") {
  ProfileSpec r;
  r.id = "rest";
  r.kind = ProfileKind::Rest;
  r.duration = 50;
  ScenarioSpec sc;
  sc.id = "r";
  sc.profile_id = "rest";
  sc.coolant_temp = 12.0;
  const Dataset ds = build_dataset({sc}, {{"rest", r}}, CellParams{}, SimSettings{});
  CHECK(ds.norm.mean[0] == 0.0);
  CHECK(ds.norm.mean[1] == doctest::Approx(ocv(0.8, ElectricalParams{})));
  CHECK(ds.norm.mean[2] == doctest::Approx(12.0));
  CHECK(ds.norm.mean[3] == doctest::Approx(12.0));
  for (double s : ds.norm.std) CHECK(s == kStdFloor);
  CHECK(ds.norm.label_std == kStdFloor);
}

TEST_CASE("window counts and z-scoring") {
  const auto profs = two_profiles();
  ScenarioSpec sc;
  sc.id = "a";
  sc.profile_id = "q1";
  const Dataset ds = build_dataset({sc}, profs, CellParams{}, SimSettings{});
  TimeSeries s = ds.series[0].series;
  const auto w100 = [&] {
    TimeSeries t = s;
    auto cut = [](std::vector<double>& v) { v.resize(100); };
    cut(t.inputs.t), cut(t.inputs.current), cut(t.inputs.voltage), cut(t.inputs.t_surf), cut(t.inputs.t_fluid);
    cut(*t.t_core);
    return t;
  }();
  const auto ws = windowize(w100, 50, 25, ds.norm);
  REQUIRE(ws.size() == 3);
  CHECK(ws.refs[0].start == 0);
  CHECK(ws.refs[1].start == 25);
  CHECK(ws.refs[2].start == 50);
  CHECK(ws.label(2) == w100.core()[99]);
  CHECK(windowize(w100, 100, 7, ds.norm).size() == 1);
  CHECK_THROWS_AS(windowize(w100, 101, 1, ds.norm), InvalidArgument);

  // every sample exactly once
  const auto all = windowize(s, 1, 1, ds.norm);
  for (int c = 0; c < 4; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) m += all.features(i)[c];
    m /= all.size();
    for (std::size_t i = 0; i < all.size(); ++i) v += std::pow(all.features(i)[c] - m, 2);
    CHECK(std::abs(m) < 1e-6);
    if (ds.norm.std[c] > kStdFloor) CHECK(std::abs(std::sqrt(v / all.size()) - 1.0) < 1e-6);
  }
  CHECK(ds.norm.std[3] == kStdFloor);  // fixed coolant temperature

  NormStats other = ds.norm;
  other.mean[0] += 1.0;
  WindowSet mixed = windowize(s, 50, 50, ds.norm);
  CHECK_THROWS(mixed.append(windowize(s, 50, 50, other)));
  const auto unl = windowize(s.inputs, 50, 50, ds.norm);
  CHECK_FALSE(unl.labeled());
  CHECK_THROWS_AS(unl.label(0), UnlabeledError);
}
