#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coretemp/errors.hpp"
#include "coretemp/evalkit.hpp"

using namespace coretemp;

TEST_CASE("error metrics") {
  const std::vector<double> p{1, 2, 3, 4}, t{1, 0, 3, 8};
  CHECK(rmse(p, t) == doctest::Approx(std::sqrt(20.0 / 4)));
  CHECK(mae(p, t) == doctest::Approx(1.5));
  CHECK(max_abs_err(p, t) == 4.0);
  CHECK(rmse(p, p) == 0.0);
  CHECK_THROWS_AS(rmse(p, std::vector<double>{1, 2}), DimensionError);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("gaussian smoothing") {
  std::vector<double> impulse(11, 0.0);
  impulse[5] = 1.0;
  const auto s = gaussian_smooth(impulse, 5, 1.0);
  REQUIRE(s.size() == 11);
  const double z = 1 + 2 * std::exp(-0.5) + 2 * std::exp(-2.0);
  CHECK(s[5] == doctest::Approx(1.0 / z));
  CHECK(s[4] == doctest::Approx(std::exp(-0.5) / z));
  CHECK(s[3] == doctest::Approx(std::exp(-2.0) / z));
  CHECK(s[2] == 0.0);
  CHECK(std::accumulate(s.begin(), s.end(), 0.0) == doctest::Approx(1.0));

  const std::vector<double> flat(9, 4.2);
  for (double v : gaussian_smooth(flat, 7, 2.0)) CHECK(v == doctest::Approx(4.2));
  std::vector<double> ramp(9);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  CHECK(gaussian_smooth(ramp, 5, 1.0)[4] == doctest::Approx(4.0));
  CHECK_THROWS_AS(gaussian_smooth(flat, 4, 1.0), InvalidArgument);
}

TEST_CASE("quartiles use linear interpolation and skip failed rows") {
  std::vector<StudyRow> rows;
  for (double v : {4.0, 1.0, 3.0, 2.0, 5.0}) {
    StudyRow r{Param::H, 0.15, "p"};
    r.rmse_pa = v;
    r.rmse_s = 10 * v;
    r.rmse_da = NAN;
    rows.push_back(r);
  }
  StudyRow bad{Param::H, 0.15, "x"};
  bad.error = "cutoff";
  bad.rmse_pa = bad.rmse_s = bad.rmse_da = NAN;
  rows.push_back(bad);
  const auto q = study_quartiles(rows);
  const auto pa = std::find_if(q.begin(), q.end(), [](const QuartileRow& r) { return r.method == "pa"; });
  REQUIRE(pa != q.end());
  CHECK(pa->n == 5);
  CHECK(pa->min == 1.0);
  CHECK(pa->q1 == 2.0);
  CHECK(pa->median == 3.0);
  CHECK(pa->q3 == 4.0);
  CHECK(pa->max == 5.0);
  const auto s = std::find_if(q.begin(), q.end(), [](const QuartileRow& r) { return r.method == "lstm_s"; });
  REQUIRE(s != q.end());
  CHECK(s->median == 30.0);
  rows.pop_back();
  rows.pop_back();
  const auto q4 = study_quartiles(rows);
  const auto pa4 = std::find_if(q4.begin(), q4.end(), [](const QuartileRow& r) { return r.method == "pa"; });
  CHECK(pa4->q1 == doctest::Approx(1.75));
  CHECK(pa4->median == doctest::Approx(2.5));
}

TEST_CASE("default grid shape") {
  const auto g = default_study_grid();
  REQUIRE(g.size() == 5);
  for (const auto& ax : g) {
    CHECK(ax.eps.size() == 7);
    CHECK(std::find(ax.eps.begin(), ax.eps.end(), 0.0) != ax.eps.end());
    CHECK(ax.eps.front() == doctest::Approx(-0.45));
  }
  CHECK(g[3].eps.back() == doctest::Approx(0.5));
  CHECK(g[0].eps.back() == doctest::Approx(0.45));
}

TEST_CASE("perturbation study produces one row per cell") {
  const CellParams nom;
  std::vector<ProfileSpec> profs(2);
  for (int i = 0; i < 2; ++i) {
    profs[i].id = "e" + std::to_string(i);
    profs[i].seed = 500 + i;
    profs[i].duration = 200;
    profs[i].kind = i ? ProfileKind::RandomWalk : ProfileKind::PulseTrain;
  }
  ProfileSpec sp;
  sp.duration = 200;
  const auto base = simulate(gen_profile(sp), nom.electrical, nom.thermal, {0.8, 25}, 25);
  Model m;
  m.norm = compute_norm_stats({{"n", base}});
  m.window = 20;
  m.net = init_net(4, 3, 1, m.norm.label_mean, m.norm.label_std);
  StudyConfig cfg;
  cfg.run_adaptation = false;
  cfg.fom_nodes = 41;
  cfg.eval_stride = 5;
  cfg.workers = 4;
  const auto rep = perturbation_study(default_study_grid(), profs, m, WindowSet{}, cfg);
  REQUIRE(rep.rows.size() == 70);
  for (const auto& r : rep.rows) {
    CHECK(r.error.empty());
    CHECK(std::isfinite(r.rmse_pa));
    CHECK(std::isfinite(r.rmse_s));
    CHECK(std::isnan(r.rmse_da));
  }
  CHECK(rep.rows[0].param == Param::H);
  CHECK(rep.rows[0].profile_id == "e0");
  CHECK(rep.rows[1].profile_id == "e1");
  // eps = 0 still differs from the PA through the FOM discretization, but only a little
  for (const auto& r : rep.rows)
    if (r.eps == 0.0) CHECK(r.rmse_pa < 0.2);

  cfg.workers = 1;
  const auto serial = perturbation_study({{Param::H, {0.3}}}, profs, m, WindowSet{}, cfg);
  CHECK(serial.rows[0].rmse_s == rep.rows[2 * 5].rmse_s);
}

TEST_CASE("sensitivity study") {
  ProfileSpec p;
  p.seed = 3;
  p.duration = 900;
  const auto prof = gen_profile(p);
  const CellParams nom;
  for (Param q : kAllParams) {
    const auto z = sensitivity_study(q, 0.0, prof, nom);
    CHECK(z.d_voltage == 0.0);
    CHECK(z.d_surface == 0.0);
    CHECK(z.d_core == 0.0);
  }
  for (Param q : {Param::H, Param::CP, Param::KT}) {
    const auto s = sensitivity_study(q, 0.45, prof, nom);
    CHECK(s.d_voltage == 0.0);
    CHECK(s.d_core > 0.0);
  }
  const auto kt = sensitivity_study(Param::KT, -0.45, prof, nom);
  CHECK(kt.d_surface < kt.d_core);
  const auto r0 = sensitivity_study(Param::R0, 0.45, prof, nom);
  CHECK(r0.d_voltage > 0.0);
  CHECK(r0.d_core > 0.0);
}
