#include <doctest.h>

#include <cmath>
#include <numbers>

#include "coretemp/datagen.hpp"
#include "coretemp/electrical.hpp"
#include "coretemp/fom.hpp"
#include "coretemp/thermal_pa.hpp"

using namespace coretemp;

namespace {

FomOutputs steady_fom(std::size_t n, double q, double tf, const ThermalParams& p) {
  FomStepper st(p, n, 1.0);
  FomGrid g = FomGrid::uniform(n, tf);
  // the slowest mode decays in ~ rho c V / (h A) = 1.8e3 s; 60k s is ample
  for (int k = 0; k < 60000; ++k) st.step(g, q, tf);
  return fom_outputs(g);
}

double steady_tbar_error(std::size_t n) {
  const ThermalParams p;
  const double pi = std::numbers::pi;
  const double ts = 25.0 + 2.0 / (p.h * 2 * pi * p.radius * p.length);
  return std::abs(steady_fom(n, 2.0, 25.0, p).t_bar - (ts + 2.0 / (8 * pi * p.k_t * p.length)));
}

}  // namespace

TEST_CASE("uniform grid at the coolant temperature is an equilibrium") {
  const ThermalParams p;
  FomGrid g = FomGrid::uniform(51, 25.0);
  for (int k = 0; k < 100; ++k) g = fom_step(g, 0.0, 25.0, 1.0, p);
  for (double t : g.temps) CHECK(std::abs(t - 25.0) < 1e-12);
  const auto o = fom_outputs(FomGrid::uniform(11, 25.0));
  CHECK(o.t_s == 25.0);
  CHECK(o.t_c == 25.0);
  CHECK(o.t_bar == doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("volume average of a profile linear in r^2") {
  const std::size_t n = 201;
  FomGrid g;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) / (n - 1);
    g.temps.push_back(25.0 + r * r);
  }
  CHECK(std::abs(fom_outputs(g).t_bar - 25.5) < 1e-4);
}

TEST_CASE("steady state matches closed-form conduction at n = 201") {
  const ThermalParams p;
  const double pi = std::numbers::pi;
  const auto o = steady_fom(201, 2.0, 25.0, p);
  const double ts = 25.0 + 2.0 / (p.h * 2 * pi * p.radius * p.length);
  CHECK(std::abs(o.t_s - ts) < 1e-3);
  CHECK(std::abs(o.t_c - (ts + 2.0 / (4 * pi * p.k_t * p.length))) < 1e-3);
  CHECK(std::abs(o.t_bar - (ts + 2.0 / (8 * pi * p.k_t * p.length))) < 1e-3);
  CHECK((o.t_c - o.t_s) == doctest::Approx(2.0 / (4 * pi * p.k_t * p.length)).epsilon(1e-6));
}

TEST_CASE("volume-average error is second order in the node spacing") {
  const double e51 = steady_tbar_error(51), e101 = steady_tbar_error(101), e201 = steady_tbar_error(201);
  CHECK(e51 / e101 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e101 / e201 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("each step balances stored energy against generation and convection") {
  const ThermalParams p;
  FomStepper st(p, 101, 1.0);
  FomGrid g = FomGrid::uniform(101, 25.0);
  for (int k = 0; k < 600; ++k) {
    const double q = (k / 30) % 2 ? 3.0 : 0.5, tf = 25.0 - (k % 50) * 0.1;
    const double e0 = st.energy(g), ts0 = g.temps.back();
    st.step(g, q, tf);
    const double de = st.energy(g) - e0;
    // Crank-Nicolson: surface flux uses the average of the old and new surface temperatures
    const double expected = q - st.surface_conductance() * (0.5 * (ts0 + g.temps.back()) - tf);
    CHECK(std::abs(de - expected) <= 1e-6 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("heating from a smooth state never undershoots (maximum principle)") {
  const ThermalParams p;
  FomStepper st(p, 101, 1.0);
  FomGrid g = FomGrid::uniform(101, 20.0);
  for (int k = 0; k < 3000; ++k) {
    st.step(g, (k % 40) < 20 ? 4.0 : 0.0, 25.0);
    double lo = 1e300;
    for (double t : g.temps) lo = std::min(lo, t);
    CHECK(lo >= 20.0 - 1e-9);
  }
}

TEST_CASE("PA tracks the FOM core temperature on a pulse load") {
  const ThermalParams p;
  const ElectricalParams e;
  ProfileSpec ps;
  ps.seed = 77;
  const auto prof = gen_profile(ps);
  const auto heat = heat_from_current(prof.samples, 1.0, e);
  FomStepper st(p, 201, 1.0);
  FomGrid g = FomGrid::uniform(201, 25.0);
  const auto disc = discretize(derive_pa_coefficients(p), 1.0);
  ThermalStatePA x = ThermalStatePA::uniform(25.0);
  double se = 0.0;
  for (std::size_t k = 0; k < heat.size(); ++k) {
    st.step(g, heat[k], 25.0);
    const auto r = pa_step(x, heat[k], 25.0, disc);
    x = r.next;
    se += std::pow(r.t_c - g.temps.front(), 2);
  }
  CHECK(std::sqrt(se / heat.size()) < 0.2);
}
