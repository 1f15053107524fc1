#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "coretemp/errors.hpp"
#include "coretemp/thermal_pa.hpp"

using namespace coretemp;

namespace {

// Steady radial conduction with uniform generation, written out by hand.
struct Closed {
  double t_s, t_c, t_bar;
};
Closed closed_form(double q, double tf, const ThermalParams& p) {
  const double pi = std::numbers::pi;
  const double ts = tf + q / (p.h * 2.0 * pi * p.radius * p.length);
  return {ts, ts + q / (4.0 * pi * p.k_t * p.length), ts + q / (8.0 * pi * p.k_t * p.length)};
}

ThermalParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  ThermalParams p;
  p.rho *= u(rng);
  p.c_p *= u(rng);
  p.k_t *= u(rng);
  p.h *= 3.0 * u(rng);
  p.radius *= u(rng);
  p.length *= u(rng);
  return p;
}

double eig_max_real(const Mat2& a) {
  const double tr = a[0][0] + a[1][1];
  const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  const double disc = tr * tr / 4.0 - det;
  return disc >= 0 ? tr / 2.0 + std::sqrt(disc) : tr / 2.0;
}

}  // namespace

TEST_CASE("derived quantities follow the primitives") {
  ThermalParams p;
  const double pi = std::numbers::pi;
  CHECK(p.volume() == doctest::Approx(pi * p.radius * p.radius * p.length).epsilon(1e-12));
  CHECK(p.area() == doctest::Approx(2.0 * pi * p.radius * p.length).epsilon(1e-12));
  CHECK(p.alpha() == doctest::Approx(p.k_t / (p.rho * p.c_p)).epsilon(1e-12));
  p.k_t = -1;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("closed-form steady state for the reference cell") {
  const ThermalParams p;
  const auto s = pa_steady_state(2.0, 25.0, p);
  const double pi = 3.141592653589793;
  const double ts = 25.0 + 2.0 / (p.h * 2 * pi * p.radius * p.length);
  CHECK(s.t_s == doctest::Approx(ts).epsilon(1e-12));
  CHECK(s.t_c == doctest::Approx(ts + 2.0 / (4 * pi * p.k_t * p.length)).epsilon(1e-12));
  CHECK(s.t_bar == doctest::Approx(ts + 2.0 / (8 * pi * p.k_t * p.length)).epsilon(1e-12));
  CHECK(std::abs(s.t_s - 43.84) < 0.01);
  CHECK(std::abs(s.t_c - 47.92) < 0.01);
  CHECK(std::abs(s.t_bar - 45.88) < 0.01);
  const auto z = pa_steady_state(0.0, 25.0, ThermalParams{});
  CHECK(z.t_s == 25.0);
  CHECK(z.t_c == 25.0);
  CHECK(z.t_bar == 25.0);
  const auto d = pa_steady_state(4.0, 25.0, ThermalParams{});
  CHECK(d.t_c - 25.0 == doctest::Approx(2.0 * (s.t_c - 25.0)).epsilon(1e-14));
}

TEST_CASE("the quartic ansatz represents the parabolic steady profile") {
  // T(r) = T_c - dT (r/R)^2: volume average T_c - dT/2, gradient average -4 dT / (3R)
  const ThermalParams p;
  const auto ss = derive_pa_coefficients(p);
  const double q = 3.0, tf = 10.0;
  const auto cf = closed_form(q, tf, p);
  const double dt = cf.t_c - cf.t_s;
  const ThermalStatePA x{cf.t_c - dt / 2.0, -4.0 * dt / (3.0 * p.radius)};
  const auto y = pa_outputs(x, tf, ss);
  CHECK(y[0] == doctest::Approx(cf.t_s).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(cf.t_c).epsilon(1e-12));
}

TEST_CASE("state space is stable with unit coolant gain and the adiabatic limit") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ThermalParams p = random_params(rng);
    const auto ss = derive_pa_coefficients(p);
    CHECK(eig_max_real(ss.a) < 0.0);
    // DC gain from T_f: y = (D - C A^-1 B) u
    const Mat2& a = ss.a;
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double xs0 = -(a[1][1] * ss.b[0][1] - a[0][1] * ss.b[1][1]) / det;
    const double xs1 = -(-a[1][0] * ss.b[0][1] + a[0][0] * ss.b[1][1]) / det;
    for (int row = 0; row < 2; ++row)
      CHECK(ss.c[row][0] * xs0 + ss.c[row][1] * xs1 + ss.d[row][1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  ThermalParams p;
  p.h = 1e-12;
  const auto ss = derive_pa_coefficients(p);
  CHECK(std::abs(ss.a[0][0]) < 1e-12);
  CHECK(std::abs(ss.a[0][1]) < 1e-12);
  CHECK(std::abs(ss.b[0][1]) < 1e-12);
  CHECK(ss.b[0][0] == doctest::Approx(1.0 / (p.rho * p.c_p * p.volume())).epsilon(1e-12));
}

TEST_CASE("steady state of the stepped model matches the closed form (random params)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uq(0.0, 5.0), ut(-20.0, 40.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ThermalParams p = random_params(rng);
    const double q = uq(rng), tf = ut(rng);
    const auto ss = derive_pa_coefficients(p);
    const auto cf = closed_form(q, tf, p);
    // fixed point: start at the closed-form state
    const double dtc = cf.t_c - cf.t_s;
    ThermalStatePA x{cf.t_bar, -4.0 * dtc / (3.0 * p.radius)};
    const auto r = pa_step(x, q, tf, 1.0, ss);
    CHECK(std::abs(r.next.t_bar - x.t_bar) < 1e-9);
    CHECK(std::abs(r.t_s - cf.t_s) < 1e-6);
    CHECK(std::abs(r.t_c - cf.t_c) < 1e-6);
    CHECK(r.t_c >= r.t_s);
    CHECK(cf.t_bar <= cf.t_c);
    CHECK(cf.t_bar >= cf.t_s);
  }
}

TEST_CASE("long runs converge to the closed-form steady state") {
  const ThermalParams p;
  const auto disc = discretize(derive_pa_coefficients(p), 1.0);
  ThermalStatePA x = ThermalStatePA::uniform(25.0);
  PaStepResult r{};
  for (int k = 0; k < 40000; ++k) {
    r = pa_step(x, 2.0, 25.0, disc);
    x = r.next;
  }
  const auto s = pa_steady_state(2.0, 25.0, p);
  CHECK(std::abs(r.t_s - s.t_s) < 1e-6);
  CHECK(std::abs(r.t_c - s.t_c) < 1e-6);
  CHECK(std::abs(x.t_bar - s.t_bar) < 1e-6);
}

TEST_CASE("equilibrium and offset invariance") {
  const auto ss = derive_pa_coefficients(ThermalParams{});
  const auto r = pa_step(ThermalStatePA::uniform(25.0), 0.0, 25.0, 1.0, ss);
  CHECK(r.t_s == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(r.t_c == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(r.next.t_bar == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(std::abs(r.next.gamma_bar) < 1e-14);

  ThermalStatePA a = ThermalStatePA::uniform(20.0), b = ThermalStatePA::uniform(30.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uq(0.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const double q = uq(rng);
    const auto ra = pa_step(a, q, 20.0, 1.0, ss);
    const auto rb = pa_step(b, q, 30.0, 1.0, ss);
    CHECK(rb.t_s - ra.t_s == doctest::Approx(10.0).epsilon(1e-11));
    CHECK(rb.t_c - ra.t_c == doctest::Approx(10.0).epsilon(1e-11));
    a = ra.next;
    b = rb.next;
  }
}

TEST_CASE("exact discretization agrees with fine RK4 on the continuous system") {
  const ThermalParams p;
  const auto ss = derive_pa_coefficients(p);
  auto f = [&](const std::array<double, 2>& x, double q, double tf) {
    std::array<double, 2> dx{};
    for (int i = 0; i < 2; ++i) dx[i] = ss.a[i][0] * x[0] + ss.a[i][1] * x[1] + ss.b[i][0] * q + ss.b[i][1] * tf;
    return dx;
  };
  std::array<double, 2> x{30.0, -50.0};
  ThermalStatePA s{30.0, -50.0};
  const double h = 1e-3;
  for (int k = 0; k < 20; ++k) {
    const double q = (k % 3) * 1.5, tf = 25.0 + k % 2;
    for (int j = 0; j < 1000; ++j) {
      auto add = [](std::array<double, 2> a, const std::array<double, 2>& b, double s) {
        a[0] += s * b[0];
        a[1] += s * b[1];
        return a;
      };
      const auto k1 = f(x, q, tf), k2 = f(add(x, k1, h / 2), q, tf), k3 = f(add(x, k2, h / 2), q, tf),
                 k4 = f(add(x, k3, h), q, tf);
      for (int i = 0; i < 2; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    s = pa_step(s, q, tf, 1.0, ss).next;
    CHECK(std::abs(s.t_bar - x[0]) < 1e-9);
    CHECK(std::abs(s.gamma_bar - x[1]) < 1e-7);
  }
}

TEST_CASE("trajectories stay bounded and decay to the coolant temperature") {
  const auto ss = derive_pa_coefficients(ThermalParams{});
  ThermalStatePA x{80.0, 500.0};
  double prev = 1e300;
  for (int k = 0; k < 20000; ++k) {
    x = pa_step(x, 0.0, 25.0, 1.0, ss).next;
    const double dist = std::hypot(x.t_bar - 25.0, x.gamma_bar);
    if (k > 300) CHECK(dist <= prev + 1e-12);  // after the fast mode has died out
    prev = dist;
  }
  CHECK(std::abs(x.t_bar - 25.0) < 1e-3);
}

TEST_CASE("step size and inputs are checked") {
  const auto ss = derive_pa_coefficients(ThermalParams{});
  CHECK_THROWS_AS(pa_step({}, 1.0, 25.0, 2.0, ss), DomainError);
  CHECK_THROWS_AS(pa_step({}, 1.0, 25.0, 0.0, ss), DomainError);
  CHECK_THROWS_AS(pa_step({}, NAN, 25.0, 1.0, ss), NumericError);
}

TEST_CASE("matrix exponential helpers against series expansion") {
  const Mat2 m{{{-0.3, 0.1}, {0.05, -0.7}}};
  Mat2 e{{{1, 0}, {0, 1}}}, term{{{1, 0}, {0, 1}}}, phi{{{1, 0}, {0, 1}}}, pterm{{{1, 0}, {0, 1}}};
  for (int n = 1; n < 30; ++n) {
    Mat2 t{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t[i][j] = (term[i][0] * m[0][j] + term[i][1] * m[1][j]) / n;
    term = t;
    Mat2 pt{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) pt[i][j] = (pterm[i][0] * m[0][j] + pterm[i][1] * m[1][j]) / (n + 1);
    pterm = pt;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        e[i][j] += term[i][j];
        phi[i][j] += pterm[i][j];
      }
  }
  const Mat2 ex = detail::expm2(m), ph = detail::phi1_2(m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(ex[i][j] == doctest::Approx(e[i][j]).epsilon(1e-13));
      CHECK(ph[i][j] == doctest::Approx(phi[i][j]).epsilon(1e-13));
    }
}
