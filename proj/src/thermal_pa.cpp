#include "coretemp/thermal_pa.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "coretemp/errors.hpp"

namespace coretemp {

double ThermalParams::volume() const { return std::numbers::pi * radius * radius * length; }
double ThermalParams::area() const { return 2.0 * std::numbers::pi * radius * length; }

void ThermalParams::validate() const {
  if (!(rho > 0 && c_p > 0 && k_t > 0 && h > 0 && radius > 0 && length > 0))
    throw DomainError("thermal parameters must all be positive");
}

PaStateSpace derive_pa_coefficients(const ThermalParams& p) {
  p.validate();
  const double R = p.radius, k = p.k_t, h = p.h;
  const double rc = p.rho * p.c_p;
  const double den = R * h + 24.0 * k;

  PaStateSpace ss;
  ss.a[0][0] = -48.0 * h * k / (R * rc * den);
  ss.a[0][1] = -15.0 * h * k / (rc * den);
  ss.a[1][0] = -320.0 * h * k / (R * R * rc * den);
  ss.a[1][1] = -120.0 * k * (R * h + 4.0 * k) / (R * R * rc * den);

  ss.b[0][0] = 1.0 / (rc * p.volume());
  ss.b[0][1] = 48.0 * h * k / (R * rc * den);
  ss.b[1][0] = 0.0;
  ss.b[1][1] = 320.0 * h * k / (R * R * rc * den);

  // row 0: surface, row 1: core
  ss.c[0][0] = 24.0 * k / den;
  ss.c[0][1] = 15.0 * R * k / (2.0 * den);
  ss.c[1][0] = -3.0 * (R * h - 8.0 * k) / den;
  ss.c[1][1] = -15.0 * R * (R * h + 8.0 * k) / (8.0 * den);

  ss.d[0][1] = R * h / den;
  ss.d[1][1] = 4.0 * R * h / den;
  return ss;
}

namespace detail {
namespace {

using cplx = std::complex<double>;

template <class F, class DF>
Mat2 apply_fn(const Mat2& m, F f, DF df) {
  const double tr = m[0][0] + m[1][1];
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double half = 0.5 * tr;
  const cplx delta = std::sqrt(cplx(half * half - det));
  const cplx l1 = half + delta, l2 = half - delta;

  const double scale = std::max({std::abs(l1), std::abs(l2), 1.0});
  cplx slope;
  if (std::abs(l1 - l2) > 1e-7 * scale) {
    slope = (f(l1) - f(l2)) / (l1 - l2);
  } else {
    slope = df(cplx(half));
  }
  const cplx f2 = f(l2);
  Mat2 out{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx shifted = cplx(m[i][j]) - (i == j ? l2 : cplx(0.0));
      out[i][j] = ((i == j ? f2 : cplx(0.0)) + slope * shifted).real();
    }
  }
  return out;
}

cplx phi1(cplx z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

cplx dphi1(cplx z) {
  if (std::abs(z) < 1e-4) return 0.5 + z / 3.0 + z * z / 8.0;
  return (z * std::exp(z) - std::exp(z) + 1.0) / (z * z);
}

}  // namespace

Mat2 expm2(const Mat2& m) {
  return apply_fn(m, [](cplx z) { return std::exp(z); }, [](cplx z) { return std::exp(z); });
}

Mat2 phi1_2(const Mat2& m) { return apply_fn(m, phi1, dphi1); }

}  // namespace detail

namespace {

Mat2 mul(const Mat2& x, const Mat2& y) {
  Mat2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
  return r;
}

}  // namespace

PaDiscrete discretize(const PaStateSpace& ss, double dt) {
  if (!(dt > 0) || dt > 1.0) throw DomainError("PA step requires 0 < dt <= 1 s");
  Mat2 adt{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) adt[i][j] = ss.a[i][j] * dt;
  PaDiscrete disc;
  disc.phi = detail::expm2(adt);
  Mat2 g = mul(detail::phi1_2(adt), ss.b);
  for (auto& row : g)
    for (auto& v : row) v *= dt;
  disc.gamma = g;
  disc.c = ss.c;
  disc.d = ss.d;
  disc.dt = dt;
  return disc;
}

PaStepResult pa_step(const ThermalStatePA& s, double q_gen, double t_f, const PaDiscrete& disc) {
  if (!std::isfinite(q_gen) || !std::isfinite(t_f) || !std::isfinite(s.t_bar) || !std::isfinite(s.gamma_bar))
    throw NumericError("non-finite input to PA thermal step");
  const auto& P = disc.phi;
  const auto& G = disc.gamma;
  ThermalStatePA n;
  n.t_bar = P[0][0] * s.t_bar + P[0][1] * s.gamma_bar + G[0][0] * q_gen + G[0][1] * t_f;
  n.gamma_bar = P[1][0] * s.t_bar + P[1][1] * s.gamma_bar + G[1][0] * q_gen + G[1][1] * t_f;
  const double t_s = disc.c[0][0] * n.t_bar + disc.c[0][1] * n.gamma_bar + disc.d[0][0] * q_gen + disc.d[0][1] * t_f;
  const double t_c = disc.c[1][0] * n.t_bar + disc.c[1][1] * n.gamma_bar + disc.d[1][0] * q_gen + disc.d[1][1] * t_f;
  return {n, t_s, t_c};
}

PaStepResult pa_step(const ThermalStatePA& state, double q_gen, double t_f, double dt, const PaStateSpace& ss) {
  return pa_step(state, q_gen, t_f, discretize(ss, dt));
}

std::array<double, 2> pa_outputs(const ThermalStatePA& s, double t_f, const PaStateSpace& ss) {
  return {ss.c[0][0] * s.t_bar + ss.c[0][1] * s.gamma_bar + ss.d[0][1] * t_f,
          ss.c[1][0] * s.t_bar + ss.c[1][1] * s.gamma_bar + ss.d[1][1] * t_f};
}

SteadyTemps pa_steady_state(double q_gen, double t_f, const ThermalParams& p) {
  p.validate();
  const double t_s = t_f + q_gen / (p.h * p.area());
  const double grad = q_gen / (4.0 * std::numbers::pi * p.k_t * p.length);
  return {t_s + 0.5 * grad, t_s, t_s + grad};
}

}  // namespace coretemp
