#pragma once

#include <array>

namespace coretemp {

struct ThermalParams {
  double rho = 2700.0;   // kg/m^3
  double c_p = 900.0;    // J/(kg K)
  double k_t = 0.6;      // W/(m K), radial
  double h = 20.0;       // W/(m^2 K)
  double radius = 0.013; // m
  double length = 0.065; // m

  double alpha() const { return k_t / (rho * c_p); }
  double volume() const;
  double area() const;  // lateral surface only
  void validate() const;
};

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Two-state polynomial-approximation thermal model.
/// State x = (t_bar, gamma_bar), input u = (Q [W], T_f [degC]),
/// output y = (T_s, T_c) = C x + D u.
struct PaStateSpace {
  Mat2 a{};
  Mat2 b{};
  Mat2 c{};
  Mat2 d{};
};

struct ThermalStatePA {
  double t_bar = 25.0;
  double gamma_bar = 0.0;

  static ThermalStatePA uniform(double temp) { return {temp, 0.0}; }
};

struct PaStepResult {
  ThermalStatePA next;
  double t_s;
  double t_c;
};

struct SteadyTemps {
  double t_bar;
  double t_s;
  double t_c;
};

/// Eliminates the coefficients of T(r) = a + b (r/R)^2 + d (r/R)^4 after
/// volume-averaging the radial heat equation and its radial derivative under a
/// symmetric core and a convective surface.
PaStateSpace derive_pa_coefficients(const ThermalParams& params);

/// Exact zero-order-hold discretization for a fixed step.
struct PaDiscrete {
  Mat2 phi{};    // e^{A dt}
  Mat2 gamma{};  // int_0^dt e^{A s} ds B
  Mat2 c{};
  Mat2 d{};
  double dt = 0.0;
};

PaDiscrete discretize(const PaStateSpace& ss, double dt);

PaStepResult pa_step(const ThermalStatePA& state, double q_gen, double t_f, const PaDiscrete& disc);
PaStepResult pa_step(const ThermalStatePA& state, double q_gen, double t_f, double dt, const PaStateSpace& ss);

/// Outputs (T_s, T_c) for a state under coolant temperature t_f.
std::array<double, 2> pa_outputs(const ThermalStatePA& state, double t_f, const PaStateSpace& ss);

/// Closed-form steady conduction with uniform generation.
SteadyTemps pa_steady_state(double q_gen, double t_f, const ThermalParams& params);

namespace detail {
// exp(m) and phi1(m) = m^{-1}(exp(m) - I) via eigenvalue divided differences.
Mat2 expm2(const Mat2& m);
Mat2 phi1_2(const Mat2& m);
}  // namespace detail

}  // namespace coretemp
