#pragma once

#include <cstddef>
#include <vector>

#include "coretemp/thermal_pa.hpp"

namespace coretemp {

/// Radial temperature field on nodes r_i = i R / (n - 1).
struct FomGrid {
  std::vector<double> temps;

  static FomGrid uniform(std::size_t n_nodes, double temp);
  std::size_t n_nodes() const { return temps.size(); }
};

struct FomOutputs {
  double t_s;
  double t_c;
  double t_bar;
};

/// Crank-Nicolson / conservative finite-volume integrator for the radial heat
/// equation with uniform generation and a convective surface. Coefficients are
/// cached for one (params, n, dt).
class FomStepper {
 public:
  FomStepper(const ThermalParams& params, std::size_t n_nodes, double dt);

  void step(FomGrid& grid, double q_gen, double t_f) const;

  /// Total stored heat in J relative to 0 degC.
  double energy(const FomGrid& grid) const;
  std::size_t n_nodes() const { return cap_.size(); }
  double dt() const { return dt_; }
  /// Surface conductance h * A [W/K].
  double surface_conductance() const;

 private:
  ThermalParams params_;
  double dt_;
  std::vector<double> cap_;    // rho c_p * (r_e^2 - r_w^2) / 2
  std::vector<double> cond_;   // k r_face / dr between i and i+1
  std::vector<double> share_;  // (r_e^2 - r_w^2) / 2, generation weights
  double g_surf_;              // h R
  // LHS tridiagonal, factorized once (Thomas)
  std::vector<double> lower_, diag_, upper_;
  std::vector<double> c_prime_, denom_;
};

FomGrid fom_step(const FomGrid& grid, double q_gen, double t_f, double dt, const ThermalParams& params);

FomOutputs fom_outputs(const FomGrid& grid);

}  // namespace coretemp
