#include "coretemp/fom.hpp"

#include <cmath>
#include <numbers>

#include "coretemp/errors.hpp"

namespace coretemp {

FomGrid FomGrid::uniform(std::size_t n_nodes, double temp) {
  if (n_nodes < 3) throw DomainError("FOM grid needs at least 3 nodes");
  return FomGrid{std::vector<double>(n_nodes, temp)};
}

FomStepper::FomStepper(const ThermalParams& params, std::size_t n, double dt) : params_(params), dt_(dt) {
  params.validate();
  if (n < 3) throw DomainError("FOM grid needs at least 3 nodes");
  if (!(dt > 0)) throw DomainError("dt must be positive");

  const double R = params.radius;
  const double dr = R / static_cast<double>(n - 1);
  const double rc = params.rho * params.c_p;

  cap_.resize(n);
  share_.resize(n);
  cond_.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) * dr;
    const double rw = i == 0 ? 0.0 : r - 0.5 * dr;
    const double re = i + 1 == n ? R : r + 0.5 * dr;
    share_[i] = 0.5 * (re * re - rw * rw);
    cap_[i] = rc * share_[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double rf = (static_cast<double>(i) + 0.5) * dr;
    cond_[i] = params.k_t * rf / dr;
  }
  g_surf_ = params.h * R;

  lower_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  upper_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double k_diag = 0.0;
    if (i > 0) {
      k_diag += cond_[i - 1];
      lower_[i] = -0.5 * cond_[i - 1];
    }
    if (i + 1 < n) {
      k_diag += cond_[i];
      upper_[i] = -0.5 * cond_[i];
    }
    if (i + 1 == n) k_diag += g_surf_;
    diag_[i] = cap_[i] / dt + 0.5 * k_diag;
  }

  c_prime_.assign(n, 0.0);
  denom_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double den = diag_[i] - (i > 0 ? lower_[i] * c_prime_[i - 1] : 0.0);
    if (!(std::abs(den) > 0)) throw NumericError("singular FOM system");
    denom_[i] = den;
    c_prime_[i] = upper_[i] / den;
  }
}

double FomStepper::surface_conductance() const { return params_.h * params_.area(); }

void FomStepper::step(FomGrid& grid, double q_gen, double t_f) const {
  const std::size_t n = cap_.size();
  if (grid.temps.size() != n) throw DimensionError("FOM grid size does not match stepper");
  if (!std::isfinite(q_gen) || !std::isfinite(t_f)) throw NumericError("non-finite input to FOM step");

  const double q_vol = q_gen / params_.volume();
  const auto& T = grid.temps;
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    double flux = 0.0;
    if (i > 0) flux += cond_[i - 1] * (T[i - 1] - T[i]);
    if (i + 1 < n) flux += cond_[i] * (T[i + 1] - T[i]);
    if (i + 1 == n) flux += g_surf_ * (t_f - T[i]) + g_surf_ * t_f;  // explicit half + implicit half of T_f
    rhs[i] = cap_[i] / dt_ * T[i] + 0.5 * flux + q_vol * share_[i];
  }
  std::vector<double>& x = grid.temps;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (rhs[i] - (i > 0 ? lower_[i] * d[i - 1] : 0.0)) / denom_[i];
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c_prime_[i] * x[i + 1];
}

double FomStepper::energy(const FomGrid& grid) const {
  double e = 0.0;
  for (std::size_t i = 0; i < cap_.size(); ++i) e += cap_[i] * grid.temps[i];
  return e * 2.0 * std::numbers::pi * params_.length;
}

FomGrid fom_step(const FomGrid& grid, double q_gen, double t_f, double dt, const ThermalParams& params) {
  FomStepper stepper(params, grid.n_nodes(), dt);
  FomGrid next = grid;
  stepper.step(next, q_gen, t_f);
  return next;
}

FomOutputs fom_outputs(const FomGrid& grid) {
  const auto& T = grid.temps;
  const std::size_t n = T.size();
  if (n < 3) throw DomainError("FOM grid needs at least 3 nodes");
  // Nodes are in units of R: t_bar = 2 * int_0^1 s T ds by trapezoid.
  const double ds = 1.0 / static_cast<double>(n - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 * ds : ds;
    acc += w * (static_cast<double>(i) * ds) * T[i];
  }
  return {T[n - 1], T[0], 2.0 * acc};
}

}  // namespace coretemp
