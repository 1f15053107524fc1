#include "coretemp/electrical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coretemp/errors.hpp"

namespace coretemp {

void ElectricalParams::validate() const {
  if (!(capacity_ah > 0)) throw DomainError("capacity must be positive");
  if (!(r0 > 0) || !(r1 > 0) || !(c1 > 0)) throw DomainError("r0, r1 and c1 must be positive");
  if (!(v_min < v_max)) throw DomainError("v_min must be below v_max");
  if (ocv_curve.size() < 2) throw DomainError("OCV curve needs at least two breakpoints");
  if (ocv_curve.front().soc != 0.0 || ocv_curve.back().soc != 1.0)
    throw DomainError("OCV curve must span soc 0..1");
  for (std::size_t i = 1; i < ocv_curve.size(); ++i) {
    if (!(ocv_curve[i].soc > ocv_curve[i - 1].soc)) throw DomainError("OCV soc breakpoints must strictly increase");
    if (ocv_curve[i].volts < ocv_curve[i - 1].volts) throw DomainError("OCV must be nondecreasing in soc");
  }
}

double ocv(double soc, const ElectricalParams& params) {
  if (!(soc >= 0.0 && soc <= 1.0)) throw DomainError("soc " + std::to_string(soc) + " outside [0,1]");
  const auto& c = params.ocv_curve;
  auto hi = std::lower_bound(c.begin(), c.end(), soc, [](const OcvPoint& p, double s) { return p.soc < s; });
  if (hi == c.begin()) return hi->volts;
  if (hi == c.end()) return c.back().volts;
  if (hi->soc == soc) return hi->volts;
  auto lo = hi - 1;
  const double w = (soc - lo->soc) / (hi->soc - lo->soc);
  return lo->volts + w * (hi->volts - lo->volts);
}

EcmStepResult ecm_step(const ElectricalState& state, double current, double dt, const ElectricalParams& params,
                       std::size_t step) {
  if (!(dt > 0)) throw DomainError("dt must be positive");
  if (!std::isfinite(current)) throw NumericError("non-finite current at step " + std::to_string(step));

  double soc = state.soc - current * dt / (3600.0 * params.capacity_ah);
  // accumulated rounding from many small steps should not trip the bound
  constexpr double kSocSlack = 1e-12;
  if (soc < 0.0 && soc > -kSocSlack) soc = 0.0;
  if (soc > 1.0 && soc < 1.0 + kSocSlack) soc = 1.0;
  if (!(soc >= 0.0 && soc <= 1.0)) throw SocBoundsError(step, "soc " + std::to_string(soc) + " left [0,1]");

  const double tau = params.r1 * params.c1;
  const double decay = std::exp(-dt / tau);
  const double v1 = state.v1 * decay - params.r1 * std::expm1(-dt / tau) * current;

  const double v_t = ocv(soc, params) - current * params.r0 - v1;
  if (v_t < params.v_min || v_t > params.v_max)
    throw VoltageCutoffError(step, "terminal voltage " + std::to_string(v_t) + " V outside cutoff window");

  const double q_gen = current * current * params.r0 + v1 * v1 / params.r1;
  return {{soc, v1}, v_t, q_gen};
}

}  // namespace coretemp
