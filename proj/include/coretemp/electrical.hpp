#pragma once

#include <utility>
#include <vector>

namespace coretemp {

// First-order equivalent circuit: OCV(soc) - I*R0 - V1, with one R1||C1 branch.
// Current is discharge-positive.

struct OcvPoint {
  double soc;
  double volts;
};

struct ElectricalParams {
  double capacity_ah = 2.5;
  double r0 = 0.010;
  double r1 = 0.015;
  double c1 = 2000.0;
  std::vector<OcvPoint> ocv_curve{{0.0, 3.0}, {1.0, 3.4}};
  double v_min = 2.5;
  double v_max = 3.65;

  /// Throws DomainError naming the first violated invariant.
  void validate() const;
};

struct ElectricalState {
  double soc = 1.0;
  double v1 = 0.0;
};

struct EcmStepResult {
  ElectricalState next;
  double v_t;
  double q_gen;
};

double ocv(double soc, const ElectricalParams& params);

/// Advances the ECM by `dt` seconds under constant `current`.
/// The RC branch uses the exact zero-order-hold solution. Throws SocBoundsError
/// or VoltageCutoffError tagged with `step`.
EcmStepResult ecm_step(const ElectricalState& state, double current, double dt, const ElectricalParams& params,
                       std::size_t step = 0);

}  // namespace coretemp
