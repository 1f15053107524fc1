#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coretemp/electrical.hpp"
#include "coretemp/errors.hpp"
#include "coretemp/thermal_pa.hpp"

namespace coretemp {

struct CurrentProfile {
  double dt = 1.0;
  std::vector<double> samples;  // A, discharge-positive

  void validate(double max_abs_current) const;
  std::size_t size() const { return samples.size(); }
};

/// Measurable signals of a run: (t, I, V_t, T_s, T_f). No core temperature.
struct InputSeries {
  double dt = 1.0;
  std::vector<double> t;
  std::vector<double> current;
  std::vector<double> voltage;
  std::vector<double> t_surf;
  std::vector<double> t_fluid;

  std::size_t size() const { return t.size(); }
  void reserve(std::size_t n);
};

/// Full record set; `t_core` is absent for unlabeled (field) data.
struct TimeSeries {
  InputSeries inputs;
  std::optional<std::vector<double>> t_core;

  std::size_t size() const { return inputs.size(); }
  bool labeled() const { return t_core.has_value(); }
  const std::vector<double>& core() const;
};

enum class Backend { PA, FOM };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct NoiseSpec {
  double sigma_i = 0.010;
  double sigma_v = 0.002;
  double sigma_t = 0.05;
  std::uint64_t seed = 0;
};

struct InitialCondition {
  double soc0 = 0.8;
  double t0 = 25.0;
};

struct SimOptions {
  Backend backend = Backend::PA;
  std::size_t fom_nodes = 201;
  std::optional<NoiseSpec> noise;
};

/// Raised when the electrical model leaves its admissible window. Holds the
/// records emitted before the failing step.
class SimulationError : public Error {
 public:
  SimulationError(const StepError& cause, TimeSeries partial)
      : Error(cause.kind(), cause.what()), step(cause.step), partial(std::move(partial)) {}
  std::size_t step;
  TimeSeries partial;
};

/// Runs the coupled electro-thermal model. Record k holds the state at
/// t = (k + 1) dt after applying sample k over one period.
TimeSeries simulate(const CurrentProfile& profile, const ElectricalParams& e_params, const ThermalParams& t_params,
                    const InitialCondition& init, double t_fluid, const SimOptions& options = {});

/// Irreversible heat per sample from the RC-branch dynamics alone (no SOC or cutoff
/// checks, since heat does not depend on SOC).
std::vector<double> heat_from_current(const std::vector<double>& current, double dt, const ElectricalParams& params);

/// theta * (1 + epsilon); throws DomainError if the result is not positive.
double perturb(double theta_star, double epsilon);

}  // namespace coretemp
