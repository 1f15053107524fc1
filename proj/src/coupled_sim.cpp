#include "coretemp/coupled_sim.hpp"

#include <cmath>
#include <random>

#include "coretemp/fom.hpp"

namespace coretemp {

void CurrentProfile::validate(double max_abs_current) const {
  if (!(dt > 0)) throw DomainError("profile dt must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) throw DomainError("non-finite current at sample " + std::to_string(i));
    if (std::abs(samples[i]) > max_abs_current)
      throw DomainError("current " + std::to_string(samples[i]) + " A exceeds limit at sample " + std::to_string(i));
  }
}

void InputSeries::reserve(std::size_t n) {
  t.reserve(n);
  current.reserve(n);
  voltage.reserve(n);
  t_surf.reserve(n);
  t_fluid.reserve(n);
}

const std::vector<double>& TimeSeries::core() const {
  if (!t_core) throw UnlabeledError("series has no core temperature column");
  return *t_core;
}

std::string to_string(Backend b) { return b == Backend::PA ? "PA" : "FOM"; }

Backend backend_from_string(const std::string& s) {
  if (s == "PA" || s == "pa") return Backend::PA;
  if (s == "FOM" || s == "fom") return Backend::FOM;
  throw InvalidArgument("unknown thermal backend '" + s + "'");
}

namespace {

// Uniform interface over the two thermal backends.
class ThermalRunner {
 public:
  ThermalRunner(const ThermalParams& p, double t0, double dt, const SimOptions& opt) : backend_(opt.backend) {
    if (backend_ == Backend::PA) {
      disc_ = discretize(derive_pa_coefficients(p), dt);
      pa_ = ThermalStatePA::uniform(t0);
    } else {
      fom_.emplace(p, opt.fom_nodes, dt);
      grid_ = FomGrid::uniform(opt.fom_nodes, t0);
    }
  }

  std::pair<double, double> step(double q, double t_f) {
    if (backend_ == Backend::PA) {
      auto r = pa_step(pa_, q, t_f, disc_);
      pa_ = r.next;
      return {r.t_s, r.t_c};
    }
    fom_->step(grid_, q, t_f);
    auto o = fom_outputs(grid_);
    return {o.t_s, o.t_c};
  }

 private:
  Backend backend_;
  PaDiscrete disc_;
  ThermalStatePA pa_;
  std::optional<FomStepper> fom_;
  FomGrid grid_;
};

}  // namespace

TimeSeries simulate(const CurrentProfile& profile, const ElectricalParams& e_params, const ThermalParams& t_params,
                    const InitialCondition& init, double t_fluid, const SimOptions& options) {
  e_params.validate();
  t_params.validate();
  if (!(profile.dt > 0)) throw DomainError("profile dt must be positive");
  if (!(init.soc0 >= 0.0 && init.soc0 <= 1.0)) throw DomainError("initial soc outside [0,1]");

  const std::size_t n = profile.size();
  TimeSeries out;
  out.inputs.dt = profile.dt;
  out.inputs.reserve(n);
  std::vector<double> core;
  core.reserve(n);

  ThermalRunner thermal(t_params, init.t0, profile.dt, options);
  ElectricalState es{init.soc0, 0.0};

  std::optional<std::mt19937_64> rng;
  std::normal_distribution<double> unit(0.0, 1.0);
  if (options.noise) rng.emplace(options.noise->seed);

  for (std::size_t k = 0; k < n; ++k) {
    const double current = profile.samples[k];
    EcmStepResult e;
    try {
      e = ecm_step(es, current, profile.dt, e_params, k);
    } catch (const StepError& err) {
      out.t_core = std::move(core);
      throw SimulationError(err, std::move(out));
    }
    es = e.next;
    auto [t_s, t_c] = thermal.step(e.q_gen, t_fluid);

    double meas_i = current, meas_v = e.v_t, meas_ts = t_s;
    if (rng) {
      meas_i += options.noise->sigma_i * unit(*rng);
      meas_v += options.noise->sigma_v * unit(*rng);
      meas_ts += options.noise->sigma_t * unit(*rng);
    }
    out.inputs.t.push_back(static_cast<double>(k + 1) * profile.dt);
    out.inputs.current.push_back(meas_i);
    out.inputs.voltage.push_back(meas_v);
    out.inputs.t_surf.push_back(meas_ts);
    out.inputs.t_fluid.push_back(t_fluid);
    core.push_back(t_c);
  }
  out.t_core = std::move(core);
  return out;
}

std::vector<double> heat_from_current(const std::vector<double>& current, double dt, const ElectricalParams& p) {
  if (!(dt > 0)) throw DomainError("dt must be positive");
  const double tau = p.r1 * p.c1;
  const double decay = std::exp(-dt / tau);
  const double gain = -p.r1 * std::expm1(-dt / tau);
  std::vector<double> q(current.size());
  double v1 = 0.0;
  for (std::size_t k = 0; k < current.size(); ++k) {
    v1 = v1 * decay + gain * current[k];
    q[k] = current[k] * current[k] * p.r0 + v1 * v1 / p.r1;
  }
  return q;
}

double perturb(double theta_star, double epsilon) {
  const double v = theta_star * (1.0 + epsilon);
  if (!(v > 0)) throw DomainError("perturbed parameter must stay positive");
  return v;
}

}  // namespace coretemp
