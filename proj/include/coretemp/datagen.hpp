#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coretemp/coupled_sim.hpp"

namespace coretemp {

enum class ProfileKind { PulseTrain, RandomWalk, ScaledReplay, Rest };

ProfileKind profile_kind_from_string(const std::string& s);
std::string to_string(ProfileKind k);

struct ProfileSpec {
  std::string id;
  ProfileKind kind = ProfileKind::PulseTrain;
  double max_current = 10.0;
  std::size_t duration = 3600;  // samples at dt
  std::uint64_t seed = 0;
  std::string path;             // scaled_replay source
  double discharge_bias = 0.1;  // mean current as a fraction of max_current
};

/// Synthetic load profile. Every kind satisfies max |I| <= max_current.
/// pulse_train: piecewise-constant segments of 1..60 s with magnitudes uniform
///   in [0, max]; the sign of each segment is drawn so that the cumulative
///   charge tracks a drift line at `discharge_bias * max`.
/// random_walk: clipped AR(1) current mean-reverting toward the same drift line.
/// scaled_replay: external profile rescaled so its peak |I| equals max_current.
/// rest: zero current for the whole duration.
CurrentProfile gen_profile(const ProfileSpec& spec);

enum class Param { H, CP, KT, R0, R1 };
inline constexpr std::array<Param, 5> kAllParams{Param::H, Param::CP, Param::KT, Param::R0, Param::R1};
std::string to_string(Param p);
Param param_from_string(const std::string& s);

struct Perturbation {
  std::array<double, 5> eps{};  // indexed by Param

  double& operator[](Param p) { return eps[static_cast<std::size_t>(p)]; }
  double operator[](Param p) const { return eps[static_cast<std::size_t>(p)]; }
};

struct CellParams {
  ElectricalParams electrical;
  ThermalParams thermal;
};

/// theta~ = theta* (1 + eps) applied to every perturbed field.
CellParams apply_perturbation(const CellParams& nominal, const Perturbation& p);

struct ScenarioSpec {
  std::string id;
  std::string profile_id;
  std::uint64_t seed = 0;
  double coolant_temp = 25.0;
  Perturbation eps;
  Backend backend = Backend::PA;

  void validate() const;
};

struct NormStats {
  std::array<double, 4> mean{};  // I, V_t, T_s, T_f
  std::array<double, 4> std{};
  double label_mean = 0.0;
  double label_std = 1.0;

  std::string hash() const;
};

inline constexpr double kStdFloor = 1e-3;

struct LabeledSeries {
  std::string scenario_id;
  TimeSeries series;
};

struct SimSettings {
  InitialCondition init;       // t0 is overridden by the scenario coolant temperature
  std::size_t fom_nodes = 201;
  bool noise = false;
  NoiseSpec noise_spec;        // seed is overridden by the scenario seed
  double max_abs_current = 40.0;
  std::size_t workers = 1;
};

struct Dataset {
  std::vector<LabeledSeries> series;
  NormStats norm;
};

/// Simulates one scenario (perturbed parameters, cell starting at coolant temperature).
TimeSeries simulate_scenario(const ScenarioSpec& sc, const CurrentProfile& profile, const CellParams& nominal,
                             const SimSettings& settings);

/// Runs every scenario and computes normalization stats over the result.
/// Output order follows sorted scenario ids.
Dataset build_dataset(const std::vector<ScenarioSpec>& scenarios, const std::map<std::string, ProfileSpec>& profiles,
                      const CellParams& nominal, const SimSettings& settings);

/// Population mean/std over every sample; std floored at kStdFloor.
NormStats compute_norm_stats(const std::vector<LabeledSeries>& series);

struct WindowRef {
  std::uint32_t block;
  std::uint32_t start;
};

/// Windows of length w over z-scored (I, V_t, T_s, T_f) features.
/// Windows reference their series block, so each window's features are a
/// contiguous w x 4 row-major span.
struct WindowSet {
  struct Block {
    std::string scenario_id;
    std::vector<double> features;  // n x 4
    std::vector<double> labels;    // n, empty when unlabeled
    std::size_t rows() const { return features.size() / 4; }
  };

  std::size_t w = 0;
  std::string norm_hash;
  std::vector<Block> blocks;
  std::vector<WindowRef> refs;

  std::size_t size() const { return refs.size(); }
  bool labeled() const;
  std::span<const double> features(std::size_t i) const;
  double label(std::size_t i) const;
  /// Index of the final step of window i within its block.
  std::size_t end_index(std::size_t i) const { return refs[i].start + w - 1; }
  /// Appends all windows of `other`; both must share w and the stats hash.
  void append(const WindowSet& other);
  WindowSet subset(std::span<const std::size_t> idx) const;
};

/// floor((n - w) / stride) + 1 windows; labels are raw degC of the final step.
WindowSet windowize(const TimeSeries& series, std::size_t w, std::size_t stride, const NormStats& norm,
                    const std::string& scenario_id = "");
/// Unlabeled variant; the label column does not exist in the input.
WindowSet windowize(const InputSeries& series, std::size_t w, std::size_t stride, const NormStats& norm,
                    const std::string& scenario_id = "");

}  // namespace coretemp
