#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coretemp/adapt.hpp"
#include "coretemp/datagen.hpp"
#include "coretemp/evalkit.hpp"
#include "coretemp/net.hpp"

namespace coretemp {

struct SimulationSection {
  Backend backend = Backend::PA;
  std::size_t fom_nodes = 201;
  double soc0 = 0.8;
  double coolant_temp = 25.0;
  bool noise = false;
  NoiseSpec noise_spec;
  double max_abs_current = 40.0;
};

struct DatasetSection {
  std::vector<ProfileSpec> profiles;
  std::vector<StudyAxis> sweep;        // cartesian product over all axes
  std::vector<double> coolant_temps;
  Backend backend = Backend::PA;
  std::size_t window = 300;
  std::size_t stride = 10;
  std::uint64_t noise_seed = 0;        // scenario i uses noise_seed + i
};

struct AdaptSection {
  AdaptConfig config;
  std::size_t stride = 10;
  AlignmentSource alignment = AlignmentSource::Twin;
};

struct StudySection {
  std::vector<ProfileSpec> profiles;
  std::vector<StudyAxis> grid;
  std::size_t eval_stride = 1;
  std::size_t source_alignment_windows = 2000;
  bool run_adaptation = true;
};

struct SensitivitySection {
  std::vector<Param> params;
  std::vector<double> eps;
  ProfileSpec profile;
};

struct SmoothingSection {
  bool enabled = false;
  std::size_t window = 5;
  double sigma = 1.0;
};

/// Everything a command may read. Missing keys take the defaults below;
/// unknown keys are rejected.
struct Config {
  std::size_t workers = 1;
  CellParams cell;
  SimulationSection simulation;
  ProfileSpec profile;
  DatasetSection dataset;
  TrainConfig train;
  AdaptSection adapt;
  StudySection study;
  SensitivitySection sensitivity;
  SmoothingSection smoothing;

  std::vector<std::pair<std::string, std::uint64_t>> seeds() const;
  void validate() const;
};

Config default_config();
Config parse_config(const std::string& json_text, const std::string& origin = "<config>");
Config load_config(const std::string& path);
/// Canonical JSON of every field (defaults included).
std::string config_to_json(const Config& cfg);

/// One scenario per point of the dataset sweep, with ids that sort by
/// (profile, coolant temperature, sweep point).
std::vector<ScenarioSpec> dataset_scenarios(const Config& cfg);

}  // namespace coretemp
