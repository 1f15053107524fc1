#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coretemp/adapt.hpp"
#include "coretemp/checkpoint.hpp"
#include "coretemp/datagen.hpp"

namespace coretemp {

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
double max_abs_err(std::span<const double> pred, std::span<const double> truth);

/// Symmetric Gaussian-weighted moving average. Near the ends the truncated
/// kernel is renormalized, so the output length equals the input length.
std::vector<double> gaussian_smooth(std::span<const double> x, std::size_t window, double sigma);

/// Network predictions at the final step of every window (stride `stride`).
struct Evaluation {
  std::vector<std::size_t> steps;
  std::vector<double> pred;
  std::vector<double> truth;
  double rmse = 0.0;
};

/// Windows ending before `from_step` are skipped.
Evaluation evaluate_model(const Model& model, const TimeSeries& series, std::size_t stride = 1,
                          std::size_t from_step = 0, std::size_t workers = 1);

struct StudyAxis {
  Param param;
  std::vector<double> eps;
};

/// h, c_p, k_t over +-45% and r0, r1 from -45% to +50%, 7 values each.
std::vector<StudyAxis> default_study_grid();

/// Source-domain windows used for feature alignment in each cell.
/// Twin: the source simulator (nominal PA) driven by the cell's own profile and
/// coolant temperature. Pretraining: a seeded subsample of the pretraining set.
enum class AlignmentSource { Twin, Pretraining };

struct StudyConfig {
  CellParams nominal;
  double coolant_temp = 25.0;
  std::size_t fom_nodes = 201;
  bool noise = false;
  NoiseSpec noise_spec;
  std::size_t eval_stride = 1;
  std::size_t adapt_stride = 10;
  AlignmentSource alignment = AlignmentSource::Twin;
  std::size_t source_alignment_windows = 2000;  // Pretraining mode only
  AdaptConfig adapt;
  bool run_adaptation = true;
  std::size_t workers = 1;  // grid cells in flight
};

struct StudyRow {
  Param param;
  double eps;
  std::string profile_id;
  double rmse_pa = 0.0;
  double rmse_s = 0.0;
  double rmse_da = 0.0;  // NaN when adaptation is disabled
  double reliable_fraction = 0.0;
  double runtime_s = 0.0;
  std::string error;  // empty on success
};

struct QuartileRow {
  Param param;
  double eps;
  std::string method;  // pa | lstm_s | lstm_da
  std::size_t n;
  double min, q1, median, q3, max;
};

struct StudyReport {
  std::vector<StudyRow> rows;  // grid order: axis, eps, profile
  std::vector<QuartileRow> quartiles;
};

/// `source` is only read in AlignmentSource::Pretraining mode.
/// Target = FOM with the perturbed parameter; methods: open-loop PA with the
/// nominal parameters, the pretrained network, and the adapted network.
/// Errors are scored on the final steps of the evaluation windows only, so
/// all three methods see the same span. Failed cells carry an error string.
StudyReport perturbation_study(const std::vector<StudyAxis>& grid, const std::vector<ProfileSpec>& profiles,
                               const Model& pretrained, const WindowSet& source, const StudyConfig& cfg);

/// Linear-interpolated quartiles over the successful rows of each (param, eps).
std::vector<QuartileRow> study_quartiles(const std::vector<StudyRow>& rows);

struct Sensitivity {
  double d_voltage = 0.0;
  double d_surface = 0.0;
  double d_core = 0.0;
};

struct SensitivityOptions {
  double coolant_temp = 25.0;
  SimOptions sim;
  double soc0 = 0.8;
};

/// Max-over-time absolute deviation of V_t, T_s, T_c between the nominal and
/// the perturbed simulation of the same profile.
Sensitivity sensitivity_study(Param param, double eps, const CurrentProfile& profile, const CellParams& nominal,
                              const SensitivityOptions& opts = {});

}  // namespace coretemp
