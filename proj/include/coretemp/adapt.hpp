#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "coretemp/checkpoint.hpp"
#include "coretemp/coupled_sim.hpp"

namespace coretemp {

struct AdaptConfig {
  double lambda_mmd = 1.0;
  double lambda_coral = 1.0;
  std::vector<double> bandwidths;   // empty: median heuristic x {0.5, 1, 2}
  double tau_reliable = 1.0;        // degC
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;
  double labeled_fraction = 0.0;    // 0 = unsupervised
  bool freeze_fc2 = false;
  std::size_t diagnostic_samples = 500;
  std::size_t workers = 1;

  void validate() const;
};

struct PseudoLabelSet {
  std::vector<double> core;     // PA core temperature per step
  std::vector<double> surface;  // PA surface temperature per step
  std::vector<std::uint8_t> reliable;
  ThermalParams provenance;
};

/// Runs the source-parameterized PA model on the target's current and coolant
/// temperature (heat reconstructed with the source ECM). The cell is assumed to
/// start at the first coolant temperature. Reliability is left all-true; see
/// select_reliable.
PseudoLabelSet pseudo_labels(const InputSeries& target, const ThermalParams& source_thermal,
                             const ElectricalParams& source_electrical);

/// mask[i] = |T_s,PA(i) - T_s,measured(i)| <= tau.
std::vector<std::uint8_t> select_reliable(const PseudoLabelSet& pseudo, const std::vector<double>& measured_ts,
                                          double tau);

enum class MmdEstimator { Unbiased, Biased };

/// Multi-kernel Gaussian MMD^2 between column sets (F x n, F x m), averaged over
/// bandwidths and clamped at 0. Sets of one sample use the biased within-set term.
double mmd2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<double>& bandwidths,
            MmdEstimator est = MmdEstimator::Unbiased);

/// Value plus gradients w.r.t. x and y (zero where the clamp is active).
double mmd2_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<double>& bandwidths,
                 Eigen::MatrixXd& dx, Eigen::MatrixXd& dy);

/// ||C_x - C_y||_F^2 / (4 F^2), C the population covariance plus 1e-6 I.
double coral(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double coral_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::MatrixXd& dx, Eigen::MatrixXd& dy);

/// sigma_med * {0.5, 1, 2} from the median pairwise distance of the pooled columns.
std::vector<double> median_bandwidths(const Eigen::MatrixXd& pooled);

struct AdaptEpoch {
  std::size_t epoch;  // 0 = before any update
  double mse;         // over reliable/labeled target windows
  double mmd2;
  double coral;
};

struct AdaptResult {
  Model model;
  std::vector<AdaptEpoch> history;
  std::vector<double> bandwidths;
  std::size_t reliable_windows = 0;
};

/// Unsupervised adaptation: LSTM frozen, fc1 (and fc2 unless configured) tuned on
/// MSE to reliable pseudo-labels + lambda_mmd MMD^2 + lambda_coral CORAL between
/// fc1 features of source and target windows. The target windows carry no labels.
AdaptResult domain_adapt(const Model& pretrained, const WindowSet& source, const WindowSet& target,
                         const PseudoLabelSet& pseudo, const AdaptConfig& cfg);

/// First step index that is NOT labeled when the leading `fraction` of a
/// series of n steps is labeled.
std::size_t labeled_cutoff(std::size_t n, double fraction);

/// Same objective with true labels on the leading fraction of the cycle in
/// place of pseudo-labels. `target` must be labeled.
AdaptResult adapt_with_labels(const Model& pretrained, const WindowSet& source, const WindowSet& target,
                              double labeled_fraction, const AdaptConfig& cfg);

struct PcaResult {
  Eigen::MatrixXd projection;         // k x n
  Eigen::VectorXd explained_ratio;    // k
  Eigen::MatrixXd components;         // F x k
  Eigen::VectorXd mean;               // F
};

/// Mean-centred projection onto the leading eigenvectors of the covariance of
/// the columns. Returns fewer than k components when the data are rank-deficient.
PcaResult pca_project(const Eigen::MatrixXd& features, int k = 3);

}  // namespace coretemp
