#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coretemp/datagen.hpp"

namespace coretemp {

inline constexpr int kInputDim = 4;

/// LSTM(4 -> H) -> FC1(H -> F, tanh) -> FC2(F -> 1). Gate rows are ordered
/// input, forget, candidate, output.
struct NetWeights {
  Eigen::MatrixXd wx;  // 4H x 4
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::VectorXd b;   // 4H
  Eigen::MatrixXd w1;  // F x H
  Eigen::VectorXd b1;  // F
  Eigen::VectorXd w2;  // F
  double b2 = 0.0;

  int hidden() const { return static_cast<int>(wh.cols()); }
  int features() const { return static_cast<int>(w1.rows()); }

  static NetWeights zeros(int hidden, int features);
  void set_zero();
  bool all_finite() const;
  /// Flat views in a fixed block order: lstm (wx, wh, b), fc1 (w1, b1), fc2 (w2, b2).
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

enum class Block { Lstm = 0, Fc1 = 1, Fc2 = 2 };

struct FreezeMask {
  bool lstm = false;
  bool fc1 = false;
  bool fc2 = false;

  bool frozen(Block b) const { return b == Block::Lstm ? lstm : (b == Block::Fc1 ? fc1 : fc2); }
};

struct NetParams {
  NetWeights w;
  FreezeMask freeze;
};

/// Xavier-uniform weights, forget-gate bias +1. The output layer is scaled by
/// `label_std` and its bias set to `label_mean` so outputs start in degC range.
NetParams init_net(int hidden, int features, std::uint64_t seed, double label_mean = 0.0, double label_std = 1.0);

/// Activations kept for BPTT over a batch of B windows of length W.
struct ForwardCache {
  int steps = 0;
  int batch = 0;
  std::uint64_t fingerprint = 0;  // of the weights used
  std::vector<Eigen::MatrixXd> x;      // per step, 4 x B
  std::vector<Eigen::MatrixXd> gates;  // per step, 4H x B (activated)
  std::vector<Eigen::MatrixXd> c;      // per step, H x B
  std::vector<Eigen::MatrixXd> tanh_c; // per step, H x B
  std::vector<Eigen::MatrixXd> h;      // per step, H x B
  Eigen::MatrixXd features;            // F x B
  Eigen::VectorXd pred;                // B
};

struct ForwardResult {
  Eigen::VectorXd pred;      // degC per window
  Eigen::MatrixXd features;  // F x B high-level features (fc1 output)
};

/// Runs the batch. `windows` are W x 4 row-major spans of equal length.
/// When `cache` is given it is filled for backward().
ForwardResult forward(std::span<const std::span<const double>> windows, const NetParams& params,
                      ForwardCache* cache = nullptr);

/// Single-window convenience.
ForwardResult forward(std::span<const double> window, const NetParams& params);

/// Final LSTM hidden state per window (H x B).
Eigen::MatrixXd lstm_final_hidden(std::span<const std::span<const double>> windows, const NetWeights& w);

/// Head only, from final hidden states.
ForwardResult head_forward(const Eigen::MatrixXd& hidden, const NetWeights& w);

/// Gradients of a loss whose derivatives w.r.t. the predictions are `d_pred`
/// and w.r.t. the fc1 features are `d_features` (optional, F x B). Frozen
/// blocks get exact zeros. Throws StaleCacheError if the weights changed
/// since the cache was filled.
NetWeights backward(const ForwardCache& cache, const Eigen::VectorXd& d_pred, const Eigen::MatrixXd* d_features,
                    const NetParams& params);

std::uint64_t fingerprint(const NetWeights& w);

/// Head-only gradients given the final hidden states (LSTM block gets zeros).
NetWeights head_backward(const Eigen::MatrixXd& hidden, const ForwardResult& fwd, const Eigen::VectorXd& d_pred,
                         const Eigen::MatrixXd* d_features, const NetParams& params);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

struct AdamState {
  NetWeights m;
  NetWeights v;
  std::uint64_t t = 0;

  static AdamState for_net(const NetWeights& w);
};

/// Global-norm clip over unfrozen blocks, then one bias-corrected Adam update.
/// Frozen blocks are not touched. Returns the pre-clip gradient norm.
double adam_step(NetParams& params, NetWeights grads, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  int hidden = 32;
  int features = 16;
  std::size_t epochs = 12;
  std::size_t batch_size = 32;
  AdamConfig adam{3e-3};
  double lr_final_fraction = 0.1;  // cosine decay target
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  std::size_t workers = 1;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch;
  double train_mse;
  double val_mse;  // NaN when there is no validation split
};

struct TrainResult {
  NetParams params;
  std::vector<EpochStats> history;
  std::vector<std::string> validation_blocks;
};

/// Minibatch MSE training with seeded shuffling. Validation holds out whole
/// series (blocks), never individual windows.
TrainResult train_supervised(const WindowSet& data, const TrainConfig& cfg,
                             const std::function<void(const EpochStats&)>& on_epoch = {});

/// Predictions for every window, evaluated in fixed chunks across workers.
std::vector<double> predict(const WindowSet& data, const NetParams& params, std::size_t workers = 1);

/// Final hidden states (H x N) for every window.
Eigen::MatrixXd hidden_states(const WindowSet& data, const NetWeights& w, std::size_t workers = 1);

/// Sum of gradients of 0.5 (pred - label)^2 over the given windows divided by
/// `denominator`, accumulated over fixed-size chunks in index order.
NetWeights mse_gradient(const WindowSet& data, std::span<const std::size_t> idx, const NetParams& params,
                        double denominator, std::size_t workers, double* loss_sum = nullptr);

}  // namespace coretemp
