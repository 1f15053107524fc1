#include "coretemp/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "coretemp/errors.hpp"
#include "coretemp/parallel.hpp"

namespace coretemp {

namespace {

constexpr std::size_t kChunk = 32;

template <class W, class Fn>
void for_each_block(W& w, Fn&& fn) {
  fn(Block::Lstm, w.wx.data(), static_cast<std::size_t>(w.wx.size()));
  fn(Block::Lstm, w.wh.data(), static_cast<std::size_t>(w.wh.size()));
  fn(Block::Lstm, w.b.data(), static_cast<std::size_t>(w.b.size()));
  fn(Block::Fc1, w.w1.data(), static_cast<std::size_t>(w.w1.size()));
  fn(Block::Fc1, w.b1.data(), static_cast<std::size_t>(w.b1.size()));
  fn(Block::Fc2, w.w2.data(), static_cast<std::size_t>(w.w2.size()));
  fn(Block::Fc2, &w.b2, std::size_t{1});
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

std::size_t window_steps(std::span<const std::span<const double>> windows) {
  if (windows.empty()) throw DimensionError("empty batch");
  const std::size_t len = windows.front().size();
  if (len == 0 || len % kInputDim != 0) throw DimensionError("window size is not a multiple of the feature count");
  for (const auto& w : windows)
    if (w.size() != len) throw DimensionError("windows in a batch must have equal length");
  return len / kInputDim;
}

}  // namespace

NetWeights NetWeights::zeros(int hidden, int features) {
  NetWeights w;
  w.wx = Eigen::MatrixXd::Zero(4 * hidden, kInputDim);
  w.wh = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  w.b = Eigen::VectorXd::Zero(4 * hidden);
  w.w1 = Eigen::MatrixXd::Zero(features, hidden);
  w.b1 = Eigen::VectorXd::Zero(features);
  w.w2 = Eigen::VectorXd::Zero(features);
  w.b2 = 0.0;
  return w;
}

void NetWeights::set_zero() {
  for_each_block(*this, [](Block, double* p, std::size_t n) { std::fill(p, p + n, 0.0); });
}

bool NetWeights::all_finite() const {
  bool ok = true;
  for_each_block(*this, [&](Block, const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ok = ok && std::isfinite(p[i]);
  });
  return ok;
}

std::vector<double> NetWeights::flatten() const {
  std::vector<double> out;
  for_each_block(*this, [&](Block, const double* p, std::size_t n) { out.insert(out.end(), p, p + n); });
  return out;
}

void NetWeights::unflatten(std::span<const double> flat) {
  std::size_t off = 0;
  for_each_block(*this, [&](Block, double* p, std::size_t n) {
    if (off + n > flat.size()) throw DimensionError("flat weight vector too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off), flat.begin() + static_cast<std::ptrdiff_t>(off + n), p);
    off += n;
  });
  if (off != flat.size()) throw DimensionError("flat weight vector too long");
}

std::uint64_t fingerprint(const NetWeights& w) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for_each_block(w, [&](Block, const double* p, std::size_t n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  });
  return h;
}

NetParams init_net(int hidden, int features, std::uint64_t seed, double label_mean, double label_std) {
  if (hidden <= 0 || features <= 0) throw InvalidArgument("layer sizes must be positive");
  std::mt19937_64 rng(seed);
  auto xavier = [&](Eigen::Ref<Eigen::MatrixXd> m, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  };
  NetParams p;
  p.w = NetWeights::zeros(hidden, features);
  for (int g = 0; g < 4; ++g) {
    xavier(p.w.wx.middleRows(g * hidden, hidden), kInputDim, hidden);
    xavier(p.w.wh.middleRows(g * hidden, hidden), hidden, hidden);
  }
  p.w.b.segment(hidden, hidden).setOnes();
  xavier(p.w.w1, hidden, features);
  Eigen::MatrixXd w2(features, 1);
  xavier(w2, features, 1);
  p.w.w2 = w2.col(0) * label_std;
  p.w.b2 = label_mean;
  return p;
}

ForwardResult head_forward(const Eigen::MatrixXd& hidden, const NetWeights& w) {
  if (hidden.rows() != w.hidden()) throw DimensionError("hidden state size mismatch");
  ForwardResult r;
  r.features = ((w.w1 * hidden).colwise() + w.b1).array().tanh().matrix();
  r.pred = (r.features.transpose() * w.w2).array() + w.b2;
  return r;
}

namespace {

// Shared LSTM recurrence; fills the cache when given.
Eigen::MatrixXd run_lstm(std::span<const std::span<const double>> windows, const NetWeights& w,
                         ForwardCache* cache) {
  const std::size_t steps = window_steps(windows);
  const int H = w.hidden();
  const auto B = static_cast<Eigen::Index>(windows.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd x(kInputDim, B);
  Eigen::MatrixXd z(4 * H, B);
  if (cache) {
    cache->steps = static_cast<int>(steps);
    cache->batch = static_cast<int>(B);
    cache->x.assign(steps, {});
    cache->gates.assign(steps, {});
    cache->c.assign(steps, {});
    cache->tanh_c.assign(steps, {});
    cache->h.assign(steps, {});
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index j = 0; j < B; ++j)
      for (int f = 0; f < kInputDim; ++f) x(f, j) = windows[static_cast<std::size_t>(j)][t * kInputDim + f];
    z.noalias() = w.wx * x;
    z.noalias() += w.wh * h;
    z.colwise() += w.b;
    z.topRows(2 * H) = sigmoid(z.topRows(2 * H).array()).matrix();
    z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
    z.bottomRows(H) = sigmoid(z.bottomRows(H).array()).matrix();
    c = (z.middleRows(H, H).array() * c.array() + z.topRows(H).array() * z.middleRows(2 * H, H).array()).matrix();
    Eigen::MatrixXd tc = c.array().tanh().matrix();
    h = (z.bottomRows(H).array() * tc.array()).matrix();
    if (cache) {
      cache->x[t] = x;
      cache->gates[t] = z;
      cache->c[t] = c;
      cache->tanh_c[t] = std::move(tc);
      cache->h[t] = h;
    }
  }
  return h;
}

}  // namespace

ForwardResult forward(std::span<const std::span<const double>> windows, const NetParams& params,
                      ForwardCache* cache) {
  Eigen::MatrixXd h = run_lstm(windows, params.w, cache);
  ForwardResult r = head_forward(h, params.w);
  if (cache) {
    cache->features = r.features;
    cache->pred = r.pred;
    cache->fingerprint = fingerprint(params.w);
  }
  return r;
}

ForwardResult forward(std::span<const double> window, const NetParams& params) {
  const std::span<const double> one[1] = {window};
  return forward(std::span<const std::span<const double>>(one), params);
}

Eigen::MatrixXd lstm_final_hidden(std::span<const std::span<const double>> windows, const NetWeights& w) {
  return run_lstm(windows, w, nullptr);
}

namespace {

// Head gradients; returns d(loss)/d(final hidden).
Eigen::MatrixXd head_grads(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& feats, const Eigen::VectorXd& d_pred,
                           const Eigen::MatrixXd* d_features, const NetParams& params, NetWeights& g) {
  const auto& w = params.w;
  if (d_pred.size() != feats.cols()) throw DimensionError("loss gradient size does not match batch");
  Eigen::MatrixXd d_feat = w.w2 * d_pred.transpose();
  if (d_features) {
    if (d_features->rows() != feats.rows() || d_features->cols() != feats.cols())
      throw DimensionError("feature gradient shape mismatch");
    d_feat += *d_features;
  }
  if (!params.freeze.fc2) {
    g.w2 = feats * d_pred;
    g.b2 = d_pred.sum();
  }
  const Eigen::MatrixXd d_a1 = (d_feat.array() * (1.0 - feats.array().square())).matrix();
  if (!params.freeze.fc1) {
    g.w1.noalias() = d_a1 * hidden.transpose();
    g.b1 = d_a1.rowwise().sum();
  }
  return w.w1.transpose() * d_a1;
}

}  // namespace

NetWeights head_backward(const Eigen::MatrixXd& hidden, const ForwardResult& fwd, const Eigen::VectorXd& d_pred,
                         const Eigen::MatrixXd* d_features, const NetParams& params) {
  NetWeights g = NetWeights::zeros(params.w.hidden(), params.w.features());
  head_grads(hidden, fwd.features, d_pred, d_features, params, g);
  return g;
}

NetWeights backward(const ForwardCache& cache, const Eigen::VectorXd& d_pred, const Eigen::MatrixXd* d_features,
                    const NetParams& params) {
  if (cache.steps == 0 || cache.fingerprint != fingerprint(params.w))
    throw StaleCacheError("forward cache does not match the current weights");
  const auto& w = params.w;
  const int H = w.hidden();
  NetWeights g = NetWeights::zeros(H, w.features());
  Eigen::MatrixXd dh = head_grads(cache.h.back(), cache.features, d_pred, d_features, params, g);
  if (params.freeze.lstm) return g;

  const auto B = static_cast<Eigen::Index>(cache.batch);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dz(4 * H, B);
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(H, B);
  for (int t = cache.steps - 1; t >= 0; --t) {
    const auto& z = cache.gates[static_cast<std::size_t>(t)];
    const auto& tc = cache.tanh_c[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& c_prev = t > 0 ? cache.c[static_cast<std::size_t>(t - 1)] : zeros;
    const Eigen::MatrixXd& h_prev = t > 0 ? cache.h[static_cast<std::size_t>(t - 1)] : zeros;
    const auto i = z.topRows(H).array();
    const auto f = z.middleRows(H, H).array();
    const auto gg = z.middleRows(2 * H, H).array();
    const auto o = z.bottomRows(H).array();

    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc.array().square());
    dz.bottomRows(H) = (dh.array() * tc.array() * o * (1.0 - o)).matrix();
    dz.topRows(H) = (dc * gg * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dc * i * (1.0 - gg.square())).matrix();
    dc_next = (dc * f).matrix();

    g.wx.noalias() += dz * cache.x[static_cast<std::size_t>(t)].transpose();
    g.wh.noalias() += dz * h_prev.transpose();
    g.b += dz.rowwise().sum();
    dh.noalias() = w.wh.transpose() * dz;
  }
  return g;
}

AdamState AdamState::for_net(const NetWeights& w) {
  AdamState s;
  s.m = NetWeights::zeros(w.hidden(), w.features());
  s.v = NetWeights::zeros(w.hidden(), w.features());
  return s;
}

double adam_step(NetParams& params, NetWeights grads, AdamState& st, const AdamConfig& cfg) {
  const auto& fz = params.freeze;
  double sq = 0.0;
  for_each_block(grads, [&](Block b, const double* p, std::size_t n) {
    if (fz.frozen(b)) return;
    for (std::size_t k = 0; k < n; ++k) sq += p[k] * p[k];
  });
  const double norm = std::sqrt(sq);
  const double scale = (cfg.clip_norm > 0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));

  std::vector<double*> pw, pm, pv;
  std::vector<std::size_t> sizes;
  std::vector<Block> kinds;
  for_each_block(params.w, [&](Block b, double* p, std::size_t n) {
    pw.push_back(p);
    sizes.push_back(n);
    kinds.push_back(b);
  });
  for_each_block(st.m, [&](Block, double* p, std::size_t) { pm.push_back(p); });
  for_each_block(st.v, [&](Block, double* p, std::size_t) { pv.push_back(p); });
  std::size_t idx = 0;
  for_each_block(grads, [&](Block, double* g, std::size_t n) {
    const std::size_t k = idx++;
    if (fz.frozen(kinds[k])) return;
    for (std::size_t e = 0; e < n; ++e) {
      const double ge = g[e] * scale;
      pm[k][e] = cfg.beta1 * pm[k][e] + (1.0 - cfg.beta1) * ge;
      pv[k][e] = cfg.beta2 * pv[k][e] + (1.0 - cfg.beta2) * ge * ge;
      const double mh = pm[k][e] / bc1;
      const double vh = pv[k][e] / bc2;
      pw[k][e] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
    }
  });
  return norm;
}

void TrainConfig::validate() const {
  if (hidden <= 0 || features <= 0 || epochs == 0 || batch_size == 0)
    throw InvalidArgument("training sizes must be positive");
  if (!(adam.learning_rate > 0) || !(adam.eps > 0)) throw InvalidArgument("learning rate and eps must be positive");
  if (!(adam.beta1 > 0 && adam.beta1 < 1 && adam.beta2 > 0 && adam.beta2 < 1))
    throw InvalidArgument("Adam betas must lie in (0,1)");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) throw InvalidArgument("validation fraction in [0,1)");
}

namespace {

std::vector<std::span<const double>> gather(const WindowSet& data, std::span<const std::size_t> idx) {
  std::vector<std::span<const double>> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data.features(i));
  return out;
}

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

}  // namespace

NetWeights mse_gradient(const WindowSet& data, std::span<const std::size_t> idx, const NetParams& params,
                        double denominator, std::size_t workers, double* loss_sum) {
  const std::size_t chunks = chunk_count(idx.size());
  std::vector<NetWeights> parts(chunks);
  std::vector<double> losses(chunks, 0.0);
  parallel_for(chunks, workers, [&](std::size_t ci) {
    const auto sub = idx.subspan(ci * kChunk, std::min(kChunk, idx.size() - ci * kChunk));
    const auto wins = gather(data, sub);
    ForwardCache cache;
    const ForwardResult fr = forward(wins, params, &cache);
    Eigen::VectorXd d(static_cast<Eigen::Index>(sub.size()));
    for (std::size_t j = 0; j < sub.size(); ++j) {
      const double err = fr.pred(static_cast<Eigen::Index>(j)) - data.label(sub[j]);
      d(static_cast<Eigen::Index>(j)) = err / denominator;
      losses[ci] += err * err;
    }
    parts[ci] = backward(cache, d, nullptr, params);
  });
  NetWeights total = NetWeights::zeros(params.w.hidden(), params.w.features());
  double loss = 0.0;
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    total.wx += parts[ci].wx;
    total.wh += parts[ci].wh;
    total.b += parts[ci].b;
    total.w1 += parts[ci].w1;
    total.b1 += parts[ci].b1;
    total.w2 += parts[ci].w2;
    total.b2 += parts[ci].b2;
    loss += losses[ci];
  }
  if (loss_sum) *loss_sum = loss;
  return total;
}

std::vector<double> predict(const WindowSet& data, const NetParams& params, std::size_t workers) {
  const std::size_t n = data.size();
  std::vector<double> out(n);
  parallel_for(chunk_count(n), workers, [&](std::size_t ci) {
    const std::size_t begin = ci * kChunk, end = std::min(n, begin + kChunk);
    std::vector<std::span<const double>> wins;
    for (std::size_t i = begin; i < end; ++i) wins.push_back(data.features(i));
    const ForwardResult fr = forward(wins, params);
    for (std::size_t i = begin; i < end; ++i) out[i] = fr.pred(static_cast<Eigen::Index>(i - begin));
  });
  return out;
}

Eigen::MatrixXd hidden_states(const WindowSet& data, const NetWeights& w, std::size_t workers) {
  const std::size_t n = data.size();
  Eigen::MatrixXd out(w.hidden(), static_cast<Eigen::Index>(n));
  parallel_for(chunk_count(n), workers, [&](std::size_t ci) {
    const std::size_t begin = ci * kChunk, end = std::min(n, begin + kChunk);
    std::vector<std::span<const double>> wins;
    for (std::size_t i = begin; i < end; ++i) wins.push_back(data.features(i));
    out.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        lstm_final_hidden(wins, w);
  });
  return out;
}

namespace {

double mse_of(const WindowSet& data, std::span<const std::size_t> idx, const NetParams& params, std::size_t workers) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  WindowSet sub = data.subset(idx);
  const auto pred = predict(sub, params, workers);
  double s = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const double e = pred[j] - data.label(idx[j]);
    s += e * e;
  }
  return s / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_supervised(const WindowSet& data, const TrainConfig& cfg,
                             const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (data.size() == 0) throw InvalidArgument("empty training set");
  if (!data.labeled()) throw UnlabeledError("supervised training needs labeled windows");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint32_t> block_ids(data.blocks.size());
  std::iota(block_ids.begin(), block_ids.end(), 0u);
  std::shuffle(block_ids.begin(), block_ids.end(), rng);
  std::size_t n_val = 0;
  if (cfg.validation_fraction > 0 && block_ids.size() >= 2)
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.validation_fraction *
                                                                           static_cast<double>(block_ids.size()))));
  n_val = std::min(n_val, block_ids.size() - 1);
  const std::set<std::uint32_t> val_blocks(block_ids.begin(), block_ids.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < data.size(); ++i)
    (val_blocks.count(data.refs[i].block) ? val_idx : train_idx).push_back(i);

  double lsum = 0.0, lsq = 0.0;
  for (auto i : train_idx) lsum += data.label(i);
  const double lmean = lsum / static_cast<double>(train_idx.size());
  for (auto i : train_idx) lsq += (data.label(i) - lmean) * (data.label(i) - lmean);
  const double lstd = std::max(std::sqrt(lsq / static_cast<double>(train_idx.size())), kStdFloor);

  TrainResult res;
  for (auto b : val_blocks) res.validation_blocks.push_back(data.blocks[b].scenario_id);
  std::sort(res.validation_blocks.begin(), res.validation_blocks.end());
  res.params = init_net(cfg.hidden, cfg.features, cfg.seed, lmean, lstd);
  AdamState opt = AdamState::for_net(res.params.w);

  const std::size_t batches = (train_idx.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(batches * cfg.epochs);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const auto batch = std::span<const std::size_t>(train_idx).subspan(
          begin, std::min(cfg.batch_size, train_idx.size() - begin));
      double bl = 0.0;
      NetWeights g = mse_gradient(data, batch, res.params, static_cast<double>(batch.size()), cfg.workers, &bl);
      if (!std::isfinite(bl) || !g.all_finite()) throw DivergenceError(epoch, "non-finite training loss");
      loss += bl;
      AdamConfig ac = cfg.adam;
      const double progress = static_cast<double>(step++) / total_steps;
      ac.learning_rate *= cfg.lr_final_fraction +
                          (1.0 - cfg.lr_final_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      adam_step(res.params, std::move(g), opt, ac);
    }
    EpochStats es{epoch, loss / static_cast<double>(train_idx.size()), mse_of(data, val_idx, res.params, cfg.workers)};
    if (!std::isfinite(es.train_mse) || !res.params.w.all_finite())
      throw DivergenceError(epoch, "non-finite training loss");
    res.history.push_back(es);
    if (on_epoch) on_epoch(es);
  }
  return res;
}

}  // namespace coretemp
