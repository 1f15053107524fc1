#include "coretemp/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "coretemp/errors.hpp"

namespace coretemp {

void AdaptConfig::validate() const {
  if (!(lambda_mmd >= 0) || !(lambda_coral >= 0)) throw InvalidArgument("alignment weights must be non-negative");
  for (double b : bandwidths)
    if (!(b > 0)) throw InvalidArgument("kernel bandwidths must be positive");
  if (!(tau_reliable > 0)) throw InvalidArgument("tau_reliable must be positive");
  if (epochs == 0 || batch_size < 2) throw InvalidArgument("adaptation needs epochs >= 1 and batch_size >= 2");
  if (!(learning_rate > 0)) throw InvalidArgument("learning rate must be positive");
  if (!(labeled_fraction >= 0 && labeled_fraction <= 1)) throw InvalidArgument("labeled_fraction outside [0,1]");
}

PseudoLabelSet pseudo_labels(const InputSeries& target, const ThermalParams& source_thermal,
                             const ElectricalParams& source_electrical) {
  const std::size_t n = target.size();
  if (n == 0) throw InvalidArgument("empty target series");
  const auto heat = heat_from_current(target.current, target.dt, source_electrical);
  const PaDiscrete disc = discretize(derive_pa_coefficients(source_thermal), target.dt);
  PseudoLabelSet out;
  out.core.resize(n);
  out.surface.resize(n);
  out.reliable.assign(n, 1);
  out.provenance = source_thermal;
  ThermalStatePA state = ThermalStatePA::uniform(target.t_fluid.front());
  for (std::size_t k = 0; k < n; ++k) {
    const PaStepResult r = pa_step(state, heat[k], target.t_fluid[k], disc);
    state = r.next;
    out.core[k] = r.t_c;
    out.surface[k] = r.t_s;
  }
  return out;
}

std::vector<std::uint8_t> select_reliable(const PseudoLabelSet& pseudo, const std::vector<double>& measured_ts,
                                          double tau) {
  if (measured_ts.size() != pseudo.surface.size()) throw DimensionError("pseudo-label and measurement lengths differ");
  std::vector<std::uint8_t> mask(measured_ts.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = std::abs(pseudo.surface[i] - measured_ts[i]) <= tau;
  return mask;
}

namespace {

Eigen::MatrixXd sq_dists(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd na = a.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd nb = b.colwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a.transpose() * b;
  d.colwise() += na;
  d.rowwise() += nb;
  return d.cwiseMax(0.0);
}

double within_norm(Eigen::Index n, bool unbiased) {
  const double nn = static_cast<double>(n);
  return (unbiased && n > 1) ? nn * (nn - 1.0) : nn * nn;
}

// Raw (unclamped) estimate; gradients accumulated when dx/dy are non-null.
double mmd2_raw(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<double>& bws, MmdEstimator est,
                Eigen::MatrixXd* dx, Eigen::MatrixXd* dy) {
  if (x.cols() == 0 || y.cols() == 0) throw InvalidArgument("MMD needs nonempty sets");
  if (x.rows() != y.rows()) throw DimensionError("MMD feature dimensions differ");
  if (bws.empty()) throw InvalidArgument("MMD needs at least one bandwidth");
  const bool unbiased = est == MmdEstimator::Unbiased;
  const Eigen::Index n = x.cols(), m = y.cols();
  const Eigen::MatrixXd dxx = sq_dists(x, x), dyy = sq_dists(y, y), dxy = sq_dists(x, y);
  const double zx = within_norm(n, unbiased), zy = within_norm(m, unbiased);
  const double zxy = static_cast<double>(n) * static_cast<double>(m);
  if (dx) dx->setZero(x.rows(), n);
  if (dy) dy->setZero(y.rows(), m);
  double total = 0.0;
  for (double s : bws) {
    const double inv = 1.0 / (2.0 * s * s);
    Eigen::MatrixXd kxx = (-inv * dxx.array()).exp().matrix();
    Eigen::MatrixXd kyy = (-inv * dyy.array()).exp().matrix();
    const Eigen::MatrixXd kxy = (-inv * dxy.array()).exp().matrix();
    if (unbiased && n > 1) kxx.diagonal().setZero();
    if (unbiased && m > 1) kyy.diagonal().setZero();
    total += kxx.sum() / zx + kyy.sum() / zy - 2.0 * kxy.sum() / zxy;
    if (dx && dy) {
      const double s2 = s * s;
      // d k(u,v)/du = -k (u - v) / s^2
      const Eigen::MatrixXd gxx = kxx / s2, gyy = kyy / s2, gxy = kxy / s2;
      const Eigen::VectorXd rx = gxx.rowwise().sum(), ry = gyy.rowwise().sum();
      const Eigen::VectorXd rxy = gxy.rowwise().sum();
      const Eigen::RowVectorXd cxy = gxy.colwise().sum();
      *dx += (-2.0 / zx) * (x * rx.asDiagonal() - x * gxx);
      *dy += (-2.0 / zy) * (y * ry.asDiagonal() - y * gyy);
      *dx += (2.0 / zxy) * (x * rxy.asDiagonal() - y * gxy.transpose());
      *dy += (2.0 / zxy) * (y * cxy.transpose().asDiagonal() - x * gxy);
    }
  }
  const double scale = 1.0 / static_cast<double>(bws.size());
  if (dx) *dx *= scale;
  if (dy) *dy *= scale;
  return total * scale;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::MatrixXd c = x.colwise() - mu;
  Eigen::MatrixXd cov = c * c.transpose() / static_cast<double>(x.cols());
  cov.diagonal().array() += 1e-6;
  return cov;
}

}  // namespace

double mmd2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<double>& bandwidths,
            MmdEstimator est) {
  return std::max(0.0, mmd2_raw(x, y, bandwidths, est, nullptr, nullptr));
}

double mmd2_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<double>& bandwidths,
                 Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) {
  const double raw = mmd2_raw(x, y, bandwidths, MmdEstimator::Unbiased, &dx, &dy);
  if (raw < 0) {
    dx.setZero();
    dy.setZero();
    return 0.0;
  }
  return raw;
}

double coral(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() < 2 || y.cols() < 2) throw InvalidArgument("CORAL needs at least 2 samples per set");
  if (x.rows() != y.rows()) throw DimensionError("CORAL feature dimensions differ");
  const double f = static_cast<double>(x.rows());
  return (covariance(x) - covariance(y)).squaredNorm() / (4.0 * f * f);
}

double coral_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) {
  const double value = coral(x, y);
  const double f = static_cast<double>(x.rows());
  const Eigen::MatrixXd d = 2.0 * (covariance(x) - covariance(y)) / (4.0 * f * f);
  dx = (2.0 / static_cast<double>(x.cols())) * d * (x.colwise() - x.rowwise().mean());
  dy = (-2.0 / static_cast<double>(y.cols())) * d * (y.colwise() - y.rowwise().mean());
  return value;
}

std::vector<double> median_bandwidths(const Eigen::MatrixXd& pooled) {
  const Eigen::MatrixXd d2 = sq_dists(pooled, pooled);
  std::vector<double> dist;
  for (Eigen::Index j = 1; j < pooled.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) dist.push_back(std::sqrt(d2(i, j)));
  double med = 1.0;
  if (!dist.empty()) {
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    if (*mid > 0) med = *mid;
  }
  return {0.5 * med, med, 2.0 * med};
}

namespace {

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k < n) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

void add_into(NetWeights& acc, const NetWeights& g) {
  acc.w1 += g.w1;
  acc.b1 += g.b1;
  acc.w2 += g.w2;
  acc.b2 += g.b2;
}

// Shared loop for the pseudo-label and partial-label variants. `labels` and
// `usable` are per target window.
AdaptResult adapt_core(const Model& pretrained, const WindowSet& source, const WindowSet& target,
                       const std::vector<double>& labels, const std::vector<std::uint8_t>& usable,
                       const AdaptConfig& cfg) {
  cfg.validate();
  const std::string hash = pretrained.norm.hash();
  if (source.norm_hash != hash || target.norm_hash != hash)
    throw InvalidArgument("window sets must be normalized with the checkpoint's source-domain stats");
  if (source.w != pretrained.window || target.w != pretrained.window)
    throw DimensionError("window length differs from the checkpoint");
  if (source.size() < 2 || target.size() < 2) throw InvalidArgument("adaptation needs at least two windows per domain");

  std::vector<std::size_t> rel;
  for (std::size_t i = 0; i < usable.size(); ++i)
    if (usable[i]) rel.push_back(i);
  if (rel.empty()) throw AdaptationStarvedError("no reliable target windows to adapt on");

  AdaptResult res;
  res.model = pretrained;
  NetParams& net = res.model.net;
  net.freeze = {true, false, cfg.freeze_fc2};
  res.reliable_windows = rel.size();

  const Eigen::MatrixXd hs = hidden_states(source, net.w, cfg.workers);
  const Eigen::MatrixXd ht = hidden_states(target, net.w, cfg.workers);

  std::mt19937_64 rng(cfg.seed);
  const auto diag_s = sample_indices(source.size(), cfg.diagnostic_samples, rng);
  const auto diag_t = sample_indices(target.size(), cfg.diagnostic_samples, rng);
  const Eigen::MatrixXd hs_diag = take_cols(hs, diag_s), ht_diag = take_cols(ht, diag_t);
  const Eigen::MatrixXd h_rel = take_cols(ht, rel);

  res.bandwidths = cfg.bandwidths;
  if (res.bandwidths.empty()) {
    const auto fs = head_forward(hs_diag, net.w).features;
    const auto ft = head_forward(ht_diag, net.w).features;
    Eigen::MatrixXd pooled(fs.rows(), fs.cols() + ft.cols());
    pooled << fs, ft;
    res.bandwidths = median_bandwidths(pooled);
  }

  auto record = [&](std::size_t epoch) {
    const auto fr = head_forward(h_rel, net.w);
    double se = 0.0;
    for (std::size_t j = 0; j < rel.size(); ++j) {
      const double e = fr.pred(static_cast<Eigen::Index>(j)) - labels[rel[j]];
      se += e * e;
    }
    const auto fs = head_forward(hs_diag, net.w).features;
    const auto ft = head_forward(ht_diag, net.w).features;
    AdaptEpoch ep{epoch, se / static_cast<double>(rel.size()), mmd2(fs, ft, res.bandwidths), coral(fs, ft)};
    if (!std::isfinite(ep.mse) || !std::isfinite(ep.mmd2) || !std::isfinite(ep.coral))
      throw DivergenceError(epoch, "non-finite adaptation loss");
    res.history.push_back(ep);
  };
  record(0);

  AdamState opt = AdamState::for_net(net.w);
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  const bool align = cfg.lambda_mmd > 0 || cfg.lambda_coral > 0;
  const std::size_t b = cfg.batch_size;
  std::vector<std::size_t> perm(target.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> rel_order = rel;
  std::size_t rel_pos = rel_order.size();
  std::uniform_int_distribution<std::size_t> pick_src(0, source.size() - 1);
  const std::size_t steps = (target.size() + b - 1) / b;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t s = 0; s < steps; ++s) {
      NetWeights grads = NetWeights::zeros(net.w.hidden(), net.w.features());

      std::vector<std::size_t> rb;
      for (std::size_t j = 0; j < std::min(b, rel.size()); ++j) {
        if (rel_pos == rel_order.size()) {
          std::shuffle(rel_order.begin(), rel_order.end(), rng);
          rel_pos = 0;
        }
        rb.push_back(rel_order[rel_pos++]);
      }
      const Eigen::MatrixXd hr = take_cols(ht, rb);
      const ForwardResult fr = head_forward(hr, net.w);
      Eigen::VectorXd d_pred(static_cast<Eigen::Index>(rb.size()));
      for (std::size_t j = 0; j < rb.size(); ++j)
        d_pred(static_cast<Eigen::Index>(j)) =
            2.0 * (fr.pred(static_cast<Eigen::Index>(j)) - labels[rb[j]]) / static_cast<double>(rb.size());
      add_into(grads, head_backward(hr, fr, d_pred, nullptr, net));

      if (align) {
        const std::size_t begin = s * b;
        std::vector<std::size_t> tb(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                    perm.begin() + static_cast<std::ptrdiff_t>(std::min(target.size(), begin + b)));
        if (tb.size() < 2) tb.push_back(perm.front() == tb.front() ? perm[1] : perm.front());
        std::vector<std::size_t> sb(tb.size());
        for (auto& i : sb) i = pick_src(rng);
        const Eigen::MatrixXd hsb = take_cols(hs, sb), htb = take_cols(ht, tb);
        const ForwardResult fs = head_forward(hsb, net.w), ft = head_forward(htb, net.w);
        Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(fs.features.rows(), fs.features.cols());
        Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(ft.features.rows(), ft.features.cols());
        Eigen::MatrixXd gs, gt;
        if (cfg.lambda_mmd > 0) {
          mmd2_grad(fs.features, ft.features, res.bandwidths, gs, gt);
          ds += cfg.lambda_mmd * gs;
          dt += cfg.lambda_mmd * gt;
        }
        if (cfg.lambda_coral > 0) {
          coral_grad(fs.features, ft.features, gs, gt);
          ds += cfg.lambda_coral * gs;
          dt += cfg.lambda_coral * gt;
        }
        const Eigen::VectorXd zs = Eigen::VectorXd::Zero(fs.features.cols());
        const Eigen::VectorXd zt = Eigen::VectorXd::Zero(ft.features.cols());
        add_into(grads, head_backward(hsb, fs, zs, &ds, net));
        add_into(grads, head_backward(htb, ft, zt, &dt, net));
      }
      if (!grads.all_finite()) throw DivergenceError(epoch, "non-finite adaptation gradient");
      adam_step(net, std::move(grads), opt, ac);
    }
    record(epoch);
  }
  return res;
}

}  // namespace

AdaptResult domain_adapt(const Model& pretrained, const WindowSet& source, const WindowSet& target,
                         const PseudoLabelSet& pseudo, const AdaptConfig& cfg) {
  if (target.blocks.size() != 1) throw InvalidArgument("domain_adapt expects the windows of one target series");
  if (pseudo.core.size() != target.blocks.front().rows() || pseudo.reliable.size() != pseudo.core.size())
    throw DimensionError("pseudo-label length does not match the target series");
  std::vector<double> labels(target.size());
  std::vector<std::uint8_t> usable(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::size_t e = target.end_index(i);
    labels[i] = pseudo.core[e];
    usable[i] = pseudo.reliable[e];
  }
  return adapt_core(pretrained, source, target, labels, usable, cfg);
}

std::size_t labeled_cutoff(std::size_t n, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw InvalidArgument("labeled fraction must lie in (0, 1]");
  return std::min(n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
}

AdaptResult adapt_with_labels(const Model& pretrained, const WindowSet& source, const WindowSet& target,
                              double labeled_fraction, const AdaptConfig& cfg) {
  if (!(labeled_fraction > 0 && labeled_fraction <= 1))
    throw InvalidArgument("labeled fraction must lie in (0, 1]; use domain_adapt for unlabeled data");
  if (!target.labeled()) throw UnlabeledError("adapt_with_labels needs a labeled target series");
  std::vector<double> labels(target.size());
  std::vector<std::uint8_t> usable(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto& blk = target.blocks[target.refs[i].block];
    labels[i] = target.label(i);
    usable[i] = target.end_index(i) < labeled_cutoff(blk.rows(), labeled_fraction);
  }
  return adapt_core(pretrained, source, target, labels, usable, cfg);
}

PcaResult pca_project(const Eigen::MatrixXd& x, int k) {
  if (k <= 0) throw InvalidArgument("k must be positive");
  if (x.cols() < k) throw InvalidArgument("PCA needs at least k samples");
  PcaResult r;
  r.mean = x.rowwise().mean();
  const Eigen::MatrixXd c = x.colwise() - r.mean;
  const Eigen::MatrixXd cov = c * c.transpose() / static_cast<double>(x.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd ev = es.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
  const double total = std::max(ev.sum(), 0.0);
  const double tol = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  int keep = 0;
  while (keep < k && keep < ev.size() && ev(keep) > tol) ++keep;
  r.components = vecs.leftCols(keep);
  r.explained_ratio = total > 0 ? Eigen::VectorXd(ev.head(keep) / total) : Eigen::VectorXd::Zero(keep);
  r.projection = r.components.transpose() * c;
  return r;
}

}  // namespace coretemp
