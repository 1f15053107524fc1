#include "coretemp/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "coretemp/errors.hpp"
#include "coretemp/parallel.hpp"

namespace coretemp {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("series lengths differ");
  if (a.empty()) throw InvalidArgument("metrics need at least one sample");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double max_abs_err(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) m = std::max(m, std::abs(pred[i] - truth[i]));
  return m;
}

std::vector<double> gaussian_smooth(std::span<const double> x, std::size_t window, double sigma) {
  if (window == 0 || window % 2 == 0) throw InvalidArgument("smoothing window must be odd");
  if (!(sigma > 0)) throw InvalidArgument("sigma must be positive");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> kernel(window);
  for (std::ptrdiff_t j = -half; j <= half; ++j)
    kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * static_cast<double>(j * j) / (sigma * sigma));
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (std::ptrdiff_t j = std::max(-half, -i); j <= std::min(half, n - 1 - i); ++j) {
      const double k = kernel[static_cast<std::size_t>(j + half)];
      num += k * x[static_cast<std::size_t>(i + j)];
      den += k;
    }
    out[static_cast<std::size_t>(i)] = num / den;
  }
  return out;
}

Evaluation evaluate_model(const Model& model, const TimeSeries& series, std::size_t stride, std::size_t from_step,
                          std::size_t workers) {
  const auto& truth = series.core();
  const WindowSet all = windowize(series, model.window, stride, model.norm);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all.end_index(i) >= from_step) keep.push_back(i);
  if (keep.empty()) throw InvalidArgument("no evaluation windows end at or after the requested step");
  const WindowSet ws = keep.size() == all.size() ? all : all.subset(keep);
  Evaluation ev;
  ev.pred = predict(ws, model.net, workers);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    ev.steps.push_back(ws.end_index(i));
    ev.truth.push_back(truth[ws.end_index(i)]);
  }
  ev.rmse = rmse(ev.pred, ev.truth);
  return ev;
}

std::vector<StudyAxis> default_study_grid() {
  const std::vector<double> thermal{-0.45, -0.30, -0.15, 0.0, 0.15, 0.30, 0.45};
  const std::vector<double> resist{-0.45, -0.30, -0.15, 0.0, 0.15, 0.30, 0.50};
  return {{Param::H, thermal}, {Param::CP, thermal}, {Param::KT, thermal}, {Param::R0, resist}, {Param::R1, resist}};
}

namespace {

struct Cell {
  Param param;
  double eps;
  const ProfileSpec* profile;
};

StudyRow blank_row(const Cell& cell) {
  StudyRow r;
  r.param = cell.param;
  r.eps = cell.eps;
  r.profile_id = cell.profile->id;
  return r;
}

double at_steps_rmse(const std::vector<double>& pred, const Evaluation& ev) {
  std::vector<double> p(ev.steps.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = pred[ev.steps[i]];
  return rmse(p, ev.truth);
}

StudyRow run_cell(const Cell& cell, const CurrentProfile& profile, const Model& pretrained, const WindowSet& source,
                  const StudyConfig& cfg) {
  StudyRow row = blank_row(cell);
  row.rmse_da = std::numeric_limits<double>::quiet_NaN();
  Perturbation p;
  p[cell.param] = cell.eps;
  const CellParams real = apply_perturbation(cfg.nominal, p);
  SimOptions opt;
  opt.backend = Backend::FOM;
  opt.fom_nodes = cfg.fom_nodes;
  if (cfg.noise) {
    NoiseSpec ns = cfg.noise_spec;
    ns.seed = cell.profile->seed;
    opt.noise = ns;
  }
  InitialCondition init;
  init.t0 = cfg.coolant_temp;
  const TimeSeries target = simulate(profile, real.electrical, real.thermal, init, cfg.coolant_temp, opt);

  const Evaluation s = evaluate_model(pretrained, target, cfg.eval_stride);
  row.rmse_s = s.rmse;

  PseudoLabelSet pseudo = pseudo_labels(target.inputs, cfg.nominal.thermal, cfg.nominal.electrical);
  row.rmse_pa = at_steps_rmse(pseudo.core, s);
  pseudo.reliable = select_reliable(pseudo, target.inputs.t_surf, cfg.adapt.tau_reliable);
  row.reliable_fraction = static_cast<double>(std::count(pseudo.reliable.begin(), pseudo.reliable.end(), 1)) /
                          static_cast<double>(pseudo.reliable.size());

  if (cfg.run_adaptation) {
    const WindowSet tw = windowize(target.inputs, pretrained.window, cfg.adapt_stride, pretrained.norm);
    WindowSet twin;
    if (cfg.alignment == AlignmentSource::Twin) {
      SimOptions po;
      const TimeSeries syn = simulate(profile, cfg.nominal.electrical, cfg.nominal.thermal, init, cfg.coolant_temp, po);
      twin = windowize(syn.inputs, pretrained.window, cfg.adapt_stride, pretrained.norm, "twin");
    }
    AdaptConfig ac = cfg.adapt;
    ac.workers = 1;
    const AdaptResult ad =
        domain_adapt(pretrained, cfg.alignment == AlignmentSource::Twin ? twin : source, tw, pseudo, ac);
    row.rmse_da = evaluate_model(ad.model, target, cfg.eval_stride).rmse;
  }
  return row;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<QuartileRow> study_quartiles(const std::vector<StudyRow>& rows) {
  std::vector<QuartileRow> out;
  std::vector<std::pair<Param, double>> keys;
  for (const auto& r : rows)
    if (std::find(keys.begin(), keys.end(), std::make_pair(r.param, r.eps)) == keys.end())
      keys.emplace_back(r.param, r.eps);
  for (const auto& [param, eps] : keys) {
    for (const char* method : {"pa", "lstm_s", "lstm_da"}) {
      std::vector<double> v;
      for (const auto& r : rows) {
        if (r.param != param || r.eps != eps || !r.error.empty()) continue;
        const std::string m = method;
        const double x = m == "pa" ? r.rmse_pa : m == "lstm_s" ? r.rmse_s : r.rmse_da;
        if (std::isfinite(x)) v.push_back(x);
      }
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      out.push_back({param, eps, method, v.size(), v.front(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
                     v.back()});
    }
  }
  return out;
}

StudyReport perturbation_study(const std::vector<StudyAxis>& grid, const std::vector<ProfileSpec>& profiles,
                               const Model& pretrained, const WindowSet& source, const StudyConfig& cfg) {
  if (grid.empty() || profiles.empty()) throw InvalidArgument("study grid and profile list must be nonempty");
  if (cfg.eval_stride == 0 || cfg.adapt_stride == 0) throw InvalidArgument("strides must be positive");
  if (cfg.run_adaptation) cfg.adapt.validate();

  std::vector<CurrentProfile> loads;
  for (const auto& ps : profiles) loads.push_back(gen_profile(ps));

  // Alignment only needs a sample of the source domain; a fixed subset keeps
  // the per-cell cost independent of the pretraining set size.
  WindowSet src = source;
  if (cfg.run_adaptation && cfg.alignment == AlignmentSource::Pretraining &&
      source.size() > cfg.source_alignment_windows && cfg.source_alignment_windows > 0) {
    std::vector<std::size_t> idx(source.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(cfg.adapt.seed ^ 0x5eedULL);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.source_alignment_windows);
    std::sort(idx.begin(), idx.end());
    src = source.subset(idx);
  }

  std::vector<Cell> cells;
  std::vector<std::size_t> profile_of;
  for (const auto& axis : grid)
    for (double e : axis.eps)
      for (std::size_t k = 0; k < profiles.size(); ++k) {
        cells.push_back({axis.param, e, &profiles[k]});
        profile_of.push_back(k);
      }

  StudyReport rep;
  rep.rows.resize(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    StudyRow row = blank_row(cells[i]);
    try {
      row = run_cell(cells[i], loads[profile_of[i]], pretrained, src, cfg);
    } catch (const std::exception& e) {
      row = blank_row(cells[i]);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.rmse_pa = row.rmse_s = row.rmse_da = row.reliable_fraction = nan;
      row.error = e.what();
    }
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.rows[i] = std::move(row);
  });
  rep.quartiles = study_quartiles(rep.rows);
  return rep;
}

Sensitivity sensitivity_study(Param param, double eps, const CurrentProfile& profile, const CellParams& nominal,
                              const SensitivityOptions& opts) {
  Perturbation p;
  p[param] = eps;
  const CellParams pert = apply_perturbation(nominal, p);
  const InitialCondition init{opts.soc0, opts.coolant_temp};
  const TimeSeries a = simulate(profile, nominal.electrical, nominal.thermal, init, opts.coolant_temp, opts.sim);
  const TimeSeries b = simulate(profile, pert.electrical, pert.thermal, init, opts.coolant_temp, opts.sim);
  Sensitivity s;
  s.d_voltage = max_abs_err(a.inputs.voltage, b.inputs.voltage);
  s.d_surface = max_abs_err(a.inputs.t_surf, b.inputs.t_surf);
  s.d_core = max_abs_err(a.core(), b.core());
  return s;
}

}  // namespace coretemp
