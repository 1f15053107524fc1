#include "coretemp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "coretemp/config.hpp"
#include "coretemp/csv.hpp"
#include "coretemp/errors.hpp"
#include "coretemp/hash.hpp"

namespace coretemp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) { return format_double(v); }

class RunContext {
 public:
  RunContext(std::string command, const RunOptions& opts)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    if (opts.out_dir.empty()) throw InvalidArgument("an output directory is required");
    out_ = opts.out_dir;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory '" + out_.string() + "': " + ec.message());
    if (opts.config_path.empty()) {
      cfg_ = default_config();
    } else {
      input(opts.config_path);
      cfg_ = load_config(opts.config_path);
    }
    if (opts.workers) {
      if (*opts.workers == 0) throw InvalidArgument("workers must be at least 1");
      cfg_.workers = *opts.workers;
    }
    resolved_ = config_to_json(cfg_);
    write_text("config.json", resolved_);
  }

  Config& cfg() { return cfg_; }
  json& extra() { return extra_; }

  void input(const std::string& path) {
    if (!fs::is_regular_file(path)) throw IoError("input file '" + path + "' does not exist");
    inputs_.emplace_back(path, sha256_file(path));
  }

  std::string path(const std::string& rel) const {
    const fs::path p = out_ / rel;
    fs::create_directories(p.parent_path());
    return p.string();
  }

  void write_text(const std::string& rel, const std::string& text) const {
    std::ofstream out(path(rel), std::ios::binary);
    out << text;
    if (!out) throw IoError("write failed for '" + path(rel) + "'");
  }

  void finish() {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out_))
      if (e.is_regular_file()) {
        const std::string rel = fs::relative(e.path(), out_).generic_string();
        if (rel != "manifest.json") files.push_back(rel);
      }
    std::sort(files.begin(), files.end());
    json outs = json::array(), ins = json::array(), seeds = json::object();
    for (const auto& f : files) outs.push_back({{"path", f}, {"sha256", sha256_file((out_ / f).string())}});
    for (const auto& [p, h] : inputs_) ins.push_back({{"path", p}, {"sha256", h}});
    for (const auto& [k, v] : cfg_.seeds()) seeds[k] = v;
    json m = {{"command", command_},
              {"version", kVersion},
              {"config_sha256", sha256_hex(resolved_)},
              {"seeds", seeds},
              {"workers", cfg_.workers},
              {"inputs", ins},
              {"outputs", outs},
              {"runtime_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    if (!extra_.is_null()) m["details"] = extra_;
    write_text("manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  fs::path out_;
  Config cfg_;
  std::string resolved_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  json extra_;
};

void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw InvalidArgument("'" + command + "' needs --" + flag);
}

CurrentProfile load_profile(RunContext& ctx, const ProfileSpec& spec) {
  if (spec.kind == ProfileKind::ScaledReplay) ctx.input(spec.path);
  return gen_profile(spec);
}

SimOptions sim_options(const Config& cfg) {
  SimOptions o;
  o.backend = cfg.simulation.backend;
  o.fom_nodes = cfg.simulation.fom_nodes;
  if (cfg.simulation.noise) o.noise = cfg.simulation.noise_spec;
  return o;
}

SimSettings sim_settings(const Config& cfg) {
  SimSettings s;
  s.init.soc0 = cfg.simulation.soc0;
  s.fom_nodes = cfg.simulation.fom_nodes;
  s.noise = cfg.simulation.noise;
  s.noise_spec = cfg.simulation.noise_spec;
  s.max_abs_current = cfg.simulation.max_abs_current;
  s.workers = cfg.workers;
  return s;
}

std::map<std::string, ProfileSpec> profile_map(RunContext& ctx, const std::vector<ProfileSpec>& specs) {
  std::map<std::string, ProfileSpec> m;
  for (const auto& p : specs) {
    if (p.kind == ProfileKind::ScaledReplay) ctx.input(p.path);
    m[p.id] = p;
  }
  return m;
}

json norm_json(const NormStats& n) {
  return {{"mean", n.mean}, {"std", n.std}, {"label_mean", n.label_mean}, {"label_std", n.label_std},
          {"sha256", n.hash()}};
}

// Loads the output of `generate`: dataset.json plus one CSV per scenario.
Dataset load_dataset(RunContext& ctx, const std::string& dir) {
  const std::string meta_path = (fs::path(dir) / "dataset.json").string();
  ctx.input(meta_path);
  std::ifstream in(meta_path);
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(meta_path, 0, e.what());
  }
  Dataset ds;
  for (const auto& sc : meta.at("scenarios")) {
    const std::string id = sc.at("id").get<std::string>();
    const std::string csv = (fs::path(dir) / "series" / (id + ".csv")).string();
    ctx.input(csv);
    IngestResult r = ingest_csv(csv);
    if (!r.series.labeled()) throw InvalidArgument("dataset series '" + csv + "' has no core temperature column");
    ds.series.push_back({id, std::move(r.series)});
  }
  if (ds.series.empty()) throw InvalidArgument("dataset '" + dir + "' lists no scenarios");
  ds.norm = compute_norm_stats(ds.series);
  if (ds.norm.hash() != meta.at("norm").at("sha256").get<std::string>())
    throw InvalidArgument("dataset '" + dir + "': series do not reproduce the recorded normalization stats");
  return ds;
}

WindowSet windows_of(const Dataset& ds, std::size_t w, std::size_t stride, const NormStats& norm) {
  WindowSet all;
  for (const auto& s : ds.series) all.append(windowize(s.series, w, stride, norm, s.scenario_id));
  return all;
}

Dataset dataset_for(RunContext& ctx, const RunOptions& opts) {
  const Config& cfg = ctx.cfg();
  if (!opts.data_dir.empty()) return load_dataset(ctx, opts.data_dir);
  return build_dataset(dataset_scenarios(cfg), profile_map(ctx, cfg.dataset.profiles), cfg.cell, sim_settings(cfg));
}

Model model_for(RunContext& ctx, const RunOptions& opts, const std::string& command) {
  require(opts.checkpoint, "checkpoint", command);
  ctx.input(opts.checkpoint);
  return load_checkpoint(opts.checkpoint);
}

TimeSeries target_for(RunContext& ctx, const RunOptions& opts, const std::string& command) {
  require(opts.target_csv, "target", command);
  ctx.input(opts.target_csv);
  IngestResult r = ingest_csv(opts.target_csv);
  if (!r.warnings.empty()) ctx.extra()["warnings"] = r.warnings;
  const auto& sm = ctx.cfg().smoothing;
  if (sm.enabled) {
    auto& in = r.series.inputs;
    in.current = gaussian_smooth(in.current, sm.window, sm.sigma);
    in.voltage = gaussian_smooth(in.voltage, sm.window, sm.sigma);
    in.t_surf = gaussian_smooth(in.t_surf, sm.window, sm.sigma);
  }
  return r.series;
}

void write_series(RunContext& ctx, const std::string& rel, const TimeSeries& s) { write_series_csv(s, ctx.path(rel)); }

// ---------------------------------------------------------------- commands

void cmd_simulate(RunContext& ctx) {
  const Config& cfg = ctx.cfg();
  const CurrentProfile profile = load_profile(ctx, cfg.profile);
  profile.validate(cfg.simulation.max_abs_current);
  const InitialCondition init{cfg.simulation.soc0, cfg.simulation.coolant_temp};
  try {
    write_series(ctx, "series.csv",
                 simulate(profile, cfg.cell.electrical, cfg.cell.thermal, init, cfg.simulation.coolant_temp,
                          sim_options(cfg)));
  } catch (const SimulationError& e) {
    write_series(ctx, "series_partial.csv", e.partial);
    throw Error(e.kind(), "profile '" + cfg.profile.id + "': " + e.what());
  }
}

void cmd_generate(RunContext& ctx) {
  const Config& cfg = ctx.cfg();
  const auto scenarios = dataset_scenarios(cfg);
  const Dataset ds = build_dataset(scenarios, profile_map(ctx, cfg.dataset.profiles), cfg.cell, sim_settings(cfg));
  json list = json::array();
  std::vector<ScenarioSpec> sorted = scenarios;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& sc = sorted[i];
    json eps = json::object();
    for (Param p : kAllParams) eps[to_string(p)] = sc.eps[p];
    list.push_back({{"id", sc.id},
                    {"profile_id", sc.profile_id},
                    {"seed", sc.seed},
                    {"coolant_temp", sc.coolant_temp},
                    {"eps", eps},
                    {"backend", to_string(sc.backend)}});
    write_series(ctx, "series/" + sc.id + ".csv", ds.series[i].series);
  }
  json meta = {{"scenarios", list},
               {"norm", norm_json(ds.norm)},
               {"window", cfg.dataset.window},
               {"stride", cfg.dataset.stride}};
  ctx.write_text("dataset.json", meta.dump(2) + "\n");
}

void cmd_pretrain(RunContext& ctx, const RunOptions& opts) {
  const Config& cfg = ctx.cfg();
  const Dataset ds = dataset_for(ctx, opts);
  const WindowSet windows = windows_of(ds, cfg.dataset.window, cfg.dataset.stride, ds.norm);
  TrainConfig tc = cfg.train;
  tc.workers = cfg.workers;
  const TrainResult tr = train_supervised(windows, tc);
  Model m{tr.params, ds.norm, cfg.dataset.window};
  save_checkpoint(m, ctx.path("model.ckpt"));
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : tr.history)
    rows.push_back({std::to_string(e.epoch), fmt(std::sqrt(e.train_mse)), fmt(std::sqrt(e.val_mse))});
  write_table_csv(ctx.path("train_history.csv"), {"epoch", "train_rmse_c", "val_rmse_c"}, rows);
  json summary = {{"windows", windows.size()},
                  {"validation_blocks", tr.validation_blocks},
                  {"norm", norm_json(ds.norm)},
                  {"checkpoint_sha256", sha256_file(ctx.path("model.ckpt"))}};
  ctx.write_text("pretrain.json", summary.dump(2) + "\n");
}

Eigen::MatrixXd features_of(const WindowSet& ws, const NetWeights& w, std::size_t workers) {
  return head_forward(hidden_states(ws, w, workers), w).features;
}

void write_pca(RunContext& ctx, const WindowSet& src, const WindowSet& tgt, const Model& before, const Model& after) {
  std::vector<std::vector<std::string>> rows;
  json ratios = json::object();
  const std::size_t workers = ctx.cfg().workers;
  for (const auto& [stage, model] : {std::pair<std::string, const Model*>{"before", &before}, {"after", &after}}) {
    const Eigen::MatrixXd fs = features_of(src, model->net.w, workers);
    const Eigen::MatrixXd ft = features_of(tgt, model->net.w, workers);
    Eigen::MatrixXd pooled(fs.rows(), fs.cols() + ft.cols());
    pooled << fs, ft;
    if (pooled.cols() < 3) continue;
    const PcaResult pca = pca_project(pooled, 3);
    ratios[stage] = std::vector<double>(pca.explained_ratio.data(), pca.explained_ratio.data() + pca.explained_ratio.size());
    for (Eigen::Index j = 0; j < pooled.cols(); ++j) {
      const bool is_src = j < fs.cols();
      std::vector<std::string> row{stage, is_src ? "source" : "target",
                                   std::to_string(is_src ? j : j - fs.cols())};
      for (Eigen::Index c = 0; c < 3; ++c) row.push_back(c < pca.projection.rows() ? fmt(pca.projection(c, j)) : "");
      rows.push_back(row);
    }
  }
  write_table_csv(ctx.path("pca.csv"), {"stage", "domain", "window", "pc1", "pc2", "pc3"}, rows);
  ctx.write_text("pca_explained.json", ratios.dump(2) + "\n");
}

void cmd_adapt(RunContext& ctx, const RunOptions& opts) {
  const Config& cfg = ctx.cfg();
  const Model pre = model_for(ctx, opts, "adapt");
  const TimeSeries target = target_for(ctx, opts, "adapt");
  AdaptConfig ac = cfg.adapt.config;
  ac.workers = cfg.workers;

  WindowSet source;
  if (cfg.adapt.alignment == AlignmentSource::Pretraining) {
    require(opts.data_dir, "data", "adapt (alignment = pretraining)");
    const Dataset ds = load_dataset(ctx, opts.data_dir);
    WindowSet all = windows_of(ds, pre.window, cfg.dataset.stride, pre.norm);
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > cfg.study.source_alignment_windows) {
      std::mt19937_64 rng(ac.seed ^ 0x5eedULL);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(cfg.study.source_alignment_windows);
      std::sort(idx.begin(), idx.end());
    }
    source = all.subset(idx);
  } else {
    // the source simulator driven by the target's own load
    const CurrentProfile load{target.inputs.dt, target.inputs.current};
    const InitialCondition init{cfg.simulation.soc0, target.inputs.t_fluid.front()};
    SimOptions po;
    TimeSeries twin;
    try {
      twin = simulate(load, cfg.cell.electrical, cfg.cell.thermal, init, target.inputs.t_fluid.front(), po);
    } catch (const SimulationError& e) {
      throw Error(e.kind(), "source twin of '" + opts.target_csv + "': " + e.what());
    }
    source = windowize(twin.inputs, pre.window, cfg.adapt.stride, pre.norm, "twin");
  }

  const WindowSet tw = windowize(target.inputs, pre.window, cfg.adapt.stride, pre.norm, "target");
  PseudoLabelSet pseudo = pseudo_labels(target.inputs, cfg.cell.thermal, cfg.cell.electrical);
  pseudo.reliable = select_reliable(pseudo, target.inputs.t_surf, ac.tau_reliable);

  AdaptResult res;
  if (ac.labeled_fraction > 0) {
    if (!target.labeled()) throw UnlabeledError("'" + opts.target_csv + "' has no core_temp_c column; labeled_fraction needs one");
    const WindowSet lw = windowize(target, pre.window, cfg.adapt.stride, pre.norm, "target");
    res = adapt_with_labels(pre, source, lw, ac.labeled_fraction, ac);
  } else {
    res = domain_adapt(pre, source, tw, pseudo, ac);
  }
  save_checkpoint(res.model, ctx.path("model.ckpt"));

  std::vector<std::vector<std::string>> rows;
  for (const auto& h : res.history)
    rows.push_back({std::to_string(h.epoch), fmt(h.mse), fmt(h.mmd2), fmt(h.coral)});
  write_table_csv(ctx.path("adapt_history.csv"), {"epoch", "mse", "mmd2", "coral"}, rows);

  rows.clear();
  const auto& in = target.inputs;
  for (std::size_t k = 0; k < in.size(); ++k)
    rows.push_back({fmt(in.t[k]), fmt(pseudo.core[k]), fmt(pseudo.surface[k]), fmt(in.t_surf[k]),
                    std::to_string(int(pseudo.reliable[k]))});
  write_table_csv(ctx.path("pseudo_labels.csv"),
                  {"time_s", "pseudo_core_c", "pseudo_surf_c", "measured_surf_c", "reliable"}, rows);
  write_pca(ctx, source, tw, pre, res.model);

  const double frac = static_cast<double>(std::count(pseudo.reliable.begin(), pseudo.reliable.end(), 1)) /
                      static_cast<double>(pseudo.reliable.size());
  json summary = {{"bandwidths", res.bandwidths},
                  {"reliable_windows", res.reliable_windows},
                  {"reliable_step_fraction", frac},
                  {"mode", ac.labeled_fraction > 0 ? "labeled_prefix" : "pseudo_labels"},
                  {"checkpoint_sha256", sha256_file(ctx.path("model.ckpt"))}};
  ctx.write_text("adapt.json", summary.dump(2) + "\n");
}

void cmd_evaluate(RunContext& ctx, const RunOptions& opts) {
  const Config& cfg = ctx.cfg();
  const Model m = model_for(ctx, opts, "evaluate");
  const TimeSeries target = target_for(ctx, opts, "evaluate");
  if (!target.labeled())
    throw UnlabeledError("'" + opts.target_csv + "' has no core_temp_c column; evaluation needs ground truth");
  std::size_t from = 0;
  if (opts.from_fraction) from = labeled_cutoff(target.size(), *opts.from_fraction);
  const Evaluation ev = evaluate_model(m, target, cfg.study.eval_stride, from, cfg.workers);
  const PseudoLabelSet pa = pseudo_labels(target.inputs, cfg.cell.thermal, cfg.cell.electrical);
  std::vector<double> pa_at(ev.steps.size());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < ev.steps.size(); ++i) {
    const std::size_t k = ev.steps[i];
    pa_at[i] = pa.core[k];
    rows.push_back({std::to_string(k), fmt(target.inputs.t[k]), fmt(ev.pred[i]), fmt(ev.truth[i]), fmt(pa_at[i])});
  }
  write_table_csv(ctx.path("predictions.csv"), {"step", "time_s", "pred_core_c", "true_core_c", "pa_core_c"}, rows);
  json metrics = {{"windows", ev.steps.size()},
                  {"first_step", ev.steps.front()},
                  {"rmse_c", ev.rmse},
                  {"mae_c", mae(ev.pred, ev.truth)},
                  {"max_abs_err_c", max_abs_err(ev.pred, ev.truth)},
                  {"pa_rmse_c", rmse(pa_at, ev.truth)}};
  ctx.write_text("metrics.json", metrics.dump(2) + "\n");
}

void cmd_study_perturb(RunContext& ctx, const RunOptions& opts) {
  const Config& cfg = ctx.cfg();
  const Model m = model_for(ctx, opts, "study-perturb");
  StudyConfig sc;
  sc.nominal = cfg.cell;
  sc.coolant_temp = cfg.simulation.coolant_temp;
  sc.fom_nodes = cfg.simulation.fom_nodes;
  sc.noise = cfg.simulation.noise;
  sc.noise_spec = cfg.simulation.noise_spec;
  sc.eval_stride = cfg.study.eval_stride;
  sc.adapt_stride = cfg.adapt.stride;
  sc.source_alignment_windows = cfg.study.source_alignment_windows;
  sc.adapt = cfg.adapt.config;
  sc.alignment = cfg.adapt.alignment;
  sc.run_adaptation = cfg.study.run_adaptation;
  sc.workers = cfg.workers;
  for (const auto& p : cfg.study.profiles)
    if (p.kind == ProfileKind::ScaledReplay) ctx.input(p.path);

  WindowSet source;
  if (sc.run_adaptation && sc.alignment == AlignmentSource::Pretraining) {
    require(opts.data_dir, "data", "study-perturb (alignment = pretraining)");
    source = windows_of(load_dataset(ctx, opts.data_dir), m.window, cfg.dataset.stride, m.norm);
  }
  const StudyReport rep = perturbation_study(cfg.study.grid, cfg.study.profiles, m, source, sc);

  std::vector<std::vector<std::string>> rows;
  json timing = json::array();
  std::size_t failed = 0;
  for (const auto& r : rep.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    rows.push_back({to_string(r.param), fmt(r.eps), r.profile_id, fmt(r.rmse_pa), fmt(r.rmse_s), fmt(r.rmse_da),
                    fmt(r.reliable_fraction), err});
    timing.push_back({{"param", to_string(r.param)}, {"eps", r.eps}, {"profile", r.profile_id}, {"runtime_s", r.runtime_s}});
    failed += !r.error.empty();
  }
  write_table_csv(ctx.path("study_report.csv"),
                  {"param", "eps", "profile", "rmse_pa_c", "rmse_lstm_s_c", "rmse_lstm_da_c", "reliable_fraction", "error"},
                  rows);
  rows.clear();
  for (const auto& q : rep.quartiles)
    rows.push_back({to_string(q.param), fmt(q.eps), q.method, std::to_string(q.n), fmt(q.min), fmt(q.q1), fmt(q.median),
                    fmt(q.q3), fmt(q.max)});
  write_table_csv(ctx.path("study_quartiles.csv"), {"param", "eps", "method", "n", "min", "q1", "median", "q3", "max"},
                  rows);
  json summary = {{"rows", rep.rows.size()}, {"failed_rows", failed}, {"checkpoint_norm_sha256", m.norm.hash()}};
  ctx.write_text("study_summary.json", summary.dump(2) + "\n");
  // wall-clock numbers vary run to run, so they live in the manifest only
  ctx.extra()["cell_runtimes"] = timing;
}

void cmd_study_sensitivity(RunContext& ctx) {
  const Config& cfg = ctx.cfg();
  const CurrentProfile profile = load_profile(ctx, cfg.sensitivity.profile);
  SensitivityOptions so;
  so.coolant_temp = cfg.simulation.coolant_temp;
  so.sim = sim_options(cfg);
  so.soc0 = cfg.simulation.soc0;
  std::vector<std::vector<std::string>> rows;
  for (Param p : cfg.sensitivity.params)
    for (double e : cfg.sensitivity.eps) {
      const Sensitivity s = sensitivity_study(p, e, profile, cfg.cell, so);
      rows.push_back({to_string(p), fmt(e), fmt(s.d_voltage), fmt(s.d_surface), fmt(s.d_core),
                      s.d_core > 0 ? fmt(s.d_surface / s.d_core) : ""});
    }
  write_table_csv(ctx.path("sensitivity.csv"),
                  {"param", "eps", "d_voltage_v", "d_surf_c", "d_core_c", "surf_over_core"}, rows);
}

// Minimal text CSV reader for the string-valued report files.
std::vector<std::vector<std::string>> read_text_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

void cmd_export_plots(RunContext& ctx, const RunOptions& opts) {
  require(opts.run_dir, "run", "export-plots");
  const fs::path run = opts.run_dir;
  std::size_t exported = 0;
  auto melt = [&](const std::string& file, const std::string& out, std::size_t id_cols,
                  const std::vector<std::string>& id_names) {
    const fs::path src = run / file;
    if (!fs::is_regular_file(src)) return;
    ctx.input(src.string());
    const auto tab = read_text_csv(src.string());
    if (tab.empty()) return;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 1; r < tab.size(); ++r)
      for (std::size_t c = id_cols; c < tab[r].size() && c < tab[0].size(); ++c) {
        if (tab[r][c].empty()) continue;
        std::vector<std::string> row(tab[r].begin(), tab[r].begin() + static_cast<std::ptrdiff_t>(id_cols));
        row.push_back(tab[0][c]);
        row.push_back(tab[r][c]);
        rows.push_back(row);
      }
    std::vector<std::string> header = id_names;
    header.push_back("variable");
    header.push_back("value");
    write_table_csv(ctx.path(out), header, rows);
    ++exported;
  };
  melt("series.csv", "plot_series.csv", 1, {"time_s"});
  melt("adapt_history.csv", "plot_adapt_history.csv", 1, {"epoch"});
  melt("pseudo_labels.csv", "plot_pseudo_labels.csv", 1, {"time_s"});
  melt("pca.csv", "plot_pca.csv", 3, {"stage", "domain", "window"});
  melt("predictions.csv", "plot_predictions.csv", 2, {"step", "time_s"});
  melt("train_history.csv", "plot_train_history.csv", 1, {"epoch"});
  melt("sensitivity.csv", "plot_sensitivity.csv", 2, {"param", "eps"});
  melt("study_quartiles.csv", "plot_study_quartiles.csv", 4, {"param", "eps", "method", "n"});
  if (fs::is_regular_file(run / "study_report.csv")) {
    // one row per (cell, method) for box plots
    const std::string src = (run / "study_report.csv").string();
    ctx.input(src);
    const auto tab = read_text_csv(src);
    std::vector<std::vector<std::string>> rows;
    const std::vector<std::pair<std::size_t, std::string>> methods{{3, "pa"}, {4, "lstm_s"}, {5, "lstm_da"}};
    for (std::size_t r = 1; r < tab.size(); ++r)
      for (const auto& [col, name] : methods)
        if (col < tab[r].size() && tab[r][col] != "nan") rows.push_back({tab[r][0], tab[r][1], tab[r][2], name, tab[r][col]});
    write_table_csv(ctx.path("plot_study.csv"), {"param", "eps", "profile", "method", "rmse_c"}, rows);
    ++exported;
  }
  if (exported == 0) throw InvalidArgument("run directory '" + opts.run_dir + "' holds no exportable outputs");
}

}  // namespace

void run_command(const std::string& command, const RunOptions& opts) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end())
    throw InvalidArgument("unknown command '" + command + "'");
  RunContext ctx(command, opts);
  if (command == "simulate") cmd_simulate(ctx);
  else if (command == "generate") cmd_generate(ctx);
  else if (command == "pretrain") cmd_pretrain(ctx, opts);
  else if (command == "adapt") cmd_adapt(ctx, opts);
  else if (command == "evaluate") cmd_evaluate(ctx, opts);
  else if (command == "study-perturb") cmd_study_perturb(ctx, opts);
  else if (command == "study-sensitivity") cmd_study_sensitivity(ctx);
  else cmd_export_plots(ctx, opts);
  ctx.finish();
}

}  // namespace coretemp
