#include "coretemp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "coretemp/csv.hpp"
#include "coretemp/hash.hpp"
#include "coretemp/parallel.hpp"

namespace coretemp {

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "pulse_train") return ProfileKind::PulseTrain;
  if (s == "random_walk") return ProfileKind::RandomWalk;
  if (s == "scaled_replay") return ProfileKind::ScaledReplay;
  if (s == "rest") return ProfileKind::Rest;
  throw InvalidArgument("unknown profile kind '" + s + "'");
}

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::PulseTrain: return "pulse_train";
    case ProfileKind::RandomWalk: return "random_walk";
    case ProfileKind::ScaledReplay: return "scaled_replay";
    case ProfileKind::Rest: return "rest";
  }
  return "?";
}

namespace {

CurrentProfile pulse_train(const ProfileSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> seg_len(1, 60);
  const double max = spec.max_current;
  const double drift = spec.discharge_bias * max;
  const double q_scale = 30.0 * max;  // charge of one typical segment

  CurrentProfile p;
  p.samples.reserve(spec.duration);
  double q = 0.0;
  while (p.samples.size() < spec.duration) {
    const int len = seg_len(rng);
    const double mag = max * unit(rng);
    const double lag = drift * static_cast<double>(p.samples.size()) - q;
    const double p_discharge = 0.5 + 0.5 * std::tanh(lag / q_scale);
    const double amp = unit(rng) < p_discharge ? mag : -mag;
    for (int i = 0; i < len && p.samples.size() < spec.duration; ++i) {
      p.samples.push_back(amp);
      q += amp;
    }
  }
  return p;
}

CurrentProfile random_walk(const ProfileSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double max = spec.max_current;
  const double phi = 0.98;
  const double sigma = 0.08 * max;
  const double drift = spec.discharge_bias * max;
  const double reversion_s = 300.0;

  CurrentProfile p;
  p.samples.reserve(spec.duration);
  double i_prev = drift, q = 0.0;
  for (std::size_t k = 0; k < spec.duration; ++k) {
    const double lag = drift * static_cast<double>(k) - q;
    const double target = std::clamp(drift + lag / reversion_s, -max, max);
    const double next = std::clamp(phi * i_prev + (1.0 - phi) * target + sigma * normal(rng), -max, max);
    p.samples.push_back(next);
    q += next;
    i_prev = next;
  }
  return p;
}

CurrentProfile scaled_replay(const ProfileSpec& spec) {
  if (spec.path.empty()) throw InvalidArgument("scaled_replay profile '" + spec.id + "' needs a path");
  const CsvTable tab = read_csv(spec.path);
  const auto& cur = tab.column(kColCurrent, spec.path);
  if (cur.empty()) throw InvalidArgument("replay file '" + spec.path + "' is empty");
  double peak = 0.0;
  for (double v : cur) peak = std::max(peak, std::abs(v));
  if (!(peak > 0)) throw InvalidArgument("replay file '" + spec.path + "' has no nonzero current");
  const double scale = spec.max_current / peak;
  const std::size_t n = std::min(cur.size(), spec.duration);
  CurrentProfile p;
  p.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    p.samples[i] = std::clamp(cur[i] * scale, -spec.max_current, spec.max_current);
  return p;
}

}  // namespace

CurrentProfile gen_profile(const ProfileSpec& spec) {
  if (!(spec.max_current > 0)) throw InvalidArgument("max_current must be positive");
  if (spec.duration == 0) throw InvalidArgument("profile duration must be positive");
  switch (spec.kind) {
    case ProfileKind::PulseTrain: return pulse_train(spec);
    case ProfileKind::RandomWalk: return random_walk(spec);
    case ProfileKind::ScaledReplay: return scaled_replay(spec);
    case ProfileKind::Rest: return CurrentProfile{1.0, std::vector<double>(spec.duration, 0.0)};
  }
  throw InvalidArgument("unknown profile kind");
}

std::string to_string(Param p) {
  switch (p) {
    case Param::H: return "h";
    case Param::CP: return "c_p";
    case Param::KT: return "k_t";
    case Param::R0: return "r0";
    case Param::R1: return "r1";
  }
  return "?";
}

Param param_from_string(const std::string& s) {
  for (Param p : kAllParams)
    if (to_string(p) == s) return p;
  throw InvalidArgument("unknown parameter '" + s + "'");
}

CellParams apply_perturbation(const CellParams& nominal, const Perturbation& e) {
  CellParams c = nominal;
  c.thermal.h = perturb(nominal.thermal.h, e[Param::H]);
  c.thermal.c_p = perturb(nominal.thermal.c_p, e[Param::CP]);
  c.thermal.k_t = perturb(nominal.thermal.k_t, e[Param::KT]);
  c.electrical.r0 = perturb(nominal.electrical.r0, e[Param::R0]);
  c.electrical.r1 = perturb(nominal.electrical.r1, e[Param::R1]);
  return c;
}

void ScenarioSpec::validate() const {
  for (double e : eps.eps)
    if (!(e >= -0.9 && e <= 0.9)) throw InvalidArgument("scenario '" + id + "': epsilon outside [-0.9, 0.9]");
}

std::string NormStats::hash() const {
  std::string buf;
  append_doubles(buf, mean);
  append_doubles(buf, std);
  const double lab[2] = {label_mean, label_std};
  append_doubles(buf, lab);
  return sha256_hex(buf);
}

TimeSeries simulate_scenario(const ScenarioSpec& sc, const CurrentProfile& profile, const CellParams& nominal,
                             const SimSettings& settings) {
  sc.validate();
  profile.validate(settings.max_abs_current);
  const CellParams cell = apply_perturbation(nominal, sc.eps);
  SimOptions opt;
  opt.backend = sc.backend;
  opt.fom_nodes = settings.fom_nodes;
  if (settings.noise) {
    NoiseSpec ns = settings.noise_spec;
    ns.seed = sc.seed;
    opt.noise = ns;
  }
  InitialCondition init = settings.init;
  init.t0 = sc.coolant_temp;
  return simulate(profile, cell.electrical, cell.thermal, init, sc.coolant_temp, opt);
}

Dataset build_dataset(const std::vector<ScenarioSpec>& scenarios, const std::map<std::string, ProfileSpec>& profiles,
                      const CellParams& nominal, const SimSettings& settings) {
  if (scenarios.empty()) throw InvalidArgument("no scenarios");
  std::vector<ScenarioSpec> sorted = scenarios;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].id == sorted[i - 1].id) throw InvalidArgument("duplicate scenario id '" + sorted[i].id + "'");

  std::map<std::string, CurrentProfile> cache;
  for (const auto& sc : sorted) {
    auto it = profiles.find(sc.profile_id);
    if (it == profiles.end())
      throw InvalidArgument("scenario '" + sc.id + "' references unknown profile '" + sc.profile_id + "'");
    if (!cache.count(sc.profile_id)) cache.emplace(sc.profile_id, gen_profile(it->second));
  }

  Dataset ds;
  ds.series.resize(sorted.size());
  parallel_for(sorted.size(), settings.workers, [&](std::size_t i) {
    const auto& sc = sorted[i];
    try {
      ds.series[i] = {sc.id, simulate_scenario(sc, cache.at(sc.profile_id), nominal, settings)};
    } catch (const SimulationError& e) {
      throw Error(e.kind(), "scenario '" + sc.id + "': " + e.what());
    }
  });
  ds.norm = compute_norm_stats(ds.series);
  return ds;
}

NormStats compute_norm_stats(const std::vector<LabeledSeries>& series) {
  std::array<double, 5> sum{}, sq{};
  std::size_t n = 0;
  // two-pass for accuracy
  for (const auto& ls : series) {
    const auto& in = ls.series.inputs;
    for (std::size_t k = 0; k < in.size(); ++k) {
      sum[0] += in.current[k];
      sum[1] += in.voltage[k];
      sum[2] += in.t_surf[k];
      sum[3] += in.t_fluid[k];
      if (ls.series.labeled()) sum[4] += (*ls.series.t_core)[k];
    }
    n += in.size();
  }
  if (n == 0) throw InvalidArgument("cannot compute statistics of an empty dataset");
  std::array<double, 5> mean{};
  for (int f = 0; f < 5; ++f) mean[f] = sum[f] / static_cast<double>(n);
  for (const auto& ls : series) {
    const auto& in = ls.series.inputs;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const double v[4] = {in.current[k], in.voltage[k], in.t_surf[k], in.t_fluid[k]};
      for (int f = 0; f < 4; ++f) sq[f] += (v[f] - mean[f]) * (v[f] - mean[f]);
      if (ls.series.labeled()) {
        const double d = (*ls.series.t_core)[k] - mean[4];
        sq[4] += d * d;
      }
    }
  }
  NormStats ns;
  for (int f = 0; f < 4; ++f) {
    ns.mean[f] = mean[f];
    ns.std[f] = std::max(std::sqrt(sq[f] / static_cast<double>(n)), kStdFloor);
  }
  ns.label_mean = mean[4];
  ns.label_std = std::max(std::sqrt(sq[4] / static_cast<double>(n)), kStdFloor);
  return ns;
}

bool WindowSet::labeled() const {
  return !blocks.empty() && std::all_of(blocks.begin(), blocks.end(), [](const Block& b) { return !b.labels.empty(); });
}

std::span<const double> WindowSet::features(std::size_t i) const {
  const auto& r = refs[i];
  return {blocks[r.block].features.data() + 4 * static_cast<std::size_t>(r.start), 4 * w};
}

double WindowSet::label(std::size_t i) const {
  const auto& b = blocks[refs[i].block];
  if (b.labels.empty()) throw UnlabeledError("window set has no labels");
  return b.labels[end_index(i)];
}

void WindowSet::append(const WindowSet& other) {
  if (blocks.empty() && refs.empty()) {
    *this = other;
    return;
  }
  if (other.w != w) throw DimensionError("window length mismatch");
  if (other.norm_hash != norm_hash) throw InvalidArgument("window sets were normalized with different stats");
  const auto offset = static_cast<std::uint32_t>(blocks.size());
  blocks.insert(blocks.end(), other.blocks.begin(), other.blocks.end());
  for (auto r : other.refs) refs.push_back({r.block + offset, r.start});
}

WindowSet WindowSet::subset(std::span<const std::size_t> idx) const {
  WindowSet out;
  out.w = w;
  out.norm_hash = norm_hash;
  out.blocks = blocks;
  out.refs.reserve(idx.size());
  for (auto i : idx) out.refs.push_back(refs.at(i));
  return out;
}

namespace {

WindowSet make_windows(const InputSeries& in, const std::vector<double>* labels, std::size_t w, std::size_t stride,
                       const NormStats& norm, const std::string& id) {
  const std::size_t n = in.size();
  if (w == 0 || stride == 0) throw InvalidArgument("window length and stride must be positive");
  if (n < w)
    throw InvalidArgument("series '" + id + "' has " + std::to_string(n) + " samples, shorter than window " +
                          std::to_string(w));
  WindowSet ws;
  ws.w = w;
  ws.norm_hash = norm.hash();
  WindowSet::Block b;
  b.scenario_id = id;
  b.features.resize(4 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double raw[4] = {in.current[k], in.voltage[k], in.t_surf[k], in.t_fluid[k]};
    for (int f = 0; f < 4; ++f) b.features[4 * k + f] = (raw[f] - norm.mean[f]) / norm.std[f];
  }
  if (labels) b.labels = *labels;
  ws.blocks.push_back(std::move(b));
  const std::size_t count = (n - w) / stride + 1;
  ws.refs.reserve(count);
  for (std::size_t j = 0; j < count; ++j) ws.refs.push_back({0, static_cast<std::uint32_t>(j * stride)});
  return ws;
}

}  // namespace

WindowSet windowize(const TimeSeries& series, std::size_t w, std::size_t stride, const NormStats& norm,
                    const std::string& scenario_id) {
  return make_windows(series.inputs, series.t_core ? &*series.t_core : nullptr, w, stride, norm, scenario_id);
}

WindowSet windowize(const InputSeries& series, std::size_t w, std::size_t stride, const NormStats& norm,
                    const std::string& scenario_id) {
  return make_windows(series, nullptr, w, stride, norm, scenario_id);
}

}  // namespace coretemp
