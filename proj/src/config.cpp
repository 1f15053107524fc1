#include "coretemp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coretemp/errors.hpp"

namespace coretemp {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed so that
// leftovers (typos, stale options) can be reported.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Obj child(const char* key) {
    seen_.insert(key);
    return Obj(j_.at(key), where(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where(k) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Backend parse_backend(const std::string& s, const std::string& where) {
  try {
    return backend_from_string(s);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Param parse_param(const std::string& s, const std::string& where) {
  try {
    return param_from_string(s);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

ProfileSpec read_profile(const json& j, const std::string& path, ProfileSpec p = {}) {
  Obj o(j, path);
  std::string kind = to_string(p.kind);
  o.get("id", p.id);
  o.get("kind", kind);
  o.get("max_current", p.max_current);
  o.get("duration", p.duration);
  o.get("seed", p.seed);
  o.get("path", p.path);
  o.get("discharge_bias", p.discharge_bias);
  o.finish();
  try {
    p.kind = profile_kind_from_string(kind);
  } catch (const Error& e) {
    throw ConfigError(o.where("kind") + ": " + e.what());
  }
  return p;
}

std::vector<ProfileSpec> read_profiles(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of profiles");
  std::vector<ProfileSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_profile(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<StudyAxis> read_axes(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected {param: [eps, ...]}");
  std::vector<StudyAxis> out;
  // canonical parameter order regardless of key order in the file
  for (Param p : kAllParams) {
    const std::string name = to_string(p);
    if (!j.contains(name)) continue;
    try {
      out.push_back({p, j.at(name).get<std::vector<double>>()});
    } catch (const json::exception& e) {
      throw ConfigError(path + "." + name + ": " + e.what());
    }
  }
  for (const auto& [k, _] : j.items()) parse_param(k, path + "." + k);
  return out;
}

json profile_json(const ProfileSpec& p) {
  return {{"id", p.id},       {"kind", to_string(p.kind)}, {"max_current", p.max_current}, {"duration", p.duration},
          {"seed", p.seed},   {"path", p.path},            {"discharge_bias", p.discharge_bias}};
}

json axes_json(const std::vector<StudyAxis>& axes) {
  json j = json::object();
  for (const auto& a : axes) j[to_string(a.param)] = a.eps;
  return j;
}

ProfileSpec make_profile(const std::string& id, ProfileKind kind, std::uint64_t seed) {
  ProfileSpec p;
  p.id = id;
  p.kind = kind;
  p.seed = seed;
  return p;
}

}  // namespace

Config default_config() {
  Config c;
  c.profile = make_profile("profile", ProfileKind::PulseTrain, 9000);
  for (int i = 0; i < 6; ++i)
    c.dataset.profiles.push_back(
        make_profile("p" + std::to_string(i), i < 4 ? ProfileKind::PulseTrain : ProfileKind::RandomWalk,
                     100 + static_cast<std::uint64_t>(i)));
  c.dataset.sweep = {{Param::H, {-0.3, 0.0, 0.3}}};
  c.dataset.coolant_temps = {-15.0, 5.0, 25.0};
  c.study.profiles = {make_profile("eval0", ProfileKind::PulseTrain, 9000),
                      make_profile("eval1", ProfileKind::RandomWalk, 9001)};
  c.study.grid = default_study_grid();
  c.sensitivity.params = {kAllParams.begin(), kAllParams.end()};
  c.sensitivity.eps = {-0.45, 0.45};
  c.sensitivity.profile = make_profile("sens", ProfileKind::PulseTrain, 9000);
  return c;
}

Config parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  Config c = default_config();
  Obj top(root, origin);
  top.get("workers", c.workers);

  if (top.has("cell")) {
    Obj cell = top.child("cell");
    if (cell.has("electrical")) {
      Obj e = cell.child("electrical");
      auto& p = c.cell.electrical;
      e.get("capacity_ah", p.capacity_ah);
      e.get("r0", p.r0);
      e.get("r1", p.r1);
      e.get("c1", p.c1);
      e.get("v_min", p.v_min);
      e.get("v_max", p.v_max);
      if (e.has("ocv_curve")) {
        std::vector<std::array<double, 2>> pts;
        e.get("ocv_curve", pts);
        p.ocv_curve.clear();
        for (const auto& q : pts) p.ocv_curve.push_back({q[0], q[1]});
      }
      e.finish();
    }
    if (cell.has("thermal")) {
      Obj t = cell.child("thermal");
      auto& p = c.cell.thermal;
      t.get("rho", p.rho);
      t.get("c_p", p.c_p);
      t.get("k_t", p.k_t);
      t.get("h", p.h);
      t.get("radius", p.radius);
      t.get("length", p.length);
      t.finish();
    }
    cell.finish();
  }

  if (top.has("simulation")) {
    Obj s = top.child("simulation");
    auto& p = c.simulation;
    std::string backend = to_string(p.backend);
    s.get("backend", backend);
    p.backend = parse_backend(backend, s.where("backend"));
    s.get("fom_nodes", p.fom_nodes);
    s.get("soc0", p.soc0);
    s.get("coolant_temp", p.coolant_temp);
    s.get("noise", p.noise);
    s.get("max_abs_current", p.max_abs_current);
    if (s.has("noise_spec")) {
      Obj n = s.child("noise_spec");
      n.get("sigma_i", p.noise_spec.sigma_i);
      n.get("sigma_v", p.noise_spec.sigma_v);
      n.get("sigma_t", p.noise_spec.sigma_t);
      n.get("seed", p.noise_spec.seed);
      n.finish();
    }
    s.finish();
  }

  if (top.has("profile")) c.profile = read_profile(top.raw("profile"), top.where("profile"), c.profile);

  if (top.has("dataset")) {
    Obj d = top.child("dataset");
    auto& p = c.dataset;
    if (d.has("profiles")) p.profiles = read_profiles(d.raw("profiles"), d.where("profiles"));
    if (d.has("sweep")) p.sweep = read_axes(d.raw("sweep"), d.where("sweep"));
    d.get("coolant_temps", p.coolant_temps);
    std::string backend = to_string(p.backend);
    d.get("backend", backend);
    p.backend = parse_backend(backend, d.where("backend"));
    d.get("window", p.window);
    d.get("stride", p.stride);
    d.get("noise_seed", p.noise_seed);
    d.finish();
  }

  if (top.has("train")) {
    Obj t = top.child("train");
    auto& p = c.train;
    t.get("hidden", p.hidden);
    t.get("features", p.features);
    t.get("epochs", p.epochs);
    t.get("batch_size", p.batch_size);
    t.get("learning_rate", p.adam.learning_rate);
    t.get("beta1", p.adam.beta1);
    t.get("beta2", p.adam.beta2);
    t.get("adam_eps", p.adam.eps);
    t.get("clip_norm", p.adam.clip_norm);
    t.get("lr_final_fraction", p.lr_final_fraction);
    t.get("seed", p.seed);
    t.get("validation_fraction", p.validation_fraction);
    t.finish();
  }

  if (top.has("adapt")) {
    Obj a = top.child("adapt");
    auto& p = c.adapt.config;
    a.get("lambda_mmd", p.lambda_mmd);
    a.get("lambda_coral", p.lambda_coral);
    a.get("bandwidths", p.bandwidths);
    a.get("tau_reliable", p.tau_reliable);
    a.get("epochs", p.epochs);
    a.get("learning_rate", p.learning_rate);
    a.get("batch_size", p.batch_size);
    a.get("seed", p.seed);
    a.get("labeled_fraction", p.labeled_fraction);
    a.get("freeze_fc2", p.freeze_fc2);
    a.get("diagnostic_samples", p.diagnostic_samples);
    a.get("stride", c.adapt.stride);
    std::string align = c.adapt.alignment == AlignmentSource::Twin ? "twin" : "pretraining";
    a.get("alignment", align);
    if (align == "twin")
      c.adapt.alignment = AlignmentSource::Twin;
    else if (align == "pretraining")
      c.adapt.alignment = AlignmentSource::Pretraining;
    else
      throw ConfigError(a.where("alignment") + ": expected 'twin' or 'pretraining'");
    a.finish();
  }

  if (top.has("study")) {
    Obj s = top.child("study");
    auto& p = c.study;
    if (s.has("profiles")) p.profiles = read_profiles(s.raw("profiles"), s.where("profiles"));
    if (s.has("grid")) p.grid = read_axes(s.raw("grid"), s.where("grid"));
    s.get("eval_stride", p.eval_stride);
    s.get("source_alignment_windows", p.source_alignment_windows);
    s.get("run_adaptation", p.run_adaptation);
    s.finish();
  }

  if (top.has("sensitivity")) {
    Obj s = top.child("sensitivity");
    auto& p = c.sensitivity;
    if (s.has("params")) {
      std::vector<std::string> names;
      s.get("params", names);
      p.params.clear();
      for (const auto& n : names) p.params.push_back(parse_param(n, s.where("params")));
    }
    s.get("eps", p.eps);
    if (s.has("profile")) p.profile = read_profile(s.raw("profile"), s.where("profile"), p.profile);
    s.finish();
  }

  if (top.has("smoothing")) {
    Obj s = top.child("smoothing");
    s.get("enabled", c.smoothing.enabled);
    s.get("window", c.smoothing.window);
    s.get("sigma", c.smoothing.sigma);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void Config::validate() const {
  auto fail = [](const std::string& what, const std::exception& e) { throw ConfigError(what + ": " + e.what()); };
  if (workers == 0) throw ConfigError("workers must be at least 1");
  try {
    cell.electrical.validate();
  } catch (const std::exception& e) {
    fail("cell.electrical", e);
  }
  try {
    cell.thermal.validate();
  } catch (const std::exception& e) {
    fail("cell.thermal", e);
  }
  try {
    train.validate();
  } catch (const std::exception& e) {
    fail("train", e);
  }
  try {
    adapt.config.validate();
  } catch (const std::exception& e) {
    fail("adapt", e);
  }
  if (simulation.fom_nodes < 3) throw ConfigError("simulation.fom_nodes must be at least 3");
  if (!(simulation.soc0 >= 0 && simulation.soc0 <= 1)) throw ConfigError("simulation.soc0 outside [0,1]");
  if (dataset.profiles.empty()) throw ConfigError("dataset.profiles is empty");
  if (dataset.coolant_temps.empty()) throw ConfigError("dataset.coolant_temps is empty");
  if (dataset.window == 0 || dataset.stride == 0) throw ConfigError("dataset.window and dataset.stride must be positive");
  if (adapt.stride == 0 || study.eval_stride == 0) throw ConfigError("strides must be positive");
  if (!(smoothing.window % 2 == 1) || !(smoothing.sigma > 0)) throw ConfigError("smoothing needs an odd window and sigma > 0");
  for (const auto& axes : {dataset.sweep, study.grid})
    for (const auto& a : axes)
      for (double e : a.eps)
        if (!(e >= -0.9 && e <= 0.9)) throw ConfigError("perturbation " + std::to_string(e) + " outside [-0.9, 0.9]");
  std::set<std::string> ids;
  for (const auto& p : dataset.profiles)
    if (!ids.insert(p.id).second) throw ConfigError("dataset.profiles: duplicate id '" + p.id + "'");
  // Held-out profiles must not leak into the training sweep.
  for (const auto& e : study.profiles)
    for (const auto& t : dataset.profiles)
      if (e.kind == t.kind && e.seed == t.seed && e.kind != ProfileKind::ScaledReplay)
        throw ConfigError("study profile '" + e.id + "' duplicates training profile '" + t.id + "'");
}

std::vector<std::pair<std::string, std::uint64_t>> Config::seeds() const {
  std::vector<std::pair<std::string, std::uint64_t>> s{{"train", train.seed},
                                                       {"adapt", adapt.config.seed},
                                                       {"noise", simulation.noise_spec.seed},
                                                       {"dataset_noise", dataset.noise_seed},
                                                       {"profile", profile.seed},
                                                       {"sensitivity_profile", sensitivity.profile.seed}};
  for (const auto& p : dataset.profiles) s.emplace_back("dataset_profile:" + p.id, p.seed);
  for (const auto& p : study.profiles) s.emplace_back("study_profile:" + p.id, p.seed);
  return s;
}

std::string config_to_json(const Config& c) {
  json j;
  j["workers"] = c.workers;
  json ocv = json::array();
  for (const auto& p : c.cell.electrical.ocv_curve) ocv.push_back({p.soc, p.volts});
  const auto& e = c.cell.electrical;
  const auto& t = c.cell.thermal;
  j["cell"] = {{"electrical",
                {{"capacity_ah", e.capacity_ah}, {"r0", e.r0}, {"r1", e.r1}, {"c1", e.c1}, {"ocv_curve", ocv},
                 {"v_min", e.v_min}, {"v_max", e.v_max}}},
               {"thermal",
                {{"rho", t.rho}, {"c_p", t.c_p}, {"k_t", t.k_t}, {"h", t.h}, {"radius", t.radius}, {"length", t.length}}}};
  const auto& s = c.simulation;
  j["simulation"] = {{"backend", to_string(s.backend)},
                     {"fom_nodes", s.fom_nodes},
                     {"soc0", s.soc0},
                     {"coolant_temp", s.coolant_temp},
                     {"noise", s.noise},
                     {"noise_spec",
                      {{"sigma_i", s.noise_spec.sigma_i},
                       {"sigma_v", s.noise_spec.sigma_v},
                       {"sigma_t", s.noise_spec.sigma_t},
                       {"seed", s.noise_spec.seed}}},
                     {"max_abs_current", s.max_abs_current}};
  j["profile"] = profile_json(c.profile);
  json dp = json::array();
  for (const auto& p : c.dataset.profiles) dp.push_back(profile_json(p));
  j["dataset"] = {{"profiles", dp},
                  {"sweep", axes_json(c.dataset.sweep)},
                  {"coolant_temps", c.dataset.coolant_temps},
                  {"backend", to_string(c.dataset.backend)},
                  {"window", c.dataset.window},
                  {"stride", c.dataset.stride},
                  {"noise_seed", c.dataset.noise_seed}};
  const auto& tr = c.train;
  j["train"] = {{"hidden", tr.hidden},
                {"features", tr.features},
                {"epochs", tr.epochs},
                {"batch_size", tr.batch_size},
                {"learning_rate", tr.adam.learning_rate},
                {"beta1", tr.adam.beta1},
                {"beta2", tr.adam.beta2},
                {"adam_eps", tr.adam.eps},
                {"clip_norm", tr.adam.clip_norm},
                {"lr_final_fraction", tr.lr_final_fraction},
                {"seed", tr.seed},
                {"validation_fraction", tr.validation_fraction}};
  const auto& a = c.adapt.config;
  j["adapt"] = {{"lambda_mmd", a.lambda_mmd},
                {"lambda_coral", a.lambda_coral},
                {"bandwidths", a.bandwidths},
                {"tau_reliable", a.tau_reliable},
                {"epochs", a.epochs},
                {"learning_rate", a.learning_rate},
                {"batch_size", a.batch_size},
                {"seed", a.seed},
                {"labeled_fraction", a.labeled_fraction},
                {"freeze_fc2", a.freeze_fc2},
                {"diagnostic_samples", a.diagnostic_samples},
                {"stride", c.adapt.stride},
                {"alignment", c.adapt.alignment == AlignmentSource::Twin ? "twin" : "pretraining"}};
  json sp = json::array();
  for (const auto& p : c.study.profiles) sp.push_back(profile_json(p));
  j["study"] = {{"profiles", sp},
                {"grid", axes_json(c.study.grid)},
                {"eval_stride", c.study.eval_stride},
                {"source_alignment_windows", c.study.source_alignment_windows},
                {"run_adaptation", c.study.run_adaptation}};
  std::vector<std::string> names;
  for (Param p : c.sensitivity.params) names.push_back(to_string(p));
  j["sensitivity"] = {{"params", names}, {"eps", c.sensitivity.eps}, {"profile", profile_json(c.sensitivity.profile)}};
  j["smoothing"] = {{"enabled", c.smoothing.enabled}, {"window", c.smoothing.window}, {"sigma", c.smoothing.sigma}};
  return j.dump(2) + "\n";
}

std::vector<ScenarioSpec> dataset_scenarios(const Config& cfg) {
  // cartesian product of the sweep axes
  std::vector<Perturbation> points{Perturbation{}};
  for (const auto& axis : cfg.dataset.sweep) {
    std::vector<Perturbation> next;
    for (const auto& p : points)
      for (double e : axis.eps) {
        Perturbation q = p;
        q[axis.param] = e;
        next.push_back(q);
      }
    points = std::move(next);
  }
  auto pad = [](std::size_t i) {
    std::string s = std::to_string(i);
    return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
  };
  std::vector<ScenarioSpec> out;
  std::uint64_t k = 0;
  for (const auto& prof : cfg.dataset.profiles)
    for (std::size_t ti = 0; ti < cfg.dataset.coolant_temps.size(); ++ti)
      for (std::size_t pi = 0; pi < points.size(); ++pi) {
        ScenarioSpec sc;
        sc.id = prof.id + "_tf" + pad(ti) + "_s" + pad(pi);
        sc.profile_id = prof.id;
        sc.seed = cfg.dataset.noise_seed + k++;
        sc.coolant_temp = cfg.dataset.coolant_temps[ti];
        sc.eps = points[pi];
        sc.backend = cfg.dataset.backend;
        out.push_back(sc);
      }
  return out;
}

}  // namespace coretemp
