#include "coretemp/coretemp.h"

#include <cstring>
#include <new>
#include <string>

#include "coretemp/adapt.hpp"
#include "coretemp/checkpoint.hpp"
#include "coretemp/config.hpp"
#include "coretemp/csv.hpp"
#include "coretemp/errors.hpp"
#include "coretemp/pipeline.hpp"

struct ct_model {
  coretemp::Model model;
};

struct ct_series {
  coretemp::TimeSeries series;
};

namespace {

thread_local std::string g_last_error;

ct_status status_of(coretemp::ErrorKind k) {
  using coretemp::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return CT_ERR_INVALID_ARGUMENT;
    case ErrorKind::Domain: return CT_ERR_DOMAIN;
    case ErrorKind::Config: return CT_ERR_CONFIG;
    case ErrorKind::Io: return CT_ERR_IO;
    case ErrorKind::Parse: return CT_ERR_PARSE;
    case ErrorKind::SocBounds:
    case ErrorKind::VoltageCutoff: return CT_ERR_SIMULATION;
    case ErrorKind::Numeric: return CT_ERR_NUMERIC;
    case ErrorKind::Divergence: return CT_ERR_DIVERGENCE;
    case ErrorKind::AdaptationStarved: return CT_ERR_STARVED;
    case ErrorKind::Dimension: return CT_ERR_DIMENSION;
    case ErrorKind::StaleCache: return CT_ERR_STALE_CACHE;
    case ErrorKind::Unlabeled: return CT_ERR_UNLABELED;
  }
  return CT_ERR_INTERNAL;
}

template <class Fn>
ct_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return CT_OK;
  } catch (const coretemp::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CT_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) throw coretemp::InvalidArgument(std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* ct_version(void) { return coretemp::kVersion; }

const char* ct_last_error(void) { return g_last_error.c_str(); }

const char* ct_status_name(ct_status s) {
  switch (s) {
    case CT_OK: return "ok";
    case CT_ERR_INTERNAL: return "internal error";
    case CT_ERR_CONFIG: return "config error";
    case CT_ERR_SIMULATION: return "simulation error";
    case CT_ERR_DIVERGENCE: return "training diverged";
    case CT_ERR_STARVED: return "adaptation starved";
    case CT_ERR_IO: return "i/o error";
    case CT_ERR_PARSE: return "parse error";
    case CT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CT_ERR_DOMAIN: return "domain error";
    case CT_ERR_DIMENSION: return "dimension mismatch";
    case CT_ERR_NUMERIC: return "numeric error";
    case CT_ERR_UNLABELED: return "unlabeled data";
    case CT_ERR_STALE_CACHE: return "stale cache";
  }
  return "unknown status";
}

void ct_run_options_init(ct_run_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->from_fraction = -1.0;
}

ct_status ct_run(const char* command, const ct_run_options* o) {
  return guarded([&] {
    need(command, "command");
    need(o, "options");
    coretemp::RunOptions r;
    auto str = [](const char* s) { return s ? std::string(s) : std::string(); };
    r.config_path = str(o->config_path);
    r.out_dir = str(o->out_dir);
    r.checkpoint = str(o->checkpoint);
    r.data_dir = str(o->data_dir);
    r.target_csv = str(o->target_csv);
    r.run_dir = str(o->run_dir);
    if (o->workers > 0) r.workers = o->workers;
    if (o->from_fraction >= 0) r.from_fraction = o->from_fraction;
    coretemp::run_command(command, r);
  });
}

ct_status ct_model_load(const char* path, ct_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto* m = new ct_model{coretemp::load_checkpoint(path)};
    *out = m;
  });
}

void ct_model_free(ct_model* m) { delete m; }

size_t ct_model_window(const ct_model* m) { return m ? m->model.window : 0; }

ct_status ct_model_norm_hash(const ct_model* m, char* buf, size_t cap) {
  return guarded([&] {
    need(m, "model");
    need(buf, "buf");
    const std::string h = m->model.norm.hash();
    if (cap < h.size() + 1) throw coretemp::InvalidArgument("buffer too small for the hash");
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

ct_status ct_series_load(const char* path, ct_series** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new ct_series{coretemp::ingest_csv(path).series};
  });
}

ct_status ct_series_simulate(const char* config_path, ct_series** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    const coretemp::Config cfg = config_path ? coretemp::load_config(config_path) : coretemp::default_config();
    const coretemp::CurrentProfile p = coretemp::gen_profile(cfg.profile);
    coretemp::SimOptions o;
    o.backend = cfg.simulation.backend;
    o.fom_nodes = cfg.simulation.fom_nodes;
    if (cfg.simulation.noise) o.noise = cfg.simulation.noise_spec;
    const coretemp::InitialCondition init{cfg.simulation.soc0, cfg.simulation.coolant_temp};
    *out = new ct_series{coretemp::simulate(p, cfg.cell.electrical, cfg.cell.thermal, init,
                                            cfg.simulation.coolant_temp, o)};
  });
}

void ct_series_free(ct_series* s) { delete s; }

size_t ct_series_length(const ct_series* s) { return s ? s->series.size() : 0; }

int ct_series_labeled(const ct_series* s) { return s && s->series.labeled() ? 1 : 0; }

ct_status ct_series_column(const ct_series* s, const char* name, double* out, size_t cap) {
  return guarded([&] {
    need(s, "series");
    need(name, "name");
    need(out, "out");
    const auto& in = s->series.inputs;
    const std::string n = name;
    const std::vector<double>* col = nullptr;
    if (n == coretemp::kColTime) col = &in.t;
    else if (n == coretemp::kColCurrent) col = &in.current;
    else if (n == coretemp::kColVoltage) col = &in.voltage;
    else if (n == coretemp::kColSurf) col = &in.t_surf;
    else if (n == coretemp::kColFluid) col = &in.t_fluid;
    else if (n == coretemp::kColCore) col = &s->series.core();
    else throw coretemp::InvalidArgument("unknown column '" + n + "'");
    if (cap < col->size()) throw coretemp::DimensionError("output buffer shorter than the series");
    std::copy(col->begin(), col->end(), out);
  });
}

ct_status ct_model_predict(const ct_model* m, const ct_series* s, size_t stride, double* out, size_t cap,
                           size_t* n_written) {
  return guarded([&] {
    need(m, "model");
    need(s, "series");
    need(n_written, "n_written");
    if (stride == 0) throw coretemp::InvalidArgument("stride must be positive");
    const auto ws = coretemp::windowize(s->series.inputs, m->model.window, stride, m->model.norm);
    *n_written = ws.size();
    if (cap < ws.size()) throw coretemp::DimensionError("output buffer too small");
    need(out, "out");
    const auto pred = coretemp::predict(ws, m->model.net);
    std::copy(pred.begin(), pred.end(), out);
  });
}

ct_status ct_mmd2(const double* x, size_t n, const double* y, size_t m, size_t dim, const double* bws, size_t nb,
                  double* out) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(bws, "bandwidths");
    need(out, "out");
    const Eigen::Map<const Eigen::MatrixXd> xm(x, static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::MatrixXd> ym(y, static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(m));
    *out = coretemp::mmd2(xm, ym, std::vector<double>(bws, bws + nb));
  });
}

ct_status ct_coral(const double* x, size_t n, const double* y, size_t m, size_t dim, double* out) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    const Eigen::Map<const Eigen::MatrixXd> xm(x, static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::MatrixXd> ym(y, static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(m));
    *out = coretemp::coral(xm, ym);
  });
}

}  // extern "C"
