// Exercises the shared library through its C header and the CLI as a subprocess.
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coretemp/coretemp.h"

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "profile": {"id": "tgt", "kind": "pulse_train", "seed": 4242, "duration": 500},
  "dataset": {
    "profiles": [{"id": "p0", "seed": 1, "duration": 400},
                 {"id": "p1", "kind": "random_walk", "seed": 2, "duration": 400}],
    "sweep": {"h": [-0.2, 0.2]}, "coolant_temps": [25], "window": 30, "stride": 10
  },
  "train": {"hidden": 6, "features": 4, "epochs": 2, "batch_size": 16},
  "adapt": {"epochs": 2, "batch_size": 16, "diagnostic_samples": 30},
  "study": {"profiles": [{"id": "e0", "seed": 900, "duration": 300}], "grid": {"h": [0.3]}, "eval_stride": 5},
  "sensitivity": {"params": ["h", "r0"], "eps": [0.3], "profile": {"id": "s", "seed": 5, "duration": 300}},
  "workers": 2
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coretemp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CORETEMP_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Every file of a run directory except the manifest (which carries wall time).
std::map<std::string, std::string> outputs(const fs::path& dir, bool with_config = true) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    const auto name = e.path().filename().string();
    if (name == "manifest.json" || (!with_config && name == "config.json")) continue;
    m[rel] = slurp(e.path());
  }
  return m;
}

struct Pipeline {
  fs::path root, cfg;

  explicit Pipeline(const std::string& name, int workers = 0) : root(scratch(name)) {
    cfg = root / "cfg.json";
    std::ofstream(cfg) << kSmallConfig;
    const std::string w = workers ? " -w " + std::to_string(workers) : "";
    const std::string c = " -c " + cfg.string() + w;
    const auto r = [&](const char* d) { return (root / d).string(); };
    REQUIRE(cli("simulate" + c + " -o " + r("sim")) == 0);
    REQUIRE(cli("generate" + c + " -o " + r("data")) == 0);
    REQUIRE(cli("pretrain" + c + " -o " + r("pre") + " --data " + r("data")) == 0);
    const std::string ck = " --checkpoint " + r("pre") + "/model.ckpt";
    const std::string tg = " --target " + r("sim") + "/series.csv";
    REQUIRE(cli("adapt" + c + " -o " + r("ada") + ck + tg) == 0);
    REQUIRE(cli("evaluate" + c + " -o " + r("eva") + ck + tg + " --from-fraction 0.5") == 0);
    REQUIRE(cli("study-perturb" + c + " -o " + r("stu") + ck) == 0);
    REQUIRE(cli("study-sensitivity" + c + " -o " + r("sen")) == 0);
    REQUIRE(cli("export-plots" + c + " -o " + r("plt") + " --run " + r("ada")) == 0);
  }
};

}  // namespace

TEST_CASE("C API status codes and values") {
  CHECK(std::string(ct_version()).size() > 0);
  ct_model* m = nullptr;
  CHECK(ct_model_load("/nonexistent.ckpt", &m) == CT_ERR_IO);
  CHECK(m == nullptr);
  CHECK(std::string(ct_last_error()).find("nonexistent") != std::string::npos);
  CHECK(ct_model_load(nullptr, &m) == CT_ERR_INVALID_ARGUMENT);

  const fs::path dir = scratch("capi");
  std::ofstream(dir / "bad.csv") << "time_s,current_a,voltage_v,surf_temp_c,coolant_temp_c\n1,2,3\n";
  ct_series* s = nullptr;
  CHECK(ct_series_load((dir / "bad.csv").c_str(), &s) == CT_ERR_PARSE);

  REQUIRE(ct_series_simulate(nullptr, &s) == CT_OK);
  const size_t n = ct_series_length(s);
  CHECK(n == 3600);
  CHECK(ct_series_labeled(s) == 1);
  std::vector<double> col(n);
  CHECK(ct_series_column(s, "core_temp_c", col.data(), n) == CT_OK);
  CHECK(col[0] > 25.0);
  CHECK(ct_series_column(s, "core_temp_c", col.data(), n - 1) == CT_ERR_DIMENSION);
  CHECK(ct_series_column(s, "nope", col.data(), n) == CT_ERR_INVALID_ARGUMENT);
  ct_series_free(s);

  const double x[] = {0.0}, y[] = {1.0}, bw[] = {0.8};
  double v = -1.0;
  CHECK(ct_mmd2(x, 1, y, 1, 1, bw, 1, &v) == CT_OK);
  CHECK(v == doctest::Approx(2.0 - 2.0 * std::exp(-1.0 / (2 * 0.64))));
  const double cx[] = {-1, 1}, cy[] = {-2, 2};
  CHECK(ct_coral(cx, 2, cy, 2, 1, &v) == CT_OK);
  CHECK(v == doctest::Approx(2.25).epsilon(1e-6));
  CHECK(ct_coral(cx, 1, cy, 2, 1, &v) == CT_ERR_INVALID_ARGUMENT);

  ct_run_options o;
  ct_run_options_init(&o);
  CHECK(ct_run("bogus", &o) == CT_ERR_INVALID_ARGUMENT);
  const std::string out = (dir / "x").string();
  o.out_dir = out.c_str();
  std::ofstream(dir / "cfg.json") << R"({"train": {"epochz": 1}})";
  const std::string cfg = (dir / "cfg.json").string();
  o.config_path = cfg.c_str();
  CHECK(ct_run("simulate", &o) == CT_ERR_CONFIG);
  CHECK(std::string(ct_status_name(CT_ERR_CONFIG)).size() > 0);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("codes");
  const std::string out = " -o " + (dir / "o").string();
  CHECK(cli("") == 64);
  CHECK(cli("simulate") == 64);
  CHECK(cli("frobnicate" + out) == 64);
  CHECK(cli("--version") == 0);
  std::ofstream(dir / "bad.json") << R"({"unknown": 1})";
  CHECK(cli("simulate -c " + (dir / "bad.json").string() + out) == CT_ERR_CONFIG);
  CHECK(cli("evaluate --checkpoint /no/such.ckpt --target /no/such.csv" + out) == CT_ERR_IO);
  std::ofstream(dir / "cut.json") << R"({"cell": {"electrical": {"r0": 0.3}}})";
  CHECK(cli("simulate -c " + (dir / "cut.json").string() + out) == CT_ERR_SIMULATION);
  CHECK(fs::exists(dir / "o" / "series_partial.csv"));
}

TEST_CASE("pipeline outputs are reproducible and independent of the worker count") {
  const Pipeline a("run_a"), b("run_b");
  const auto oa = outputs(a.root), ob = outputs(b.root);
  // the config copy embeds its own path only via the input hash list in the manifest
  CHECK(oa.size() == ob.size());
  for (const auto& [k, v] : oa) {
    INFO(k);
    if (k == "cfg.json") continue;
    REQUIRE(ob.count(k));
    CHECK(ob.at(k) == v);
  }
  for (const char* f : {"sim/series.csv", "data/dataset.json", "pre/model.ckpt", "pre/train_history.csv",
                        "ada/model.ckpt", "ada/adapt_history.csv", "ada/pca.csv", "eva/metrics.json",
                        "stu/study_report.csv", "sen/sensitivity.csv", "plt/plot_adapt_history.csv"})
    CHECK(oa.count(f) == 1);

  const Pipeline serial("run_w1", 1);
  const auto os = outputs(serial.root, false);
  for (const auto& [k, v] : os) {
    INFO(k);
    if (k.find("config.json") != std::string::npos || k == "cfg.json") continue;
    REQUIRE(oa.count(k));
    CHECK(oa.at(k) == v);
  }

  // manifest lists every output and the input hashes
  const std::string man = slurp(a.root / "ada" / "manifest.json");
  for (const char* f : {"model.ckpt", "adapt_history.csv", "pseudo_labels.csv", "config.json", "sha256"})
    CHECK(man.find(f) != std::string::npos);
}

TEST_CASE("a run reproduces from its declared inputs alone") {
  const Pipeline a("run_src");
  const fs::path box = scratch("sandbox");
  fs::copy_file(a.root / "cfg.json", box / "cfg.json");
  fs::copy_file(a.root / "pre" / "model.ckpt", box / "model.ckpt");
  fs::copy_file(a.root / "sim" / "series.csv", box / "target.csv");
  REQUIRE(cli("adapt -c " + (box / "cfg.json").string() + " -o " + (box / "ada").string() + " --checkpoint " +
              (box / "model.ckpt").string() + " --target " + (box / "target.csv").string()) == 0);
  const auto want = outputs(a.root / "ada"), got = outputs(box / "ada");
  CHECK(want == got);
}
