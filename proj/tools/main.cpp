// coretemp command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "coretemp/coretemp.h"

namespace {

constexpr int kUsageExit = 64;

struct Args {
  std::string config, out, checkpoint, data, target, run;
  std::size_t workers = 0;
  std::optional<double> from_fraction;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Core-temperature estimation toolkit: simulate, generate, pretrain, adapt, evaluate, study"};
  app.set_version_flag("--version", ct_version());
  app.require_subcommand(1);

  Args a;
  struct Spec {
    const char* name;
    const char* help;
    bool checkpoint, data, target, run;
  };
  const Spec specs[] = {
      {"simulate", "simulate the configured profile and write series.csv", false, false, false, false},
      {"generate", "build the source dataset (one CSV per scenario + dataset.json)", false, false, false, false},
      {"pretrain", "train the estimator on the source dataset", false, true, false, false},
      {"adapt", "adapt a checkpoint to a target CSV", true, true, true, false},
      {"evaluate", "score a checkpoint on a labeled CSV", true, false, true, false},
      {"study-perturb", "parameter-mismatch study over the configured grid", true, true, false, false},
      {"study-sensitivity", "sensitivity of V_t, T_s, T_c to each parameter", false, false, false, false},
      {"export-plots", "reshape a run's outputs into long-format plot tables", false, false, false, true},
  };
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("-c,--config", a.config, "JSON config (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a.out, "run directory to create")->required();
    sub->add_option("-w,--workers", a.workers, "worker threads (runtime only; results do not depend on it)")
        ->check(CLI::PositiveNumber);
    if (s.checkpoint) sub->add_option("--checkpoint", a.checkpoint, "model checkpoint")->required();
    if (s.data) sub->add_option("--data", a.data, "dataset directory written by `generate`");
    if (s.target) sub->add_option("--target", a.target, "target CSV")->required();
    if (s.run) sub->add_option("--run", a.run, "run directory to export")->required();
    if (std::string(s.name) == "evaluate")
      sub->add_option("--from-fraction", a.from_fraction, "score only windows ending after this fraction of the cycle")
          ->check(CLI::Range(0.0, 1.0));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageExit;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  ct_run_options opts;
  ct_run_options_init(&opts);
  auto set = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  opts.config_path = set(a.config);
  opts.out_dir = set(a.out);
  opts.checkpoint = set(a.checkpoint);
  opts.data_dir = set(a.data);
  opts.target_csv = set(a.target);
  opts.run_dir = set(a.run);
  opts.workers = a.workers;
  if (a.from_fraction) opts.from_fraction = *a.from_fraction;

  const ct_status st = ct_run(cmd.c_str(), &opts);
  if (st != CT_OK) {
    std::fprintf(stderr, "coretemp %s: %s: %s\n", cmd.c_str(), ct_status_name(st), ct_last_error());
    return static_cast<int>(st);
  }
  return 0;
}
