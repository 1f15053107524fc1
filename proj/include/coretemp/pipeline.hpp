#pragma once

#include <optional>
#include <string>
#include <vector>

namespace coretemp {

inline constexpr const char* kVersion = "0.1.0";

/// Arguments shared by every command; each command reads the ones it needs
/// and rejects missing required ones.
struct RunOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;
  std::string checkpoint;
  std::string data_dir;     // output directory of `generate`
  std::string target_csv;
  std::string run_dir;      // export-plots input
  std::optional<std::size_t> workers;
  std::optional<double> from_fraction;  // evaluate: score only the tail after this fraction
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "generate",         "pretrain",          "adapt",
                                              "evaluate", "study-perturb", "study-sensitivity", "export-plots"};
  return names;
}

/// Runs one command, writing outputs, a copy of the resolved config and
/// manifest.json into opts.out_dir. Throws coretemp::Error subclasses.
void run_command(const std::string& command, const RunOptions& opts);

}  // namespace coretemp
