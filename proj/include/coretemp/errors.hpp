#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coretemp {

// Categories map 1:1 onto C API status codes and CLI exit codes.
enum class ErrorKind {
  InvalidArgument,
  Domain,
  Config,
  Io,
  Parse,
  SocBounds,
  VoltageCutoff,
  Numeric,
  Divergence,
  AdaptationStarved,
  Dimension,
  StaleCache,
  Unlabeled,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::InvalidArgument, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorKind::Dimension, w) {}
};
struct StaleCacheError : Error {
  explicit StaleCacheError(const std::string& w) : Error(ErrorKind::StaleCache, w) {}
};
struct UnlabeledError : Error {
  explicit UnlabeledError(const std::string& w) : Error(ErrorKind::Unlabeled, w) {}
};
struct AdaptationStarvedError : Error {
  explicit AdaptationStarvedError(const std::string& w) : Error(ErrorKind::AdaptationStarved, w) {}
};

/// Malformed input file; carries the file and 1-based line.
struct ParseError : Error {
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(ErrorKind::Parse, file + ":" + std::to_string(line) + ": " + msg), file(file), line(line) {}
  std::string file;
  std::size_t line;
};

/// Electrical state left its admissible range at step `step`.
struct StepError : Error {
  StepError(ErrorKind kind, std::size_t step, const std::string& msg)
      : Error(kind, msg + " at step " + std::to_string(step)), step(step) {}
  std::size_t step;
};
struct SocBoundsError : StepError {
  SocBoundsError(std::size_t step, const std::string& msg) : StepError(ErrorKind::SocBounds, step, msg) {}
};
struct VoltageCutoffError : StepError {
  VoltageCutoffError(std::size_t step, const std::string& msg) : StepError(ErrorKind::VoltageCutoff, step, msg) {}
};

struct DivergenceError : Error {
  DivergenceError(std::size_t epoch, const std::string& msg)
      : Error(ErrorKind::Divergence, msg + " (epoch " + std::to_string(epoch) + ")"), epoch(epoch) {}
  std::size_t epoch;
};

}  // namespace coretemp
