#ifndef FRSB_ERRORS_HPP
#define FRSB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace frsb {

// Data errors: bad shapes, degenerate geometry, unreadable inputs.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : DataError {
  using DataError::DataError;
};

struct DomainError : DataError {
  using DataError::DataError;
};

struct IoError : DataError {
  using DataError::DataError;
};

/// Caller broke an API contract that the monitor/state machine depends on.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Invalid run configuration. `path()` is the dotted field path, e.g. "plan.beta".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A pipeline stage model failed; carries the stage name.
class StageError : public DataError {
 public:
  StageError(std::string stage, const std::string& what)
      : DataError(stage + " stage: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace frsb

#endif  // FRSB_ERRORS_HPP
