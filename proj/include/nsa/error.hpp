#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nsa {

// Base of every error raised by the library. The CLI maps ConfigError and
// UsageError to exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class InfeasibleAction : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DegenerateMask : public Error {
 public:
  using Error::Error;
};

// No feasible action exists in the current state.
class DegenerateState : public Error {
 public:
  explicit DegenerateState(int step)
      : Error("degenerate state: no feasible action at step " +
              std::to_string(step)),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Raised from batch evaluation; wraps the message of the failing instance.
class BatchError : public Error {
 public:
  BatchError(std::size_t index, const std::string& what)
      : Error("instance " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsa
