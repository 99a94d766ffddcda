#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace overthink {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by bad user input (files, configuration). The CLI maps
/// these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Dataset validation failure. `line` is 1-based, 0 when not line-specific.
class DatasetError : public InputError {
 public:
  DatasetError(const std::string& what, std::size_t line = 0)
      : InputError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& variable)
      : Error("prompt template variable missing: " + variable), variable_(variable) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

// Gateway failures.
class CredentialError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ScoreParseError : public Error {
 public:
  using Error::Error;
};

// Optimizer failures.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, int round)
      : Error(what), round_(round) {}
  int round() const noexcept { return round_; }

 private:
  int round_;
};

/// Transcript set does not satisfy the metric preconditions.
class MetricsError : public InputError {
 public:
  MetricsError(const std::string& what, std::vector<std::string> sample_ids = {})
      : InputError(what), sample_ids_(std::move(sample_ids)) {}
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }

 private:
  std::vector<std::string> sample_ids_;
};

class FeatureError : public InputError {
 public:
  using InputError::InputError;
};

class TrainingError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace overthink
