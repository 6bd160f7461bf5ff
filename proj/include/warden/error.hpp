#pragma once

#include <stdexcept>
#include <string>

namespace warden {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input (missing files, malformed fact files, broken config). CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Anything that went wrong talking to a model backend. CLI exit code 3.
class GatewayError : public Error {
 public:
  using Error::Error;
};

/// A single model call failed. Pipeline stages may degrade on this.
class ModelError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// The backend cannot be reached at all. Never downgraded.
class GatewayUnreachable : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class RateLimited : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Strict scripted scenario had no rule for a request.
class ScenarioMiss : public ModelError {
 public:
  ScenarioMiss(std::string stage, const std::string& what)
      : ModelError(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class EmbeddingError : public ModelError {
 public:
  using ModelError::ModelError;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

class EmptyProject : public InputError {
 public:
  using InputError::InputError;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

class DanglingReference : public InputError {
 public:
  using InputError::InputError;
};

class ConflictingDefinition : public InputError {
 public:
  using InputError::InputError;
};

class UnknownFunction : public InputError {
 public:
  using InputError::InputError;
};

class UnknownContract : public InputError {
 public:
  using InputError::InputError;
};

class EmptyGraph : public InputError {
 public:
  using InputError::InputError;
};

class EmptyBatch : public InputError {
 public:
  using InputError::InputError;
};

class UnprunableBatch : public InputError {
 public:
  using InputError::InputError;
};

class MissingDirectory : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace warden
