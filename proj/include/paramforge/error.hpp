#pragma once

#include <stdexcept>
#include <string>

namespace paramforge {

// Every failure the toolkit raises derives from Error and carries the
// category the CLI maps to an exit code.
enum class ErrorKind { Config, Data, Invariant };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ErrorKind::Invariant, what) {}
};

// corpus_ingest
class MissingColumn : public DataError {
 public:
  using DataError::DataError;
};
class MalformedCsv : public DataError {
 public:
  using DataError::DataError;
};
class EmptyFile : public DataError {
 public:
  using DataError::DataError;
};
class EncodingError : public DataError {
 public:
  using DataError::DataError;
};

// preprocess / lda_gibbs
class EmptyCorpus : public DataError {
 public:
  using DataError::DataError;
};
class InvalidConfig : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// coherence
class DegenerateTopic : public DataError {
 public:
  using DataError::DataError;
};
class UndefinedNpmi : public DataError {
 public:
  using DataError::DataError;
};

// analysis_viz
class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};
class NonSymmetric : public DataError {
 public:
  using DataError::DataError;
};
class IncompleteLabeling : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace paramforge
