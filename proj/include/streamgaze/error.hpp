#pragma once

#include <stdexcept>
#include <string>

namespace streamgaze {

/// Error category; maps onto CLI exit codes (usage 1, data 2, oracle 3).
enum class ErrorKind { usage = 1, data = 2, oracle = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(ErrorKind::oracle, what) {}
};

// gaze_ingest
class AlignmentError : public DataError { using DataError::DataError; };
class DegenerateRayError : public DataError { using DataError::DataError; };
class BehindCameraError : public DataError { using DataError::DataError; };
class IngestionError : public DataError { using DataError::DataError; };

// structured text coming back from an oracle
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::string span)
      : DataError(what + " near: " + span), span_(std::move(span)) {}
  const std::string& span() const noexcept { return span_; }

 private:
  std::string span_;
};
class ValidationError : public DataError { using DataError::DataError; };
class SchemaError : public DataError { using DataError::DataError; };
class NotFoundError : public DataError { using DataError::DataError; };

/// A pipeline stage was started before the stage that produces its input.
class MissingArtifactError : public DataError {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : DataError("missing artifact " + path + " (run `streamgaze " + producer + "` first)"),
        producer_(producer) {}
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

// oracle transport
class TransportError : public OracleError {
 public:
  TransportError(const std::string& what, bool transient) : OracleError(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};
class LookupError : public OracleError { using OracleError::OracleError; };
class InputError : public OracleError { using OracleError::OracleError; };

/// Raised when an evaluation would hand a model a frame from after its window.
class CausalityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace streamgaze
