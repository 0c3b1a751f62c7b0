#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace statefactory {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed structured document, usually a backend response. Callers decide
// whether to re-prompt or skip.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Network, HTTP or protocol failure talking to a remote model. Retriable.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Missing backend configuration (endpoint/model) for a method that needs one.
class BackendConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyTextError : public Error {
 public:
  EmptyTextError() : Error("text is empty after normalization") {}
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class EmptyCandidatesError : public Error {
 public:
  EmptyCandidatesError() : Error("candidate list is empty") {}
};

class EmptyGoalError : public Error {
 public:
  EmptyGoalError() : Error("goal sentence list is empty") {}
};

class EmptyExpertError : public Error {
 public:
  EmptyExpertError() : Error("expert step list is empty") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("series lengths differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class TooShort : public Error {
 public:
  explicit TooShort(std::size_t n)
      : Error("series needs at least 2 points, got " + std::to_string(n)) {}
};

class IllegalAction : public Error {
 public:
  using Error::Error;
};

// Line-oriented parse failure. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// A loaded record violates a type invariant. Names the offending record.
class InvariantError : public Error {
 public:
  InvariantError(std::string id, const std::string& what)
      : Error(id + ": " + what), id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// Predictions and dataset disagree. Names the first offending trajectory.
class MisalignmentError : public Error {
 public:
  MisalignmentError(std::string id, const std::string& what)
      : Error(id + ": " + what), id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace statefactory
