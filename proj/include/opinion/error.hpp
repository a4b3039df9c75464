#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opinion {

// Base of every error the toolkit raises on purpose. The CLI maps the
// subclasses onto exit codes and the HTTP layer onto status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: unknown bias, broken invariant, bad flag value. Optionally
// names the offending fields so the API can list them back.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::vector<std::string> fields = {})
      : Error(what), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file content (strict-mode ingestion, corrupt corpus).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Endpoint unreachable or timed out.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Endpoint answered, but not with something we understand.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, int status = 0) : Error(what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class NoCorpusError : public Error {
 public:
  using Error::Error;
};

}  // namespace opinion
