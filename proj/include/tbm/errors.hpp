#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbm {

/// Base class for all data and validation errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("no messages survive preprocessing") {}
};

class InvalidFraction : public Error {
 public:
  explicit InvalidFraction(double f)
      : Error("holdout fraction must lie in (0, 1), got " + std::to_string(f)) {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InvalidParam : public Error {
 public:
  using Error::Error;
};

class InconsistentState : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

class PairNotHeldOut : public Error {
 public:
  PairNotHeldOut(int s, int r)
      : Error("pair (" + std::to_string(s) + ", " + std::to_string(r) +
              ") was observed during training") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

}  // namespace tbm
