#pragma once

#include <stdexcept>
#include <string>

namespace qnngp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Index outside the valid layer/qubit/parameter range.
class IndexError : public Error {
  public:
    using Error::Error;
};

/// A built-in circuit family was asked for an incompatible (m, L).
class ConstructionError : public Error {
  public:
    using Error::Error;
};

/// Invalid argument to an operation (e.g. zero shots).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Local Hilbert space larger than the simulator cap.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// A kernel block is too ill-conditioned to invert.
class ConditioningError : public Error {
  public:
    ConditioningError(const std::string &what, double condition_number)
        : Error(what), condition_number_(condition_number) {}
    [[nodiscard]] double condition_number() const noexcept { return condition_number_; }

  private:
    double condition_number_;
};

/// NaN/inf produced during training, or an integrator step rejected.
class NumericFault : public Error {
  public:
    NumericFault(const std::string &what, long step) : Error(what), step_(step) {}
    [[nodiscard]] long step() const noexcept { return step_; }

  private:
    long step_;
};

/// Malformed circuit/config/data file.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// A referenced file does not exist or cannot be opened.
class MissingFileError : public ParseError {
  public:
    explicit MissingFileError(const std::string &path)
        : ParseError("cannot open file: " + path), path_(path) {}
    [[nodiscard]] const std::string &path() const noexcept { return path_; }

  private:
    std::string path_;
};

} // namespace qnngp
