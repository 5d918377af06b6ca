#pragma once

#include <stdexcept>
#include <string>

namespace funnel {

/// Physical parameter outside its admissible domain.
class ParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Input that is not a solution of the problem it claims to solve.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Integrator or experiment settings that violate a precondition.
class ConfigurationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or incomplete parameter file; `key()` names the offending entry.
class ConfigFileError : public std::runtime_error {
  public:
    ConfigFileError(std::string key, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

/// Non-finite state encountered during integration.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(double last_valid_time, const std::string& what)
        : std::runtime_error(what), last_valid_time_(last_valid_time) {}
    double last_valid_time() const noexcept { return last_valid_time_; }

  private:
    double last_valid_time_;
};

/// Requested sample, frame or frequency lies outside the available data.
class RangeError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Data that cannot be processed as given (e.g. non-uniform sampling).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace funnel
