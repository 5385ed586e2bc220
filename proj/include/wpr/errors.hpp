#pragma once

#include <stdexcept>
#include <string>

namespace wpr {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unusable input data: bad parameters, malformed configuration files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation that cannot produce a result at the requested point.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Wrong command, figure name or similar caller mistake.
class UsageError : public Error {
public:
    using Error::Error;
};

class NonPositiveParameter : public ConfigError {
public:
    explicit NonPositiveParameter(std::string field)
        : ConfigError("parameter '" + field + "' must be positive"), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ConfigSyntax : public ConfigError {
public:
    ConfigSyntax(int line, const std::string& what)
        : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class UnknownKey : public ConfigError {
public:
    UnknownKey(int line, const std::string& key)
        : ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'"),
          line_(line), key_(key) {}
    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

class MissingKey : public ConfigError {
public:
    explicit MissingKey(const std::string& key)
        : ConfigError("missing required key '" + key + "'"), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// The commutation charge C_sum * v_o exceeds what one half-cycle can deliver.
class CommutationImpossible : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The State-IV arccos argument left [-1, 1]: the diode never takes over.
class ArccosDomain : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DutyOutOfBounds : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyDutyRange : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Operating point at the top of the v_o(D) curve, where d v_o / dD = 0.
class ZeroGainOperatingPoint : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoCrossover : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonPeriodicWindow : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InvalidDuty : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GateOverrun : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Internal simulator defect: an impossible device-state transition.
class StateMachineViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnknownFigure : public UsageError {
public:
    explicit UnknownFigure(const std::string& id) : UsageError("unknown figure '" + id + "'") {}
};

class UnknownScenario : public UsageError {
public:
    explicit UnknownScenario(const std::string& id) : UsageError("unknown scenario '" + id + "'") {}
};

}  // namespace wpr
