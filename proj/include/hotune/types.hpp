#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hotune {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Malformed or inconsistent configuration. `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Raised when a simulation state stops being finite.
class NumericAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A theorem hypothesis required by a certificate check does not hold.
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hotune
