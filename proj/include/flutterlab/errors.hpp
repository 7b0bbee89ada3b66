#pragma once

#include <stdexcept>
#include <string>

namespace flutterlab {

/// Configuration-level failure: malformed file, schema violation, or a
/// type invariant broken by the supplied values. `path()` names the
/// offending field (e.g. "wing.x0") when one is known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message, std::string path = {})
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// A computation could not proceed: no sign change in a bisection
/// bracket, a singular inertia matrix, or weight balancing that failed
/// to converge.
class ComputationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The integrator produced a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& message, long step, double t)
        : std::runtime_error(message + " (step " + std::to_string(step) +
                             ", t = " + std::to_string(t) + " s)"),
          step_(step), time_(t) {}

    long step() const { return step_; }
    double time() const { return time_; }

private:
    long step_;
    double time_;
};

}  // namespace flutterlab
