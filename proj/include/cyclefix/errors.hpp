#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cyclefix {

/// Raised when a caller violates a precondition (dimension mismatch, bad
/// parameter, unconverged input where a converged one is required).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an internal solver fails to reach its tolerance or a state
/// becomes non-finite. Carries the last iterate and residual when known.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what,
                            std::vector<double> last_iterate = {},
                            double residual = 0.0)
        : std::runtime_error(what),
          last_iterate_(std::move(last_iterate)),
          residual_(residual) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> last_iterate_;
    double residual_;
};

} // namespace cyclefix
