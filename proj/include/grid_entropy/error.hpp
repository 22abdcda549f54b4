#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace grid_entropy {

/// Raised when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an exhaustive enumeration would exceed the configured path budget.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(double required, std::uint64_t budget)
        : std::runtime_error("path budget exceeded: " + format_count(required) + " paths required, budget " +
                             std::to_string(budget)),
          required_(required), budget_(budget) {}

    /// Exact count when it fits in a double's integer range, otherwise its rounded value.
    double required() const noexcept { return required_; }
    std::uint64_t budget() const noexcept { return budget_; }

private:
    static std::string format_count(double v) {
        if (v < 9.0e15) return std::to_string(static_cast<std::uint64_t>(v));
        return std::to_string(v);
    }

    double required_;
    std::uint64_t budget_;
};

}  // namespace grid_entropy
