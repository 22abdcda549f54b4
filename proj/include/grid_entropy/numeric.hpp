#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace grid_entropy {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based uniform stream: draw k of stream `key` is a pure function of (key, k).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(mix64(key ^ 0xA4093822299F31D0ULL)) {}
    double uniform(std::uint64_t counter) const { return static_cast<double>(mix64(key_ + mix64(counter)) >> 11) * 0x1.0p-53; }
    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

/// Streaming log-sum-exp. Keeps a running maximum so no term overflows.
class LogSumExp {
public:
    void add(double log_term) {
        if (log_term == kNegInf) return;
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }

    /// Associative merge of two partial accumulators.
    void merge(const LogSumExp& other) {
        if (other.max_ == kNegInf) return;
        if (max_ == kNegInf) {
            *this = other;
            return;
        }
        if (other.max_ <= max_) {
            sum_ += other.sum_ * std::exp(other.max_ - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
            max_ = other.max_;
        }
    }

    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }
    bool empty() const { return max_ == kNegInf; }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// Least-squares fit of y = intercept + slope * x.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_abs_residual = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fit raw(n) = a + b/n and return the fit; `a` is the n -> infinity extrapolation.
LinearFit fit_inverse_n(std::span<const double> n, std::span<const double> raw);

}  // namespace grid_entropy
