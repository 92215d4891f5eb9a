#ifndef LSM_COMMON_HPP
#define LSM_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsm {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Base class for all library errors. Subclasses map onto CLI exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied parameter (non-positive length, eta out of range, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Structurally invalid input data (atom on a wall, duplicate atoms, ...).
struct ValidationError : Error {
    using Error::Error;
};

// An operation was asked to evaluate outside its mathematical domain.
struct DomainError : Error {
    using Error::Error;
};

// A spectrum was truncated too low for the requested computation.
struct InsufficientSpectrumError : Error {
    using Error::Error;
};

// A safety cap (level count, iteration budget) was exceeded.
struct ResourceLimitError : Error {
    using Error::Error;
};

// A fit could not be performed on the given data.
struct FitError : Error {
    using Error::Error;
};

// Deterministic pairwise summation. Used for every ensemble reduction so
// results do not depend on thread count or scheduling.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& x) {
    return pairwise_sum(std::span<const double>(x));
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Sample mean and standard error of the mean.
inline MeanStderr mean_stderr(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {0.0, 0.0};
    const double mean = pairwise_sum(x) / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

// Standard error of an empirical frequency p over n trials.
inline double binomial_stderr(double p, std::size_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

inline double median_of_sorted(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return x[n / 2];
    return 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace lsm

#endif  // LSM_COMMON_HPP
