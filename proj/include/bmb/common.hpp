#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmb {

inline constexpr const char* version = "1.0.0";

// Invalid model/config/precondition: the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A documented numerical cap was exceeded (tensor size, polynomial degree,
// matrix dimension): the CLI maps this to exit code 4.
struct CapError : std::runtime_error {
    explicit CapError(const std::string& what) : std::runtime_error(what) {}
};

// Value of a truncated series together with a certified bound on the
// discarded remainder.
struct ValueWithTail {
    double value = 0.0;
    double tail = 0.0;
};

// Blocked pairwise summation. Deterministic for a fixed input order and
// accurate to O(log n) rounding errors; used wherever long lag sums or
// replication averages feed quantities with tight tolerances.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 64) {
        long double acc = 0.0L;
        for (double x : xs) acc += x;
        return static_cast<double>(acc);
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& xs) {
    return pairwise_sum(std::span<const double>(xs.data(), xs.size()));
}

inline double sqr(double x) { return x * x; }

}  // namespace bmb
