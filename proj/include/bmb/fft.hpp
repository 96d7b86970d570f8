#pragma once

// Iterative radix-2 complex FFT, self-contained for bit-stable results:
// the same input always produces the same output bits regardless of thread
// count or previous calls, which the reproducibility guarantees rely on.

#include <complex>
#include <numbers>
#include <vector>

#include "bmb/common.hpp"

namespace bmb {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place forward DFT, X[k] = sum_j x[j] exp(-2 pi i j k / n).
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw ConfigError("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        // Twiddles from cos/sin of exact multiples: no recurrence drift.
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const double a_k = ang * static_cast<double>(k);
                const std::complex<double> w(std::cos(a_k), std::sin(a_k));
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

}  // namespace bmb
