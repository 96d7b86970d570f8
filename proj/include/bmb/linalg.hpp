#pragma once

// Dense lower Cholesky factorization, the only matrix decomposition the
// library needs (covariance factorizations at desk scale).

#include <cmath>
#include <vector>

#include "bmb/common.hpp"

namespace bmb {

// Row-major n x n symmetric positive definite input; returns the lower
// factor L (row-major, upper part zeroed) with A = L L^T.
inline std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n) {
    if (a.size() != n * n) throw ConfigError("cholesky: matrix size mismatch");
    if (n > 4096) throw CapError("cholesky: dimension exceeds 4096");
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            long double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                s -= static_cast<long double>(l[i * n + k]) * l[j * n + k];
            if (i == j) {
                if (!(s > 1e-12))
                    throw ConfigError("cholesky: matrix not positive definite "
                                      "(pivot " + std::to_string(static_cast<double>(s)) +
                                      " at index " + std::to_string(i) + ")");
                l[i * n + i] = std::sqrt(static_cast<double>(s));
            } else {
                l[i * n + j] = static_cast<double>(s) / l[j * n + j];
            }
        }
    }
    return l;
}

}  // namespace bmb
