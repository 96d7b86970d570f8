#pragma once

// Combinatorial weights assembled in exact integer arithmetic and converted
// to double once, so that coefficients like l! C(m,l)^2 sqrt((2m-2l)!) carry
// no accumulated rounding from repeated floating multiplication.

#include <boost/multiprecision/cpp_int.hpp>

#include "bmb/common.hpp"

namespace bmb::exact {

using Int = boost::multiprecision::cpp_int;

inline Int factorial(int n) {
    if (n < 0) throw ConfigError("factorial of negative integer");
    Int f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline Int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    Int b = 1;
    for (int i = 0; i < k; ++i) {
        b *= (n - i);
        b /= (i + 1);
    }
    return b;
}

inline double to_double(const Int& v) { return v.convert_to<double>(); }

inline double sqrt_factorial(int n) {
    return std::sqrt(to_double(factorial(n)));
}

}  // namespace bmb::exact
