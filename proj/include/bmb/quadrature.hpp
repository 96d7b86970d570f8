#pragma once

// Gauss-Hermite rules for the standard normal weight (unit total mass) and
// Gauss-Legendre panels for piecewise integrands with kinks or jumps.
//
// Hermite nodes are found by interlaced bisection on the orthonormal
// three-term recurrence (no external eigensolver), polished by Newton steps;
// weights are the Christoffel numbers 1 / sum_j p_j(x)^2, which for the unit
// mass measure sum to exactly 1.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "bmb/common.hpp"
#include "bmb/gaussian.hpp"

namespace bmb {

struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

// Orthonormal Hermite values p_0..p_n at x (p_k = H_k / sqrt(k!)).
inline void orthonormal_hermite(int n, double x, std::vector<double>& p) {
    p.resize(static_cast<std::size_t>(n) + 1);
    p[0] = 1.0;
    if (n >= 1) p[1] = x;
    for (int k = 1; k < n; ++k)
        p[static_cast<std::size_t>(k) + 1] =
            (x * p[k] - std::sqrt(static_cast<double>(k)) * p[k - 1]) /
            std::sqrt(static_cast<double>(k) + 1.0);
}

inline double orthonormal_hermite_top(int n, double x) {
    double pm = 0.0, pc = 1.0;
    for (int k = 0; k < n; ++k) {
        const double pn = (x * pc - std::sqrt(static_cast<double>(k)) * pm) /
                          std::sqrt(static_cast<double>(k) + 1.0);
        pm = pc;
        pc = pn;
    }
    return pc;
}

}  // namespace detail

// n-point Gauss-Hermite rule: integrates f against the standard normal
// density exactly for polynomials of degree <= 2n-1. Cached per n.
inline const QuadratureRule& gauss_hermite(int n) {
    if (n < 1 || n > 512) throw ConfigError("gauss_hermite: order must be in [1,512]");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    std::vector<double> roots = {0.0};  // roots of p_1
    for (int k = 1; k < n; ++k) {
        // Roots of p_{k+1} interlace those of p_k, extended by an outer bound.
        const double bound = 2.0 * std::sqrt(static_cast<double>(k) + 1.0) + 2.0;
        std::vector<double> brackets;
        brackets.push_back(-bound);
        brackets.insert(brackets.end(), roots.begin(), roots.end());
        brackets.push_back(bound);
        std::vector<double> next(static_cast<std::size_t>(k) + 1);
        for (int i = 0; i <= k; ++i) {
            double lo = brackets[static_cast<std::size_t>(i)];
            double hi = brackets[static_cast<std::size_t>(i) + 1];
            double flo = detail::orthonormal_hermite_top(k + 1, lo);
            for (int it = 0; it < 120 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = detail::orthonormal_hermite_top(k + 1, mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            double x = 0.5 * (lo + hi);
            // Newton polish: p'_{m}(x) = sqrt(m) p_{m-1}(x).
            for (int it = 0; it < 3; ++it) {
                const double f = detail::orthonormal_hermite_top(k + 1, x);
                const double df = std::sqrt(static_cast<double>(k) + 1.0) *
                                  detail::orthonormal_hermite_top(k, x);
                if (df != 0.0) x -= f / df;
            }
            next[static_cast<std::size_t>(i)] = x;
        }
        roots = std::move(next);
    }
    // Enforce exact symmetry of the node set.
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
        const double v = 0.5 * (roots[static_cast<std::size_t>(i)] -
                                roots[static_cast<std::size_t>(j)]);
        roots[static_cast<std::size_t>(i)] = v;
        roots[static_cast<std::size_t>(j)] = -v;
    }
    if (n % 2 == 1) roots[static_cast<std::size_t>(n) / 2] = 0.0;

    QuadratureRule rule;
    rule.x = roots;
    rule.w.resize(static_cast<std::size_t>(n));
    std::vector<double> p;
    for (int i = 0; i < n; ++i) {
        detail::orthonormal_hermite(n - 1, rule.x[static_cast<std::size_t>(i)], p);
        double s = 0.0;
        for (double v : p) s += v * v;
        rule.w[static_cast<std::size_t>(i)] = 1.0 / s;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

// n-point Gauss-Legendre rule on [-1,1]. Cached per n.
inline const QuadratureRule& gauss_legendre(int n) {
    if (n < 1 || n > 256) throw ConfigError("gauss_legendre: order must be in [1,256]");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    QuadratureRule rule;
    rule.x.resize(static_cast<std::size_t>(n));
    rule.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[static_cast<std::size_t>(i)] = x;
        rule.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Symmetrize (the cosine seeds enumerate roots descending).
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
        const double v = 0.5 * (rule.x[static_cast<std::size_t>(i)] -
                                rule.x[static_cast<std::size_t>(j)]);
        rule.x[static_cast<std::size_t>(i)] = v;
        rule.x[static_cast<std::size_t>(j)] = -v;
        const double wv = 0.5 * (rule.w[static_cast<std::size_t>(i)] +
                                 rule.w[static_cast<std::size_t>(j)]);
        rule.w[static_cast<std::size_t>(i)] = wv;
        rule.w[static_cast<std::size_t>(j)] = wv;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

struct PiecewiseOptions {
    double halfwidth = 14.0;  // integration window [-W, W]; phi(14) ~ 5e-44
    double max_panel = 0.5;
    int points = 24;
};

// Integral of f against the standard normal density, splitting panels at the
// given breakpoints so kinks and jumps never sit inside a panel.
template <typename F>
double integrate_gaussian(F&& f, const std::vector<double>& breakpoints,
                          const PiecewiseOptions& opt = {}) {
    std::vector<double> cuts;
    cuts.push_back(-opt.halfwidth);
    for (double b : breakpoints)
        if (std::abs(b) < opt.halfwidth) cuts.push_back(b);
    cuts.push_back(opt.halfwidth);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const QuadratureRule& gl = gauss_legendre(opt.points);
    std::vector<double> panel_sums;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double lo = cuts[s], hi = cuts[s + 1];
        const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / opt.max_panel)));
        const double step = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double a = lo + p * step;
            const double mid = a + 0.5 * step, half = 0.5 * step;
            long double acc = 0.0L;
            for (int i = 0; i < opt.points; ++i) {
                const double t = mid + half * gl.x[static_cast<std::size_t>(i)];
                acc += static_cast<long double>(gl.w[static_cast<std::size_t>(i)]) *
                       f(t) * normal_pdf(t);
            }
            panel_sums.push_back(static_cast<double>(acc) * half);
        }
    }
    return pairwise_sum(panel_sums);
}

}  // namespace bmb
