#pragma once

// Probabilists' Hermite polynomials and Hermite expansions of square
// integrable functions of a standard Gaussian vector. The expansion
//   f = E f + sum_{|alpha| >= 1} a_alpha prod_i H_{alpha_i}(x_i),
//   a_alpha = E[f(X) prod_i H_{alpha_i}(X_i)] / alpha!
// is computed by Gaussian quadrature: panel Gauss-Legendre with explicit
// breakpoints in dimension 1 (so |x|, sign, indicators are integrated without
// smearing their kinks), tensor Gauss-Hermite for smooth multivariate f.
// The Hermite rank is the smallest |alpha| whose coefficient carries energy
// above a tolerance relative to the function's L2 scale.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bmb/common.hpp"
#include "bmb/quadrature.hpp"

namespace bmb {

// H_j(x): H_0 = 1, H_1 = x, H_{j+1} = x H_j - j H_{j-1}.
inline double hermite_eval(int j, double x) {
    if (j < 0) throw ConfigError("hermite_eval: negative order");
    double hm = 0.0, hc = 1.0;
    for (int k = 0; k < j; ++k) {
        const double hn = x * hc - static_cast<double>(k) * hm;
        hm = hc;
        hc = hn;
    }
    return hc;
}

// Fills out[0..jmax] with H_0(x)..H_jmax(x).
inline void hermite_values(int jmax, double x, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(jmax) + 1);
    out[0] = 1.0;
    if (jmax >= 1) out[1] = x;
    for (int k = 1; k < jmax; ++k)
        out[static_cast<std::size_t>(k) + 1] =
            x * out[static_cast<std::size_t>(k)] -
            static_cast<double>(k) * out[static_cast<std::size_t>(k) - 1];
}

// Monomial coefficients of H_j (exact integers, representable for j <= 20).
inline std::vector<double> hermite_monomial_coeffs(int j) {
    if (j < 0 || j > 24) throw ConfigError("hermite_monomial_coeffs: order out of range");
    std::vector<double> prev = {1.0};
    if (j == 0) return prev;
    std::vector<double> cur = {0.0, 1.0};
    for (int k = 1; k < j; ++k) {
        std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
        for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= static_cast<double>(k) * prev[i];
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline double multi_index_factorial(const std::vector<int>& alpha) {
    double f = 1.0;
    for (int a : alpha) f *= factorial(a);
    return f;
}

inline int multi_index_order(const std::vector<int>& alpha) {
    int s = 0;
    for (int a : alpha) s += a;
    return s;
}

// A function of a d-dimensional standard Gaussian argument, plus the metadata
// the quadrature needs (kink/jump locations, dimension 1 only).
struct FunctionSpec {
    std::string name;
    int dimension = 1;
    std::function<double(const std::vector<double>&)> fn;
    std::vector<double> breakpoints;
};

inline FunctionSpec fn_hermite(int q) {
    if (q < 1) throw ConfigError("fn_hermite: order must be >= 1");
    return {"hermite(" + std::to_string(q) + ")", 1,
            [q](const std::vector<double>& x) { return hermite_eval(q, x[0]); },
            {}};
}

inline FunctionSpec fn_abs() {
    return {"abs", 1, [](const std::vector<double>& x) { return std::abs(x[0]); }, {0.0}};
}

inline FunctionSpec fn_sign() {
    return {"sign", 1,
            [](const std::vector<double>& x) { return x[0] < 0.0 ? -1.0 : 1.0; },
            {0.0}};
}

inline FunctionSpec fn_indicator(double z) {
    return {"indicator(" + std::to_string(z) + ")", 1,
            [z](const std::vector<double>& x) { return x[0] <= z ? 1.0 : 0.0; },
            {z}};
}

// p(x) = coeffs[0] + coeffs[1] x + ...
inline FunctionSpec fn_polynomial(const std::vector<double>& coeffs) {
    if (coeffs.empty()) throw ConfigError("fn_polynomial: empty coefficient list");
    return {"polynomial", 1,
            [coeffs](const std::vector<double>& x) {
                double v = 0.0;
                for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x[0] + coeffs[i];
                return v;
            },
            {}};
}

struct ExpandOptions {
    int max_order = 20;               // highest chaos order kept
    int points = 24;                  // Gauss-Legendre points per panel (d = 1)
    double panel = 0.5;               // maximum panel width (d = 1)
    double halfwidth = 14.0;          // window [-W, W] (d = 1)
    int nodes_per_dim = 48;           // Gauss-Hermite nodes per axis (d >= 2)
    double rank_tolerance = 1e-9;     // on |a_alpha| sqrt(alpha!) relative to L2 scale
    double convergence_tolerance = 1e-8;  // refinement stability requirement
};

struct HermiteExpansion {
    std::string name;
    int dimension = 1;
    int max_order = 20;
    int rank = 0;
    double mean = 0.0;
    double total_energy = 0.0;  // Var f(X) by quadrature
    double energy_tail = 0.0;   // energy beyond max_order (>= 0)
    std::map<std::vector<int>, double> coeff;
    std::vector<double> energy_by_order;  // index m, m = 0..max_order
    std::function<double(const std::vector<double>&)> fn;
    std::vector<double> breakpoints;

    // d = 1 coefficient a_m.
    double coefficient(int m) const {
        auto it = coeff.find(std::vector<int>{m});
        return it == coeff.end() ? 0.0 : it->second;
    }

    double second_moment() const { return total_energy; }  // E[(f - Ef)^2]

    double energy_above(int n_trunc) const {
        double s = energy_tail;
        for (int m = n_trunc + 1; m <= max_order; ++m)
            s += energy_by_order[static_cast<std::size_t>(m)];
        return s;
    }

    // Chaos projection of order m evaluated at x.
    double eval_order(const std::vector<double>& x, int m) const {
        return eval_range(x, m, m);
    }

    // Centered truncation sum_{1 <= |alpha| <= N}.
    double eval_truncated(const std::vector<double>& x, int n_trunc) const {
        return eval_range(x, 1, n_trunc);
    }

    double eval_centered(const std::vector<double>& x) const { return fn(x) - mean; }

    double eval_range(const std::vector<double>& x, int mlo, int mhi) const {
        std::vector<std::vector<double>> h(static_cast<std::size_t>(dimension));
        for (int i = 0; i < dimension; ++i)
            hermite_values(max_order, x[static_cast<std::size_t>(i)],
                           h[static_cast<std::size_t>(i)]);
        long double acc = 0.0L;
        for (const auto& [alpha, a] : coeff) {
            const int m = multi_index_order(alpha);
            if (m < mlo || m > mhi) continue;
            double prod = a;
            for (int i = 0; i < dimension; ++i)
                prod *= h[static_cast<std::size_t>(i)]
                         [static_cast<std::size_t>(alpha[static_cast<std::size_t>(i)])];
            acc += prod;
        }
        return static_cast<double>(acc);
    }
};

// Callable for the order-m projection f_m.
inline std::function<double(const std::vector<double>&)> project(const HermiteExpansion& e,
                                                                 int m) {
    if (m < 0 || m > e.max_order) throw ConfigError("project: order outside expansion range");
    return [e, m](const std::vector<double>& x) { return e.eval_order(x, m); };
}

namespace detail {

// All multi-indices over `dim` variables with 1 <= |alpha| <= max_order,
// enumerated in deterministic lexicographic order.
inline void enumerate_multi_indices(int dim, int max_order,
                                    std::vector<std::vector<int>>& out) {
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == dim - 1) {
            for (int a = 0; a <= remaining; ++a) {
                alpha[static_cast<std::size_t>(pos)] = a;
                if (multi_index_order(alpha) >= 1) out.push_back(alpha);
            }
            alpha[static_cast<std::size_t>(pos)] = 0;
            return;
        }
        for (int a = 0; a <= remaining; ++a) {
            alpha[static_cast<std::size_t>(pos)] = a;
            self(self, pos + 1, remaining - a);
        }
        alpha[static_cast<std::size_t>(pos)] = 0;
    };
    rec(rec, 0, max_order);
}

struct RawExpansion {
    double mean = 0.0;
    std::map<std::vector<int>, double> coeff;
    double total_energy = 0.0;
};

inline RawExpansion expand_univariate(const FunctionSpec& spec, const ExpandOptions& opt,
                                      int points, double panel) {
    RawExpansion out;
    PiecewiseOptions popt{opt.halfwidth, panel, points};
    auto f1 = [&spec](double x) { return spec.fn(std::vector<double>{x}); };
    out.mean = integrate_gaussian(f1, spec.breakpoints, popt);
    for (int j = 1; j <= opt.max_order; ++j) {
        const double raw = integrate_gaussian(
            [&](double x) { return f1(x) * hermite_eval(j, x); }, spec.breakpoints, popt);
        out.coeff[std::vector<int>{j}] = raw / factorial(j);
    }
    const double mu = out.mean;
    out.total_energy = integrate_gaussian(
        [&](double x) { return sqr(f1(x) - mu); }, spec.breakpoints, popt);
    return out;
}

inline RawExpansion expand_multivariate(const FunctionSpec& spec, const ExpandOptions& opt,
                                        int nodes) {
    const int d = spec.dimension;
    std::vector<std::vector<int>> alphas;
    enumerate_multi_indices(d, opt.max_order, alphas);
    double total_points = 1.0;
    for (int i = 0; i < d; ++i) total_points *= nodes;
    if (total_points * static_cast<double>(alphas.size()) > 4e9)
        throw CapError("expand: tensor quadrature too large (reduce dimension, order or nodes)");

    const auto& gh = gauss_hermite(nodes);
    RawExpansion out;
    std::vector<long double> acc(alphas.size() + 2, 0.0L);  // [coeffs..., mean, energy2]
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<std::vector<double>> h(static_cast<std::size_t>(d));
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
            const auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
            x[static_cast<std::size_t>(i)] = gh.x[k];
            w *= gh.w[k];
            hermite_values(opt.max_order, gh.x[k], h[static_cast<std::size_t>(i)]);
        }
        const double fv = spec.fn(x);
        acc[alphas.size()] += w * fv;
        acc[alphas.size() + 1] += w * fv * fv;
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            double prod = 1.0;
            for (int i = 0; i < d; ++i)
                prod *= h[static_cast<std::size_t>(i)]
                         [static_cast<std::size_t>(alphas[a][static_cast<std::size_t>(i)])];
            acc[a] += w * fv * prod;
        }
        int pos = 0;
        while (pos < d && ++idx[static_cast<std::size_t>(pos)] == nodes) {
            idx[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == d) break;
    }
    out.mean = static_cast<double>(acc[alphas.size()]);
    out.total_energy = static_cast<double>(acc[alphas.size() + 1]) - sqr(out.mean);
    for (std::size_t a = 0; a < alphas.size(); ++a)
        out.coeff[alphas[a]] = static_cast<double>(acc[a]) / multi_index_factorial(alphas[a]);
    return out;
}

}  // namespace detail

inline HermiteExpansion expand(const FunctionSpec& spec, const ExpandOptions& opt = {}) {
    if (spec.dimension < 1 || spec.dimension > 8)
        throw ConfigError("expand: dimension must be in [1,8]");
    if (opt.max_order < 1 || opt.max_order > 20)
        throw ConfigError("expand: max_order must be in [1,20]");
    if (spec.dimension > 1 && !spec.breakpoints.empty())
        throw ConfigError("expand: breakpoints are supported in dimension 1 only");

    detail::RawExpansion coarse, fine;
    if (spec.dimension == 1) {
        coarse = detail::expand_univariate(spec, opt, opt.points, opt.panel);
        fine = detail::expand_univariate(spec, opt, 2 * opt.points, 0.5 * opt.panel);
    } else {
        coarse = detail::expand_multivariate(spec, opt, opt.nodes_per_dim);
        fine = detail::expand_multivariate(spec, opt, opt.nodes_per_dim + 16);
    }

    const double scale = std::max(1.0, std::sqrt(std::max(fine.total_energy, 0.0)));
    double drift = std::abs(fine.mean - coarse.mean) / scale;
    for (const auto& [alpha, a] : fine.coeff) {
        const double b = coarse.coeff.at(alpha);
        drift = std::max(drift, std::abs(a - b) * std::sqrt(multi_index_factorial(alpha)) / scale);
    }
    if (drift > opt.convergence_tolerance)
        throw ConfigError("expand: quadrature did not stabilize (drift " +
                          std::to_string(drift) + "); refine points/panel or declare breakpoints");

    HermiteExpansion e;
    e.name = spec.name;
    e.dimension = spec.dimension;
    e.max_order = opt.max_order;
    e.mean = fine.mean;
    e.total_energy = std::max(fine.total_energy, 0.0);
    e.coeff = std::move(fine.coeff);
    e.fn = spec.fn;
    e.breakpoints = spec.breakpoints;

    // Coefficients below the accumulated quadrature roundoff (~1e-14 relative
    // for the node counts used here) are numerical noise on an exact zero;
    // drop them so per-order consumers can skip orders with no component.
    for (auto it = e.coeff.begin(); it != e.coeff.end();) {
        if (std::abs(it->second) * std::sqrt(multi_index_factorial(it->first)) <=
            1e-13 * scale)
            it = e.coeff.erase(it);
        else
            ++it;
    }

    e.energy_by_order.assign(static_cast<std::size_t>(opt.max_order) + 1, 0.0);
    for (const auto& [alpha, a] : e.coeff) {
        const int m = multi_index_order(alpha);
        e.energy_by_order[static_cast<std::size_t>(m)] += a * a * multi_index_factorial(alpha);
    }
    double captured = 0.0;
    for (int m = 1; m <= opt.max_order; ++m)
        captured += e.energy_by_order[static_cast<std::size_t>(m)];
    e.energy_tail = std::max(0.0, e.total_energy - captured);

    e.rank = 0;
    for (int m = 1; m <= opt.max_order && e.rank == 0; ++m) {
        for (const auto& [alpha, a] : e.coeff) {
            if (multi_index_order(alpha) != m) continue;
            if (std::abs(a) * std::sqrt(multi_index_factorial(alpha)) >
                opt.rank_tolerance * scale) {
                e.rank = m;
                break;
            }
        }
    }
    if (e.rank == 0)
        throw ConfigError("expand: Hermite rank undetermined up to order " +
                          std::to_string(opt.max_order) +
                          " (all coefficients below tolerance)");
    return e;
}

}  // namespace bmb
