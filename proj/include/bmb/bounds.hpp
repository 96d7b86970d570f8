#pragma once

// Explicit finite-sample distance bounds for normalized partial sums of
// subordinated stationary Gaussian sequences. Assembles the dependence
// coefficients of the covariance module into the five bound terms (boundary
// window, energy tail, and three contraction-driven terms), evaluates the
// final bounds for smooth, Lipschitz, and Kolmogorov test classes with a
// minimized chaos cutoff, provides the simplified single-Hermite-polynomial
// variant, the Stein equation solution, predicted convergence-rate exponents
// for regularly varying covariances, and a window-decay diagnostic.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bmb/covariance.hpp"
#include "bmb/exact.hpp"
#include "bmb/gaussian.hpp"

namespace bmb {

enum class BoundKind { c2, lipschitz, kolmogorov };

inline const char* bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::c2: return "C2";
        case BoundKind::lipschitz: return "LIPSCHITZ";
        default: return "KOLMOGOROV";
    }
}

inline BoundKind parse_bound_kind(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "C2") return BoundKind::c2;
    if (s == "LIPSCHITZ" || s == "LIP" || s == "W") return BoundKind::lipschitz;
    if (s == "KOLMOGOROV" || s == "KOL") return BoundKind::kolmogorov;
    throw ConfigError("unknown bound kind: " + s + " (expected C2, LIPSCHITZ, or KOLMOGOROV)");
}

struct ATerms {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double a4 = 0.0;
    double a5 = 0.0;
};

// Everything a bound evaluation produces: the inputs echo, the per-cutoff
// term table, and the three final bounds (each per unit test-function norm).
struct BoundReport {
    std::string model_id;
    std::string expansion_id;
    BoundKind kind = BoundKind::c2;
    long n = 0;
    int q = 1;        // Hermite rank of the subordinating function
    int dimension = 1;
    int order_cap = 0;  // largest chaos cutoff searched
    int n_star = 0;     // minimizing cutoff for the requested kind
    long max_lag = 0;
    long dependence_length = 0;  // K: window beyond which theta(j) <= 1/d
    double theta_total = 0.0;    // sum_j theta(j)^q, certified tail included
    double fn_second_moment = 0.0;          // E[f^2]
    double two_k_plus_theta = 0.0;          // 2K + d^q * theta_total
    double sigma2 = 0.0;                    // limit variance, central value
    double sigma2_tail = 0.0;               // certified remainder estimate
    double sigma2_lower = 0.0;              // provable lower bound (denominators)
    std::map<int, double> sigma2_by_order;  // m -> per-order limit variance
    std::map<std::pair<int, int>, double> gamma;  // (m,e) -> contraction scale
    // Boundary/window term. The simplified single-polynomial variant keeps an
    // extra factor theta_total on this term; the general form does not. Both
    // are always reported; `a1` is the one the bounds below actually use.
    double a1 = 0.0;
    double a1_general_form = 0.0;
    std::map<int, double> a2, a3, a4, a5;  // chaos cutoff N -> term value
    double bound_c2 = 0.0;         // per unit bound on the second derivative
    double bound_lipschitz = 0.0;  // per unit Lipschitz constant
    double bound_kolmogorov = 0.0;
    double bound = 0.0;  // the value for the requested kind
    bool degenerate = false;  // limit variance not provably positive
    std::vector<std::string> tail_flags;
};

namespace detail {

// S_e(n) = theta(0)^e + 2 sum_{j=1}^n theta(j)^e for every e = 1..e_max in a
// single pass over the lags. Index e of the result holds S_e(n); index 0 is
// unused.
inline std::vector<double> theta_window_sum_table(const CovarianceModel& model,
                                                  int e_max, long n) {
    if (e_max < 1) return {0.0};
    if (n < 0 || n > 100000000L)
        throw ConfigError("theta window table: window must be in [0, 1e8]");
    const long stop = model.finite_support() ? std::min(n, model.support_length()) : n;
    std::vector<long double> acc(static_cast<std::size_t>(e_max) + 1, 0.0L);
    for (long j = 1; j <= stop; ++j) {
        const long double t = model.theta(j);
        long double p = 1.0L;
        for (int e = 1; e <= e_max; ++e) {
            p *= t;
            acc[static_cast<std::size_t>(e)] += p;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(e_max) + 1, 0.0);
    const long double t0 = model.theta(0);
    long double p0 = 1.0L;
    for (int e = 1; e <= e_max; ++e) {
        p0 *= t0;
        out[static_cast<std::size_t>(e)] =
            static_cast<double>(p0 + 2.0L * acc[static_cast<std::size_t>(e)]);
    }
    return out;
}

// Boundary-window sums of the rank-q power sequence around the cutoff n:
// first = sum_{|j|<=n} theta(j)^q |j|/n (exact), second = sum_{|j|>n}
// theta(j)^q (certified over-estimate).
inline std::pair<double, double> theta_boundary_terms(const CovarianceModel& model,
                                                      int q, long n) {
    const long stop = model.finite_support() ? std::min(n, model.support_length()) : n;
    long double w = 0.0L;
    for (long j = 1; j <= stop; ++j)
        w += static_cast<long double>(j) *
             std::pow(static_cast<long double>(model.theta(j)), q);
    const double weighted = static_cast<double>(2.0L * w / static_cast<long double>(n));
    double beyond = 0.0;
    if (!(model.finite_support() && model.support_length() <= n))
        beyond = 2.0 * model.theta_power_tail(q, std::max<long>(n, 2));
    return {weighted, beyond};
}

// Exact combinatorial weights of the three contraction-driven terms,
// assembled in big-integer arithmetic before any floating conversion.
inline double contraction_weight_single(int m, int l) {
    const exact::Int w = exact::Int(l) * exact::factorial(l) * exact::binomial(m, l) *
                         exact::binomial(m, l);
    return exact::to_double(w) * exact::sqrt_factorial(2 * (m - l));
}

inline double contraction_weight_cross(int p, int s, int d) {
    return std::pow(static_cast<double>(d), 0.5 * s) *
           (exact::sqrt_factorial(p) / exact::sqrt_factorial(s)) *
           (static_cast<double>(p + s) / static_cast<double>(p)) *
           exact::to_double(exact::binomial(s - 1, p - 1)) * exact::sqrt_factorial(s - p);
}

inline double contraction_weight_mixed(int p, int s, int l) {
    const exact::Int w =
        exact::factorial(l - 1) * exact::binomial(p - 1, l - 1) * exact::binomial(s - 1, l - 1);
    return static_cast<double>(p + s) * exact::to_double(w) *
           exact::sqrt_factorial(p + s - 2 * l);
}

}  // namespace detail

// gamma_{n,m,e} = sqrt(2 Theta_q S_e(n) S_{m-e}(n) / n), with Theta_q the
// certified rank-q power sum of the dependence coefficients.
inline double gamma_coefficient(const CovarianceModel& model, int q, int m, int e,
                                long n, long max_lag = 1000000) {
    if (m < q) throw ConfigError("gamma_coefficient: order below the rank");
    const auto dep = theta_sequence(model, q, max_lag);
    return gamma_factor(model, dep.theta_sum, n, m, e);
}

namespace detail {

struct BoundCore {
    long n = 0;
    int d = 1;
    int q = 1;
    int cap = 0;
    long max_lag = 0;
    double ef2 = 0.0;
    DependenceCoefficients dep;
    double two_k_plus_theta = 0.0;
    std::map<std::pair<int, int>, double> gamma;
    std::map<int, double> a3, a4, a5;  // cutoff N -> term
    double a1_general = 0.0;
};

// Shared assembly: dependence coefficients, window sums, the contraction
// scale table, the boundary term, and the three contraction-driven terms
// accumulated per chaos cutoff.
inline BoundCore assemble_bound_core(const CovarianceModel& model, int q, int cap,
                                     long n, long max_lag, double ef2) {
    if (q < 1) throw ConfigError("bound assembly: rank must be >= 1");
    if (cap < q) throw ConfigError("bound assembly: order cap below the rank");
    if (!model.certified_summable(q))
        throw ConfigError("bound assembly: the rank-" + std::to_string(q) +
                          " power sum of the dependence coefficients is not certified "
                          "finite for " + model.label() + "; the summability condition fails");
    if (n < 2 || n > 100000000L)
        throw ConfigError("bound assembly: n must be in [2, 1e8]");
    if (!(ef2 > 0.0)) throw ConfigError("bound assembly: E[f^2] must be positive");

    BoundCore core;
    core.n = n;
    core.d = model.dim();
    core.q = q;
    core.cap = cap;
    core.max_lag = max_lag;
    core.ef2 = ef2;
    core.dep = theta_sequence(model, q, max_lag);
    if (n <= core.dep.dependence_length)
        throw ConfigError("bound assembly: n must exceed the dependence length K = " +
                          std::to_string(core.dep.dependence_length));
    const double dq = std::pow(static_cast<double>(core.d), q);
    core.two_k_plus_theta =
        2.0 * static_cast<double>(core.dep.dependence_length) + dq * core.dep.theta_sum;

    const auto window = theta_window_sum_table(model, std::max(cap - 1, 1), n);
    for (int m = q; m <= cap; ++m)
        for (int e = 1; e <= m - 1; ++e)
            core.gamma[{m, e}] = std::sqrt(
                2.0 * core.dep.theta_sum * window[static_cast<std::size_t>(e)] *
                window[static_cast<std::size_t>(m - e)] / static_cast<double>(n));

    const auto [weighted, beyond] = theta_boundary_terms(model, q, n);
    const double k_len = static_cast<double>(core.dep.dependence_length);
    core.a1_general =
        0.5 * ef2 * (2.0 * k_len * k_len / static_cast<double>(n) + dq * (weighted + beyond));

    long double acc3 = 0.0L, acc4 = 0.0L, acc5 = 0.0L;
    for (int N = q; N <= cap; ++N) {
        long double inner3 = 0.0L;
        for (int l = 1; l <= N - 1; ++l)
            inner3 += contraction_weight_single(N, l) * core.gamma[{N, l}];
        acc3 += std::pow(static_cast<double>(core.d), N) /
                (static_cast<double>(N) * factorial(N)) * inner3;
        for (int p = q; p <= N - 1; ++p) {
            acc4 += contraction_weight_cross(p, N, core.d) *
                    std::sqrt(core.gamma[{N, N - p}]);
            long double inner5 = 0.0L;
            for (int l = 1; l <= p - 1; ++l)
                inner5 += contraction_weight_mixed(p, N, l) *
                          (std::pow(static_cast<double>(core.d), N) / factorial(N) *
                               core.gamma[{N, N - l}] +
                           std::pow(static_cast<double>(core.d), p) / factorial(p) *
                               core.gamma[{p, p - l}]);
            acc5 += inner5;
        }
        core.a3[N] = 0.5 * ef2 * static_cast<double>(acc3);
        core.a4[N] = 0.5 * ef2 * std::sqrt(core.two_k_plus_theta) * static_cast<double>(acc4);
        core.a5[N] = ef2 / (2.0 * std::numbers::sqrt2) * static_cast<double>(acc5);
    }
    return core;
}

}  // namespace detail

// General bound for an expanded subordinating function: evaluates the term
// table over chaos cutoffs N in [rank, order_cap], minimizes over N, and
// reports all three bound kinds. Requires n above the dependence length and
// a certified-summable rank-q dependence sequence.
inline BoundReport bound_theorem(const CovarianceModel& model, const HermiteExpansion& e,
                                 long n, BoundKind kind, long max_lag = 1000000,
                                 int order_cap = 20) {
    if (e.dimension != model.dim())
        throw ConfigError("bound_theorem: expansion and model dimensions differ");
    const int q = e.rank;
    const int cap = std::min(order_cap, e.max_order);
    const double ef2 = e.second_moment();
    auto core = detail::assemble_bound_core(model, q, cap, n, max_lag, ef2);

    BoundReport rep;
    rep.model_id = model.label();
    rep.expansion_id = e.name;
    rep.kind = kind;
    rep.n = n;
    rep.q = q;
    rep.dimension = core.d;
    rep.order_cap = cap;
    rep.max_lag = max_lag;
    rep.dependence_length = core.dep.dependence_length;
    rep.theta_total = core.dep.theta_sum;
    rep.fn_second_moment = ef2;
    rep.two_k_plus_theta = core.two_k_plus_theta;
    rep.gamma = std::move(core.gamma);
    rep.a1 = core.a1_general;
    rep.a1_general_form = core.a1_general;
    rep.a3 = core.a3;
    rep.a4 = core.a4;
    rep.a5 = core.a5;
    if (core.dep.tail > 0.0)
        rep.tail_flags.push_back("dependence power sum includes certified tail " +
                                 std::to_string(core.dep.tail));

    const auto var = sigma2_total(model, e, cap, max_lag);
    rep.sigma2 = var.total;
    rep.sigma2_tail = var.tail_estimate;
    double sigma2_lower = 0.0;
    std::vector<double> partial_lower;  // provable lower bound on sum_{m<=N} sigma_m^2
    for (std::size_t i = 0; i < var.orders.size(); ++i) {
        const int m = q + static_cast<int>(i);
        rep.sigma2_by_order[m] = var.orders[i].value;
        sigma2_lower += std::max(var.orders[i].value - var.orders[i].tail, 0.0);
        partial_lower.push_back(sigma2_lower);
    }
    rep.sigma2_lower = sigma2_lower;
    if (var.energy_above > 0.0)
        rep.tail_flags.push_back("expansion energy beyond order cap: " +
                                 std::to_string(var.energy_above));

    const double inf = std::numeric_limits<double>::infinity();
    const double sigma_lower = std::sqrt(sigma2_lower);
    const double bracket =
        (sigma_lower > 0.0 ? 1.0 / sigma_lower : inf) +
        1.0 / std::sqrt(core.two_k_plus_theta * ef2);

    double best_c2 = inf, best_lip = inf;
    int star_c2 = q, star_lip = q;
    for (int N = q; N <= cap; ++N) {
        const double a2 = 2.0 * core.two_k_plus_theta *
                          std::sqrt(ef2 * std::max(e.energy_above(N), 0.0));
        rep.a2[N] = a2;
        const double sum345 = rep.a3[N] + rep.a4[N] + rep.a5[N];
        const double inner_c2 = a2 + sum345;
        if (inner_c2 < best_c2) {
            best_c2 = inner_c2;
            star_c2 = N;
        }
        const double part = partial_lower[static_cast<std::size_t>(N - q)];
        const double inner_lip =
            (part > 0.0 && sigma_lower > 0.0)
                ? a2 * bracket + 4.0 * (rep.a1 + sum345) / std::sqrt(part)
                : inf;
        if (inner_lip < best_lip) {
            best_lip = inner_lip;
            star_lip = N;
        }
    }

    rep.bound_c2 = rep.a1 + best_c2;
    if (sigma_lower > 0.0 && std::isfinite(best_lip)) {
        rep.bound_lipschitz = 0.5 * best_lip;
        rep.bound_kolmogorov = std::numbers::sqrt2 / sigma_lower * std::sqrt(best_lip);
    } else {
        rep.degenerate = true;
        rep.bound_lipschitz = inf;
        rep.bound_kolmogorov = inf;
        rep.tail_flags.push_back(
            "limit variance is not provably positive; Lipschitz and Kolmogorov "
            "bounds are infinite");
    }
    rep.n_star = (kind == BoundKind::c2) ? star_c2 : star_lip;
    switch (kind) {
        case BoundKind::c2: rep.bound = rep.bound_c2; break;
        case BoundKind::lipschitz: rep.bound = rep.bound_lipschitz; break;
        case BoundKind::kolmogorov: rep.bound = rep.bound_kolmogorov; break;
    }
    return rep;
}

// The five bound terms at a fixed chaos cutoff N.
inline ATerms a_terms(const CovarianceModel& model, const HermiteExpansion& e, long n,
                      int cutoff, long max_lag = 1000000) {
    if (cutoff < e.rank || cutoff > e.max_order)
        throw ConfigError("a_terms: cutoff must lie in [rank, max_order]");
    const auto rep = bound_theorem(model, e, n, BoundKind::c2, max_lag, cutoff);
    ATerms out;
    out.a1 = rep.a1;
    out.a2 = rep.a2.at(cutoff);
    out.a3 = rep.a3.at(cutoff);
    out.a4 = rep.a4.at(cutoff);
    out.a5 = rep.a5.at(cutoff);
    return out;
}

// Simplified bounds for a pure Hermite polynomial H_q of a scalar sequence:
// closed-form energies, a single chaos order, and the printed simplified
// window term (which carries an extra factor theta_total relative to the
// general form; both are reported).
inline BoundReport bound_hermite_case(const CovarianceModel& model, int q, long n,
                                      BoundKind kind, long max_lag = 1000000) {
    if (model.dim() != 1)
        throw ConfigError("bound_hermite_case: requires a one-dimensional model");
    if (q < 1 || q > 24) throw ConfigError("bound_hermite_case: rank must be in [1, 24]");
    const double ef2 = factorial(q);
    auto core = detail::assemble_bound_core(model, q, q, n, max_lag, ef2);

    BoundReport rep;
    rep.model_id = model.label();
    rep.expansion_id = "hermite(" + std::to_string(q) + ")";
    rep.kind = kind;
    rep.n = n;
    rep.q = q;
    rep.dimension = 1;
    rep.order_cap = q;
    rep.n_star = q;
    rep.max_lag = max_lag;
    rep.dependence_length = core.dep.dependence_length;
    rep.theta_total = core.dep.theta_sum;
    rep.fn_second_moment = ef2;
    rep.two_k_plus_theta = core.two_k_plus_theta;
    rep.gamma = std::move(core.gamma);
    rep.a1_general_form = core.a1_general;
    // Simplified window term: (q!/2) theta_total (weighted window + tail).
    const auto [weighted, beyond] = detail::theta_boundary_terms(model, q, n);
    rep.a1 = 0.5 * ef2 * core.dep.theta_sum * (weighted + beyond);
    rep.a2[q] = 0.0;
    rep.a3[q] = core.a3.at(q);
    rep.a4[q] = 0.0;
    rep.a5[q] = 0.0;
    if (core.dep.tail > 0.0)
        rep.tail_flags.push_back("dependence power sum includes certified tail " +
                                 std::to_string(core.dep.tail));

    // Limit variance q! sum_j r(j)^q with a certified remainder.
    const long J = model.finite_support() ? std::min(max_lag, model.support_length())
                                          : max_lag;
    long double lag_sum = 0.0L;
    for (long k = 1; k <= J; ++k) {
        long double p = 1.0L;
        const long double r = model.r1(k);
        for (int i = 0; i < q; ++i) p *= r;
        lag_sum += p;
    }
    rep.sigma2 = ef2 * static_cast<double>(1.0L + 2.0L * lag_sum);
    rep.sigma2_tail = (model.finite_support() && J >= model.support_length())
                          ? 0.0
                          : ef2 * 2.0 * model.theta_power_tail(q, std::max<long>(J, 2));
    rep.sigma2_by_order[q] = rep.sigma2;
    rep.sigma2_lower = std::max(rep.sigma2 - rep.sigma2_tail, 0.0);

    const double inf = std::numeric_limits<double>::infinity();
    const double core_sum = rep.a1 + rep.a3.at(q);
    rep.bound_c2 = core_sum;
    const double sigma_lower = std::sqrt(rep.sigma2_lower);
    if (sigma_lower > 0.0) {
        rep.bound_lipschitz = 2.0 * core_sum / sigma_lower;
        rep.bound_kolmogorov = 2.0 * core_sum / sigma_lower;
    } else {
        rep.degenerate = true;
        rep.bound_lipschitz = inf;
        rep.bound_kolmogorov = inf;
        rep.tail_flags.push_back(
            "limit variance is not provably positive; Lipschitz and Kolmogorov "
            "bounds are infinite");
    }
    switch (kind) {
        case BoundKind::c2: rep.bound = rep.bound_c2; break;
        case BoundKind::lipschitz: rep.bound = rep.bound_lipschitz; break;
        case BoundKind::kolmogorov: rep.bound = rep.bound_kolmogorov; break;
    }
    return rep;
}

struct SteinSolution {
    double value = 0.0;
    double derivative = 0.0;
};

// Solution of the unit-normal Stein equation
//   ind(x <= z) - Phi(z) = s'(x) - x s(x):
// s_z(x) = sqrt(2 pi) e^{x^2/2} Phi(min(x,z)) (1 - Phi(max(x,z))), with the
// derivative recovered from the equation. The scaled-tail helper keeps the
// product stable for |x| up to about 30.
inline SteinSolution stein_solution(double z, double x) {
    static const double root_two_pi = std::sqrt(2.0 * std::numbers::pi);
    SteinSolution out;
    if (x <= z)
        out.value = root_two_pi * exp_half_sq_cdf(x) * normal_sf(z);
    else
        out.value = root_two_pi * normal_cdf(z) * exp_half_sq_cdf(-x);
    out.derivative = x * out.value + (x <= z ? 1.0 : 0.0) - normal_cdf(z);
    return out;
}

struct RatePrediction {
    std::string regime;  // fast-decay, moderate-decay, or slow-decay
    double exponent = 0.0;
    double a = 0.0;  // covariance decay exponent
    int q = 0;
    double lower = 0.0;  // validity interval for the decay exponent
    double upper = 0.0;
    std::string source = "polynomial-decay";
};

// Predicted convergence-rate exponent of the distance bounds for a
// regularly varying covariance |r(k)| ~ k^a: three regimes split at a = -1
// and a = -1/(q-1). Requires a < -1/q and excludes the resonant exponents
// a = -1/e, e = 1..q-1, where the window sums pick up logarithmic factors.
inline RatePrediction predict_rate(double a, int q) {
    if (q < 2) throw ConfigError("predict_rate: rank must be >= 2");
    if (!(a < -1.0 / q))
        throw ConfigError("predict_rate: decay exponent must lie below -1/rank");
    for (int e = 1; e <= q - 1; ++e)
        if (std::abs(a * e + 1.0) < 1e-12)
            throw ConfigError("predict_rate: boundary decay exponent -1/" +
                              std::to_string(e) + " is excluded");
    RatePrediction out;
    out.a = a;
    out.q = q;
    const double mid = -1.0 / (q - 1);
    if (a < -1.0) {
        out.regime = "fast-decay";
        out.exponent = -0.5;
        out.lower = -std::numeric_limits<double>::infinity();
        out.upper = -1.0;
    } else if (a < mid) {
        out.regime = "moderate-decay";
        out.exponent = 0.5 * a;
        out.lower = -1.0;
        out.upper = mid;
    } else {
        out.regime = "slow-decay";
        out.exponent = 0.5 * (a * q + 1.0);
        out.lower = mid;
        out.upper = -1.0 / q;
    }
    return out;
}

// Rate prediction for fractional noise with Hurst index H: decay exponent
// a = 2H - 2.
inline RatePrediction predict_rate_fgn(double hurst, int q) {
    if (hurst <= 0.0 || hurst >= 1.0)
        throw ConfigError("predict_rate_fgn: Hurst index must lie in (0, 1)");
    auto out = predict_rate(2.0 * hurst - 2.0, q);
    out.source = "fractional-noise";
    return out;
}

struct WindowDecayDiagnostic {
    int m = 0;
    int e = 0;
    std::vector<long> n_grid;
    std::vector<double> values;  // n^{e/m - 1} S_e(n)
    double first = 0.0;
    double last = 0.0;
    double decay_ratio = 0.0;  // first / last (> 1 when the quantity decays)
    bool monotone_nonincreasing = true;
};

// Decay diagnostic for the normalized window sums n^{e/m-1} S_e(n) that
// drive the contraction scales: when the m-th power sequence is summable and
// 1 <= e <= m-1, this quantity tends to zero; the diagnostic evaluates it on
// a grid and reports the observed decay.
inline WindowDecayDiagnostic check_gamma_decay(const CovarianceModel& model, int m, int e,
                                               const std::vector<long>& n_grid) {
    if (e < 1 || e > m - 1)
        throw ConfigError("check_gamma_decay: requires 1 <= e <= m-1");
    if (n_grid.empty()) throw ConfigError("check_gamma_decay: empty grid");
    WindowDecayDiagnostic out;
    out.m = m;
    out.e = e;
    out.n_grid = n_grid;
    for (long n : n_grid) {
        if (n < 1) throw ConfigError("check_gamma_decay: grid entries must be >= 1");
        const double s = theta_window_sum(model, e, n);
        out.values.push_back(
            std::pow(static_cast<double>(n), static_cast<double>(e) / m - 1.0) * s);
    }
    out.first = out.values.front();
    out.last = out.values.back();
    for (std::size_t i = 1; i < out.values.size(); ++i)
        if (out.values[i] > out.values[i - 1] * (1.0 + 1e-12))
            out.monotone_nonincreasing = false;
    out.decay_ratio = out.last > 0.0 ? out.first / out.last
                                     : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace bmb
