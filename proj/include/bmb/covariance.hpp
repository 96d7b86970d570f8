#pragma once

// Covariance models for stationary d-dimensional Gaussian sequences with unit
// component variance, their uniform dependence coefficients
//   theta(j) = max_{i,l} |r^{(i,l)}(j)|,
// the dependence length K = inf{k : theta(j) <= 1/d for all |j| >= k}, the
// summed coefficient Theta_q = sum_{j in Z} theta(j)^q with certified tail
// majorants, and the chaos-level limit variances
//   sigma_m^2 = sum_{j in Z} E[f_m(X_1) f_m(X_{1+j})].
//
// Negative lags follow the stationarity transpose rule
// r^{(i,l)}(-j) = r^{(l,i)}(j); fractional Gaussian noise covariances are
// evaluated in extended precision because the second difference of |j|^{2H}
// cancels catastrophically at large lags in double.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmb/common.hpp"
#include "bmb/hermite.hpp"

namespace bmb {

enum class CovKind { fgn, poly_decay, table, custom };

// Certified decay metadata for user-supplied covariances:
// either finite support (r = 0 beyond support_length), or
// |r^{(i,l)}(j)| <= c j^a for all j >= valid_from.
struct DecayHint {
    bool finite_support = false;
    long support_length = 0;
    double c = 1.0;
    double a = 0.0;
    long valid_from = 1;
};

class CovarianceModel {
  public:
    static CovarianceModel fgn(double hurst) {
        if (!(hurst > 0.0 && hurst < 1.0))
            throw ConfigError("fgn: Hurst index must lie in (0,1)");
        CovarianceModel m;
        m.kind_ = CovKind::fgn;
        m.d_ = 1;
        m.hurst_ = hurst;
        m.label_ = "fgn(H=" + std::to_string(hurst) + ")";
        return m;
    }

    static CovarianceModel poly_decay(double c, double a) {
        if (!(c > 0.0 && c <= 1.0))
            throw ConfigError("poly_decay: scale c must lie in (0,1]");
        if (!(a < 0.0)) throw ConfigError("poly_decay: exponent a must be negative");
        CovarianceModel m;
        m.kind_ = CovKind::poly_decay;
        m.d_ = 1;
        m.poly_c_ = c;
        m.poly_a_ = a;
        m.label_ = "poly(c=" + std::to_string(c) + ",a=" + std::to_string(a) + ")";
        return m;
    }

    // mats[j] is the d x d matrix r^{(i,l)}(j) in row-major order, j = 0..L;
    // r vanishes beyond lag L.
    static CovarianceModel table(int d, std::vector<std::vector<double>> mats) {
        if (d < 1 || d > 64) throw ConfigError("table: dimension must be in [1,64]");
        if (mats.empty()) throw ConfigError("table: need at least the lag-0 matrix");
        for (const auto& m : mats)
            if (m.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d))
                throw ConfigError("table: every matrix must have d*d entries");
        for (int i = 0; i < d; ++i) {
            if (std::abs(mats[0][static_cast<std::size_t>(i * d + i)] - 1.0) > 1e-12)
                throw ConfigError("table: lag-0 matrix must have unit diagonal");
            for (int l = 0; l < d; ++l)
                if (std::abs(mats[0][static_cast<std::size_t>(i * d + l)] -
                             mats[0][static_cast<std::size_t>(l * d + i)]) > 1e-12)
                    throw ConfigError("table: lag-0 matrix must be symmetric");
        }
        for (const auto& m : mats)
            for (double v : m)
                if (std::abs(v) > 1.0 + 1e-12)
                    throw ConfigError("table: correlations cannot exceed 1 in modulus");
        CovarianceModel m;
        m.kind_ = CovKind::table;
        m.d_ = d;
        m.mats_ = std::move(mats);
        m.label_ = "table(d=" + std::to_string(d) +
                   ",L=" + std::to_string(m.mats_.size() - 1) + ")";
        return m;
    }

    // fn(i, l, j) must be defined for 0 <= i,l < d and j >= 0.
    static CovarianceModel custom(int d, std::function<double(int, int, long)> fn,
                                  DecayHint hint) {
        if (d < 1 || d > 64) throw ConfigError("custom: dimension must be in [1,64]");
        if (!fn) throw ConfigError("custom: missing covariance callback");
        if (!hint.finite_support && !(hint.a < 0.0))
            throw ConfigError("custom: decay hint must give a negative exponent or finite support");
        CovarianceModel m;
        m.kind_ = CovKind::custom;
        m.d_ = d;
        m.fn_ = std::move(fn);
        m.hint_ = hint;
        m.label_ = "custom(d=" + std::to_string(d) + ")";
        return m;
    }

    int dim() const { return d_; }
    CovKind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    double hurst() const { return hurst_; }

    double r(int i, int l, long j) const {
        if (i < 0 || i >= d_ || l < 0 || l >= d_)
            throw ConfigError("covariance: component index out of range");
        if (j < 0) return r(l, i, -j);
        switch (kind_) {
            case CovKind::fgn:
                return fgn_r(j);
            case CovKind::poly_decay:
                return j == 0 ? 1.0 : poly_c_ * std::pow(static_cast<double>(j), poly_a_);
            case CovKind::table:
                if (static_cast<std::size_t>(j) >= mats_.size()) return 0.0;
                return mats_[static_cast<std::size_t>(j)]
                            [static_cast<std::size_t>(i * d_ + l)];
            case CovKind::custom:
                if (hint_.finite_support && j > hint_.support_length) return 0.0;
                return fn_(i, l, j);
        }
        return 0.0;
    }

    double r1(long j) const { return r(0, 0, j); }

    double theta(long j) const {
        if (j < 0) j = -j;
        if (d_ == 1) return std::abs(r(0, 0, j));
        double m = 0.0;
        for (int i = 0; i < d_; ++i)
            for (int l = 0; l < d_; ++l) m = std::max(m, std::abs(r(i, l, j)));
        return m;
    }

    bool finite_support() const {
        return kind_ == CovKind::table || (kind_ == CovKind::custom && hint_.finite_support) ||
               (kind_ == CovKind::fgn && hurst_ == 0.5);
    }

    long support_length() const {
        if (kind_ == CovKind::table) return static_cast<long>(mats_.size()) - 1;
        if (kind_ == CovKind::custom && hint_.finite_support) return hint_.support_length;
        if (kind_ == CovKind::fgn && hurst_ == 0.5) return 0;
        throw ConfigError("support_length: model does not have finite support");
    }

    // Power-law decay exponent a with theta(j) <= decay_c * j^a eventually;
    // nullopt for finite-support models (faster than any power).
    std::optional<double> decay_exponent() const {
        if (finite_support()) return std::nullopt;
        switch (kind_) {
            case CovKind::fgn:
                return 2.0 * hurst_ - 2.0;
            case CovKind::poly_decay:
                return poly_a_;
            case CovKind::custom:
                return hint_.a;
            default:
                return std::nullopt;
        }
    }

    bool certified_summable(int e) const {
        if (e < 1) throw ConfigError("certified_summable: exponent must be >= 1");
        if (finite_support()) return true;
        return decay_exponent().value() * e < -1.0;
    }

    // Certified bound on 2 * sum_{j > max_lag} theta(j)^e is twice this;
    // returns the one-sided sum bound. +infinity if not certified summable.
    double theta_power_tail(int e, long max_lag) const {
        if (max_lag < 2) throw ConfigError("theta_power_tail: max_lag must be >= 2");
        if (finite_support()) {
            if (kind_ == CovKind::custom || kind_ == CovKind::table) {
                long double s = 0.0L;
                for (long j = max_lag + 1; j <= support_length(); ++j)
                    s += std::pow(theta(j), e);
                return static_cast<double>(s);
            }
            return 0.0;
        }
        if (!certified_summable(e)) return std::numeric_limits<double>::infinity();
        const double a = decay_exponent().value();
        const double pe = a * e;
        double c, shift;
        switch (kind_) {
            case CovKind::fgn:
                // |r(j)| <= H|2H-1| (j-1)^{2H-2} for j >= 2 (mean value theorem
                // applied twice to the second difference of |j|^{2H}).
                c = hurst_ * std::abs(2.0 * hurst_ - 1.0);
                shift = 1.0;
                break;
            case CovKind::poly_decay:
                c = poly_c_;
                shift = 0.0;
                break;
            default:  // custom with power hint
                c = hint_.c;
                shift = 0.0;
                if (max_lag < hint_.valid_from)
                    throw ConfigError("theta_power_tail: max_lag below decay hint validity");
                break;
        }
        // sum_{j > J} (j - shift)^{pe} <= int_{J - shift}^inf t^{pe} dt.
        const double base = static_cast<double>(max_lag) - shift;
        return std::pow(c, e) * std::pow(base, pe + 1.0) / (-pe - 1.0);
    }

    // K: smallest k with theta(j) <= 1/d for all |j| >= k. Determinable for
    // every supported model class (scan up to the certified crossover lag).
    long dependence_length() const {
        const double cap = 1.0 / static_cast<double>(d_);
        long scan_to = 0;
        if (finite_support()) {
            scan_to = support_length();
        } else if (kind_ == CovKind::fgn || kind_ == CovKind::poly_decay) {
            scan_to = 1;  // theta(j) < 1 = cap for j >= 1 in dimension 1
        } else {
            // custom: c j^a <= cap certified from j_star on
            const double c = hint_.c, a = hint_.a;
            double j_star = std::pow(c * static_cast<double>(d_), -1.0 / a);
            if (!(j_star < 1e7))
                throw ConfigError("dependence_length: decay hint crossover beyond scan cap");
            scan_to = std::max<long>(static_cast<long>(std::ceil(j_star)), hint_.valid_from);
        }
        long k = 0;
        for (long j = 0; j <= scan_to; ++j) {
            const double t = theta(j);
            if (t > 1.0 + 1e-9)
                throw ConfigError("dependence_length: |r| > 1 at lag " + std::to_string(j) +
                                  ", not a valid standardized covariance");
            if (t > cap) k = j + 1;
        }
        return k;
    }

  private:
    double fgn_r(long j) const {
        if (j == 0) return 1.0;
        const long double tH = 2.0L * static_cast<long double>(hurst_);
        const long double jj = static_cast<long double>(j);
        const long double v = (std::pow(jj + 1.0L, tH) - 2.0L * std::pow(jj, tH) +
                               std::pow(jj - 1.0L, tH)) * 0.5L;
        return static_cast<double>(v);
    }

    CovKind kind_ = CovKind::fgn;
    int d_ = 1;
    double hurst_ = 0.5;
    double poly_c_ = 1.0, poly_a_ = -2.0;
    std::vector<std::vector<double>> mats_;
    std::function<double(int, int, long)> fn_;
    DecayHint hint_;
    std::string label_;
};

struct DependenceCoefficients {
    int q = 1;
    long max_lag = 0;
    std::vector<double> theta;  // theta(0)..theta(max_lag)
    long dependence_length = 0;  // K
    double theta_sum = 0.0;      // Theta_q = sum_{j in Z} theta(j)^q (certified)
    double tail = 0.0;           // certified remainder included in theta_sum
    bool truncated = false;      // true: lag-truncated proxy, no tail claim
};

namespace detail {

inline DependenceCoefficients theta_sequence_impl(const CovarianceModel& model, int q,
                                                  long max_lag, bool allow_divergent) {
    if (q < 1) throw ConfigError("theta_sequence: rank must be >= 1");
    if (max_lag < 2 || max_lag > 100000000L)
        throw ConfigError("theta_sequence: max_lag must be in [2, 1e8]");
    if (!allow_divergent && !model.certified_summable(q))
        throw ConfigError(
            "theta_sequence: sum_j theta(j)^" + std::to_string(q) +
            " is not certified finite for " + model.label() +
            " (needs decay exponent * rank < -1); the summability condition fails");

    DependenceCoefficients out;
    out.q = q;
    out.max_lag = max_lag;
    out.theta.resize(static_cast<std::size_t>(max_lag) + 1);
    std::vector<double> powers(static_cast<std::size_t>(max_lag));
    for (long j = 0; j <= max_lag; ++j) {
        const double t = model.theta(j);
        if (t > 1.0 + 1e-9)
            throw ConfigError("theta_sequence: theta(" + std::to_string(j) + ") = " +
                              std::to_string(t) + " exceeds 1");
        out.theta[static_cast<std::size_t>(j)] = t;
        if (j >= 1) powers[static_cast<std::size_t>(j - 1)] = std::pow(t, q);
    }
    out.dependence_length = model.dependence_length();
    const double theta0q = std::pow(out.theta[0], q);
    if (allow_divergent && !model.certified_summable(q)) {
        out.truncated = true;
        out.tail = 0.0;
        out.theta_sum = theta0q + 2.0 * pairwise_sum(powers);
    } else {
        out.tail = 2.0 * model.theta_power_tail(q, max_lag);
        out.theta_sum = theta0q + 2.0 * pairwise_sum(powers) + out.tail;
    }
    return out;
}

}  // namespace detail

inline DependenceCoefficients theta_sequence(const CovarianceModel& model, int q,
                                             long max_lag) {
    return detail::theta_sequence_impl(model, q, max_lag, false);
}

// Lag-truncated variant: no summability requirement, no tail claim. Used for
// finite-sample kernel checks where only lags below the truncation enter.
inline DependenceCoefficients theta_sequence_truncated(const CovarianceModel& model, int q,
                                                       long max_lag) {
    return detail::theta_sequence_impl(model, q, max_lag, true);
}

namespace detail {

// All order-m component tuples t in {0..d-1}^m with their kernel weights
// b_t = a_{type(t)} type(t)! / m!.
struct WeightedTuples {
    std::vector<std::vector<int>> tuples;
    std::vector<double> b;
};

inline WeightedTuples kernel_weights(const HermiteExpansion& e, int m) {
    const int d = e.dimension;
    double count = std::pow(static_cast<double>(d), m);
    if (count > 2e5) throw CapError("kernel weights: d^m too large");
    WeightedTuples out;
    std::vector<int> t(static_cast<std::size_t>(m), 0);
    const double mfact = factorial(m);
    for (;;) {
        std::vector<int> alpha(static_cast<std::size_t>(d), 0);
        for (int i = 0; i < m; ++i) ++alpha[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
        auto it = e.coeff.find(alpha);
        const double a = (it == e.coeff.end()) ? 0.0 : it->second;
        out.tuples.push_back(t);
        out.b.push_back(a * multi_index_factorial(alpha) / mfact);
        int pos = m - 1;
        while (pos >= 0 && ++t[static_cast<std::size_t>(pos)] == d) {
            t[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

}  // namespace detail

// Windowed power sum S_e(n) = sum_{|j| <= n} theta(j)^e.
inline double theta_window_sum(const CovarianceModel& model, int e, long n) {
    if (e < 1) throw ConfigError("theta_window_sum: exponent must be >= 1");
    if (n < 0 || n > 100000000L)
        throw ConfigError("theta_window_sum: window must be in [0, 1e8]");
    std::vector<double> terms(static_cast<std::size_t>(n));
    for (long j = 1; j <= n; ++j)
        terms[static_cast<std::size_t>(j - 1)] = std::pow(model.theta(j), e);
    return std::pow(model.theta(0), e) + 2.0 * pairwise_sum(terms);
}

// gamma_{n,m,e} = sqrt(2 Theta n^{-1} S_e(n) S_{m-e}(n)). The caller supplies
// Theta = sum_j theta(j)^q, either certified (with tail) or lag-truncated.
inline double gamma_factor(const CovarianceModel& model, double theta_sum, long n,
                           int m, int e) {
    if (n < 1) throw ConfigError("gamma_factor: n must be >= 1");
    if (e < 1 || e > m - 1)
        throw ConfigError("gamma_factor: contraction order must be in [1, m-1]");
    return std::sqrt(2.0 * theta_sum * theta_window_sum(model, e, n) *
                     theta_window_sum(model, m - e, n) / static_cast<double>(n));
}

// E[f_m(X_1) f_m(X_{1+j})] = m! sum_{t,l} b_t b_l prod_i r^{(t_i,l_i)}(j),
// the lag-j cross moment of the order-m projection.
inline double order_cross_moment(const CovarianceModel& model, const HermiteExpansion& e,
                                 int m, long j) {
    if (e.dimension != model.dim())
        throw ConfigError("order_cross_moment: expansion and model dimensions differ");
    if (m < 1 || m > e.max_order)
        throw ConfigError("order_cross_moment: order out of range");
    if (e.energy_by_order[static_cast<std::size_t>(m)] == 0.0) return 0.0;
    const auto wt = detail::kernel_weights(e, m);
    const std::size_t nt = wt.tuples.size();
    long double s = 0.0L;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        if (wt.b[ti] == 0.0) continue;
        for (std::size_t li = 0; li < nt; ++li) {
            if (wt.b[li] == 0.0) continue;
            double prod = wt.b[ti] * wt.b[li];
            for (int i = 0; i < m && prod != 0.0; ++i)
                prod *= model.r(wt.tuples[ti][static_cast<std::size_t>(i)],
                                wt.tuples[li][static_cast<std::size_t>(i)], j);
            s += prod;
        }
    }
    return factorial(m) * static_cast<double>(s);
}

// sigma_m^2 = sum_{j in Z} E[f_m(X_1) f_m(X_{1+j})], truncated at |j| <= max_lag
// with a certified tail bound. In dimension 1 this is a_m^2 m! sum_j r(j)^m;
// in general it is m! sum_j sum_{t,l} b_t b_l prod_i r^{(t_i,l_i)}(j).
inline ValueWithTail sigma2_order(const CovarianceModel& model, const HermiteExpansion& e,
                                  int m, long max_lag) {
    if (e.dimension != model.dim())
        throw ConfigError("sigma2_order: expansion and model dimensions differ");
    if (m < 1 || m > e.max_order) throw ConfigError("sigma2_order: order out of range");
    const int q = e.rank;
    if (!model.certified_summable(q))
        throw ConfigError("sigma2_order: summability condition fails at the Hermite rank");

    const long J = model.finite_support() ? std::min(max_lag, model.support_length())
                                          : max_lag;
    ValueWithTail out;
    const double energy_m = e.energy_by_order[static_cast<std::size_t>(m)];
    if (energy_m == 0.0) return out;  // no order-m component, exactly zero
    if (model.dim() == 1) {
        const double am = e.coefficient(m);
        std::vector<double> terms(static_cast<std::size_t>(std::max<long>(J, 0)));
        for (long k = 1; k <= J; ++k)
            terms[static_cast<std::size_t>(k - 1)] = std::pow(model.r1(k), m);
        const double lag_sum = 1.0 + 2.0 * pairwise_sum(terms);
        out.value = am * am * factorial(m) * lag_sum;
        out.tail = am * am * factorial(m) * 2.0 * model.theta_power_tail(m, std::max<long>(J, 2));
        return out;
    }

    const auto wt = detail::kernel_weights(e, m);
    const std::size_t nt = wt.tuples.size();
    if ((2.0 * static_cast<double>(J) + 1.0) * static_cast<double>(nt) * static_cast<double>(nt) > 4e9)
        throw CapError("sigma2_order: lag sum too large for d >= 2 (reduce max_lag)");
    std::vector<double> lag_terms;
    lag_terms.reserve(static_cast<std::size_t>(2 * J + 1));
    for (long j = -J; j <= J; ++j) {
        long double s = 0.0L;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            if (wt.b[ti] == 0.0) continue;
            for (std::size_t li = 0; li < nt; ++li) {
                if (wt.b[li] == 0.0) continue;
                double prod = wt.b[ti] * wt.b[li];
                for (int i = 0; i < m && prod != 0.0; ++i)
                    prod *= model.r(wt.tuples[ti][static_cast<std::size_t>(i)],
                                    wt.tuples[li][static_cast<std::size_t>(i)], j);
                s += prod;
            }
        }
        lag_terms.push_back(static_cast<double>(s));
    }
    out.value = factorial(m) * pairwise_sum(lag_terms);
    // |E[f_m(X_1) f_m(X_{1+j})]| <= E[f_m^2] (d theta(j))^m <= E[f_m^2] d^q theta(j)^q
    // once theta(j) <= 1/d, i.e. beyond K.
    if (model.finite_support() && max_lag >= model.support_length()) {
        out.tail = 0.0;
    } else {
        if (J < model.dependence_length())
            throw ConfigError("sigma2_order: max_lag below the dependence length K");
        out.tail = 2.0 * energy_m * std::pow(static_cast<double>(model.dim()), q) *
                   model.theta_power_tail(q, J);
    }
    return out;
}

struct VarianceDecomposition {
    int q = 1;
    int n_max = 0;
    long max_lag = 0;
    std::vector<ValueWithTail> orders;  // m = q..n_max
    double total = 0.0;
    double tail_estimate = 0.0;
    double energy_above = 0.0;       // Hermite energy beyond n_max
    double two_k_plus_theta = 0.0;   // 2K + d^q Theta_q
};

inline VarianceDecomposition sigma2_total(const CovarianceModel& model,
                                          const HermiteExpansion& e, int n_max,
                                          long max_lag) {
    if (n_max < e.rank || n_max > e.max_order)
        throw ConfigError("sigma2_total: N must lie in [rank, max_order]");
    const auto dep = theta_sequence(model, e.rank, max_lag);
    VarianceDecomposition out;
    out.q = e.rank;
    out.n_max = n_max;
    out.max_lag = max_lag;
    out.two_k_plus_theta = 2.0 * static_cast<double>(dep.dependence_length) +
                           std::pow(static_cast<double>(model.dim()), e.rank) * dep.theta_sum;
    double tails = 0.0;
    std::vector<double> values;
    for (int m = e.rank; m <= n_max; ++m) {
        const auto vm = sigma2_order(model, e, m, max_lag);
        out.orders.push_back(vm);
        values.push_back(vm.value);
        tails += vm.tail;
    }
    out.total = pairwise_sum(values);
    out.energy_above = e.energy_above(n_max);
    out.tail_estimate = tails + out.two_k_plus_theta * out.energy_above;
    return out;
}

// Ratio of sum_{k=1}^n k^a (a in (-1, 0]) or of the tail sum_{k>n} k^a
// (a < -1) to its regularly-varying asymptote n^{1+a}/|1+a|. Approaches 1 as
// n grows; a diagnostic for the discrete-sum-vs-power-law comparisons.
inline double karamata_ratio(double a, long n) {
    if (n < 1 || n > 100000000L) throw ConfigError("karamata_ratio: n must be in [1, 1e8]");
    if (a > 0.0 || a == -1.0)
        throw ConfigError("karamata_ratio: exponent must be <= 0 and != -1");
    if (a > -1.0) {
        std::vector<double> terms(static_cast<std::size_t>(n));
        for (long k = 1; k <= n; ++k)
            terms[static_cast<std::size_t>(k - 1)] = std::pow(static_cast<double>(k), a);
        return pairwise_sum(terms) / (std::pow(static_cast<double>(n), 1.0 + a) / (1.0 + a));
    }
    const long cap = std::max<long>(100 * n, 1000000L);
    long double tail = 0.0L;
    for (long k = n + 1; k <= cap; ++k) tail += std::pow(static_cast<long double>(k), a);
    // Euler-Maclaurin remainder past the explicit sum.
    tail += std::pow(static_cast<long double>(cap), a + 1.0L) / (-a - 1.0L) -
            0.5L * std::pow(static_cast<long double>(cap), a);
    return static_cast<double>(tail) / (std::pow(static_cast<double>(n), 1.0 + a) / (-1.0 - a));
}

}  // namespace bmb
