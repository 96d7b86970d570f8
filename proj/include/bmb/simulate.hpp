#pragma once

// Exact samplers for stationary Gaussian sequences and the normalized,
// centered partial sums built from them.
//
// Univariate paths use circulant embedding: the length-n Toeplitz covariance
// is wrapped into an M-point circulant (M the smallest power of two with
// M >= 2(n-1)), whose eigenvalue vector is the DFT of the wrapped first row.
// When that spectrum is nonnegative (tiny negatives up to a 1e-12 relative
// tolerance are clamped to zero), scaling one complex standard-normal vector
// by sqrt(lambda_k / M) and transforming back gives, in the real part of the
// first n entries, an exact draw from the target law. Otherwise, and for
// vector-valued models, the block Toeplitz covariance is Cholesky-factored,
// which caps the problem size at n*d <= 4096.
//
// A PathSampler prepares the spectrum or factor once and can then be shared
// by concurrent replication workers: sample() is const, allocates only local
// buffers, and consumes a fresh counter-based stream per call, so each draw
// is a pure function of (seed, stream).

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmb/chaos.hpp"
#include "bmb/common.hpp"
#include "bmb/covariance.hpp"
#include "bmb/fft.hpp"
#include "bmb/hermite.hpp"
#include "bmb/linalg.hpp"
#include "bmb/rng.hpp"

namespace bmb {

enum class SampleMethod { circulant, cholesky };

inline const char* sample_method_name(SampleMethod m) {
    return m == SampleMethod::circulant ? "CIRCULANT" : "CHOLESKY";
}

struct GaussianPathSample {
    long n = 0;
    int d = 1;
    std::vector<double> values;  // row-major, values[k*d + i] = X_k^(i)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    SampleMethod method = SampleMethod::circulant;

    double x(long k, int i) const {
        return values[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(i)];
    }
};

inline constexpr long max_path_length = 2'000'000;
inline constexpr std::size_t max_factor_dim = 4096;
inline constexpr double circulant_spectrum_tolerance = 1e-12;  // relative to the largest eigenvalue

class PathSampler {
  public:
    // Prepares a sampler for length-n paths of the model. By default the
    // univariate circulant route is tried first and the dense factorization
    // is the fallback; `force` pins one method and fails if it cannot apply.
    explicit PathSampler(const CovarianceModel& model, long n,
                         std::optional<SampleMethod> force = std::nullopt)
        : n_(n), d_(model.dim()) {
        if (n < 1 || n > max_path_length)
            throw ConfigError("sampler: path length must lie in [1, " +
                              std::to_string(max_path_length) + "]");
        if (force && *force == SampleMethod::circulant) {
            if (d_ != 1)
                throw ConfigError("sampler: circulant embedding requires dimension 1");
            if (!build_circulant(model))
                throw ConfigError(
                    "sampler: circulant embedding spectrum has negative eigenvalues "
                    "beyond tolerance (most negative " + std::to_string(min_eigenvalue_) +
                    "); use the cholesky method");
            return;
        }
        if (force && *force == SampleMethod::cholesky) {
            build_cholesky(model);
            return;
        }
        if (d_ == 1 && build_circulant(model)) return;
        build_cholesky(model);
    }

    long n() const { return n_; }
    int dim() const { return d_; }
    SampleMethod method() const { return method_; }
    std::size_t embedding_size() const { return scale_.size(); }
    double min_eigenvalue() const { return min_eigenvalue_; }

    GaussianPathSample sample(std::uint64_t seed, std::uint64_t stream) const {
        GaussianPathSample out;
        out.n = n_;
        out.d = d_;
        out.seed = seed;
        out.stream = stream;
        out.method = method_;
        out.values.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(d_));
        RandomStream rs(seed, stream);
        if (method_ == SampleMethod::circulant) {
            const std::size_t m = scale_.size();
            std::vector<std::complex<double>> z(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double a = rs.next_normal();
                const double b = rs.next_normal();
                z[k] = {scale_[k] * a, scale_[k] * b};
            }
            fft(z);
            for (long j = 0; j < n_; ++j)
                out.values[static_cast<std::size_t>(j)] = z[static_cast<std::size_t>(j)].real();
        } else {
            const std::size_t nd = static_cast<std::size_t>(n_) * static_cast<std::size_t>(d_);
            std::vector<double> g(nd);
            for (std::size_t t = 0; t < nd; ++t) g[t] = rs.next_normal();
            for (std::size_t row = 0; row < nd; ++row) {
                long double s = 0.0L;
                const double* lrow = chol_.data() + row * nd;
                for (std::size_t col = 0; col <= row; ++col)
                    s += static_cast<long double>(lrow[col]) * g[col];
                out.values[row] = static_cast<double>(s);
            }
        }
        return out;
    }

  private:
    bool build_circulant(const CovarianceModel& model) {
        std::size_t m = 2;
        while (m < 2 * static_cast<std::size_t>(n_ > 1 ? n_ - 1 : 1)) m <<= 1;
        std::vector<std::complex<double>> c(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t lag = std::min(j, m - j);
            c[j] = model.r1(static_cast<long>(lag));
        }
        fft(c);
        double lam_max = 0.0;
        min_eigenvalue_ = 0.0;
        for (const auto& v : c) {
            lam_max = std::max(lam_max, v.real());
            min_eigenvalue_ = std::min(min_eigenvalue_, v.real());
        }
        if (min_eigenvalue_ < -circulant_spectrum_tolerance * std::max(lam_max, 1.0))
            return false;
        scale_.resize(m);
        for (std::size_t k = 0; k < m; ++k)
            scale_[k] = std::sqrt(std::max(c[k].real(), 0.0) / static_cast<double>(m));
        method_ = SampleMethod::circulant;
        return true;
    }

    void build_cholesky(const CovarianceModel& model) {
        const std::size_t nd = static_cast<std::size_t>(n_) * static_cast<std::size_t>(d_);
        if (nd > max_factor_dim)
            throw CapError("sampler: dense factorization needs n*d <= " +
                           std::to_string(max_factor_dim) +
                           " (no nonnegative circulant embedding is available here)");
        std::vector<double> a(nd * nd);
        for (long k = 0; k < n_; ++k)
            for (int i = 0; i < d_; ++i)
                for (long kp = 0; kp < n_; ++kp)
                    for (int l = 0; l < d_; ++l)
                        a[(static_cast<std::size_t>(k) * d_ + i) * nd +
                          static_cast<std::size_t>(kp) * d_ + l] = model.r(i, l, kp - k);
        chol_ = cholesky_lower(a, nd);
        method_ = SampleMethod::cholesky;
    }

    long n_;
    int d_;
    SampleMethod method_ = SampleMethod::cholesky;
    std::vector<double> scale_;  // sqrt(lambda_k / M), circulant route
    std::vector<double> chol_;   // lower factor, dense route
    double min_eigenvalue_ = 0.0;
};

// One-shot draw; replication loops should construct a PathSampler once.
inline GaussianPathSample sample_path(const CovarianceModel& model, long n, std::uint64_t seed,
                                      std::uint64_t stream) {
    return PathSampler(model, n).sample(seed, stream);
}

struct PartialSumSample {
    double value = 0.0;
    long n = 0;
    int order_cap = -1;     // -1: full centered function; otherwise orders <= cap
    long replication = -1;  // filled by replication drivers
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// S_n = n^{-1/2} sum_k (f(X_k) - E f), or with `order_cap` = N the truncated
// version that keeps only the chaos projections of order <= N.
inline PartialSumSample partial_sum(const GaussianPathSample& path, const HermiteExpansion& e,
                                    int order_cap = -1) {
    if (path.n < 1) throw ConfigError("partial_sum: empty path");
    if (path.d != e.dimension)
        throw ConfigError("partial_sum: path and expansion dimensions differ");
    if (order_cap != -1 && (order_cap < e.rank || order_cap > e.max_order))
        throw ConfigError("partial_sum: order cap must lie in [rank, max_order]");
    PartialSumSample out;
    out.n = path.n;
    out.order_cap = order_cap;
    out.seed = path.seed;
    out.stream = path.stream;
    std::vector<double> xk(static_cast<std::size_t>(path.d));
    long double acc = 0.0L;
    for (long k = 0; k < path.n; ++k) {
        for (int i = 0; i < path.d; ++i) xk[static_cast<std::size_t>(i)] = path.x(k, i);
        acc += order_cap < 0 ? e.eval_centered(xk) : e.eval_truncated(xk, order_cap);
    }
    out.value = static_cast<double>(acc / std::sqrt(static_cast<long double>(path.n)));
    return out;
}

// Exact E[S_{n,N}^2] by the covariance route: each kept chaos order m
// contributes its windowed cross-moment sum (the same quantity the kernel
// norms reproduce), so Monte Carlo second moments can be checked without
// sampling error on the target side.
inline double partial_sum_variance(const CovarianceModel& model, const HermiteExpansion& e,
                                   long n, int order_cap = -1) {
    if (n < 1) throw ConfigError("partial_sum_variance: n must be >= 1");
    if (model.dim() != e.dimension)
        throw ConfigError("partial_sum_variance: model and expansion dimensions differ");
    const int cap = order_cap < 0 ? e.max_order : order_cap;
    if (cap < e.rank || cap > e.max_order)
        throw ConfigError("partial_sum_variance: order cap must lie in [rank, max_order]");
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(cap));
    for (int m = 1; m <= cap; ++m)
        terms.push_back(partial_sum_second_moment(model, e, m, n));
    return pairwise_sum(terms);
}

}  // namespace bmb
