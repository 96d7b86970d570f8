#pragma once

// Monte Carlo estimators for the distance between the law of the normalized
// partial sum and its Gaussian limit, with seeded bootstrap standard errors,
// plus ordinary-least-squares rate fits on log-log grids.
//
// Replications are embarrassingly parallel: replication i draws from stream
// (path | i), bootstrap resample b from stream (bootstrap | b), synthetic
// draw i from stream (synthetic | i). Every aggregate is reduced in fixed
// order (pairwise_sum or an index loop over slots), so all results are pure
// functions of (seed, R, n) and never depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bmb/common.hpp"
#include "bmb/covariance.hpp"
#include "bmb/gaussian.hpp"
#include "bmb/hermite.hpp"
#include "bmb/parallel.hpp"
#include "bmb/quadrature.hpp"
#include "bmb/rng.hpp"
#include "bmb/simulate.hpp"

namespace bmb {

enum class DistanceKind { kolmogorov, wasserstein, second_order, test_function };

inline const char* distance_kind_name(DistanceKind k) {
    switch (k) {
        case DistanceKind::kolmogorov: return "KOL";
        case DistanceKind::wasserstein: return "W";
        case DistanceKind::second_order: return "C";
        case DistanceKind::test_function: return "H";
    }
    return "?";
}

struct DistanceEstimate {
    DistanceKind kind = DistanceKind::kolmogorov;
    std::string detail;  // test-set id for C, function name for H
    double estimate = 0.0;
    double se = 0.0;
    long replications = 0;
    long n = 0;
    int order_cap = -1;  // chaos truncation used for the sums; -1 = full
    double sigma = 0.0;
    std::uint64_t seed = 0;
    bool lower_bound_only = false;  // C: a finite family only bounds the sup from below
    double dkw_99 = std::numeric_limits<double>::quiet_NaN();  // KOL null band
    std::string note;

    std::string kind_label() const {
        std::string s = distance_kind_name(kind);
        if (!detail.empty()) s += ":" + detail;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Replication batches

// values[i] = S_n drawn from stream (path | i); deterministic for any thread
// count. A factor-once sampler is shared by all workers.
inline std::vector<double> simulate_sums(const CovarianceModel& model, const HermiteExpansion& e,
                                         long n, long reps, std::uint64_t seed, int threads = 1,
                                         int order_cap = -1) {
    if (reps < 1) throw ConfigError("simulate_sums: need at least one replication");
    const PathSampler sampler(model, n);
    std::vector<double> out(static_cast<std::size_t>(reps));
    parallel_for(reps, threads, [&](long i) {
        const GaussianPathSample p =
            sampler.sample(seed, stream_tag::path | static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = partial_sum(p, e, order_cap).value;
    });
    return out;
}

// Same draws, with full provenance per replication (for raw dumps).
inline std::vector<PartialSumSample> simulate_sum_samples(const CovarianceModel& model,
                                                          const HermiteExpansion& e, long n,
                                                          long reps, std::uint64_t seed,
                                                          int threads = 1, int order_cap = -1) {
    if (reps < 1) throw ConfigError("simulate_sums: need at least one replication");
    const PathSampler sampler(model, n);
    std::vector<PartialSumSample> out(static_cast<std::size_t>(reps));
    parallel_for(reps, threads, [&](long i) {
        const GaussianPathSample p =
            sampler.sample(seed, stream_tag::path | static_cast<std::uint64_t>(i));
        PartialSumSample s = partial_sum(p, e, order_cap);
        s.replication = i;
        out[static_cast<std::size_t>(i)] = s;
    });
    return out;
}

// values[i] = sigma * (standard normal from stream (synthetic | i)).
inline std::vector<double> synthetic_normal_sample(long reps, double sigma, std::uint64_t seed,
                                                   int threads = 1) {
    if (reps < 1) throw ConfigError("synthetic_normal_sample: need at least one draw");
    std::vector<double> out(static_cast<std::size_t>(reps));
    parallel_for(reps, threads, [&](long i) {
        RandomStream rs(seed, stream_tag::synthetic | static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = sigma * rs.next_normal();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Core sample statistics

// Exact sup_z |ECDF(z) - Phi(z/sigma)|: the supremum of a right-continuous
// step function against a continuous CDF is attained at a jump point, from
// the left or the right, so scanning both one-sided gaps at the order
// statistics is exact.
inline double kolmogorov_statistic_sorted(const std::vector<double>& sorted, double sigma) {
    const auto r = static_cast<double>(sorted.size());
    if (sorted.empty()) throw ConfigError("kolmogorov statistic: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double u = normal_cdf(sorted[i] / sigma);
        d = std::max(d, std::max(static_cast<double>(i + 1) / r - u,
                                 u - static_cast<double>(i) / r));
    }
    return d;
}

namespace detail {
// phi(Phi^{-1}(i/R)) for i = 0..R; this grid depends only on R, so one
// computation serves the point estimate and every bootstrap resample.
inline std::vector<double> quantile_density_grid(std::size_t r) {
    std::vector<double> grid(r + 1);
    grid[0] = grid[r] = 0.0;
    for (std::size_t i = 1; i < r; ++i)
        grid[i] = normal_pdf(
            normal_quantile(static_cast<double>(i) / static_cast<double>(r)));
    return grid;
}

inline double wasserstein_with_grid(const std::vector<double>& sorted, double sigma,
                                    const std::vector<double>& grid) {
    const auto r = static_cast<double>(sorted.size());
    std::vector<double> segments(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double a = static_cast<double>(i) / r;
        const double b = static_cast<double>(i + 1) / r;
        const double x = sorted[i];
        const double u = normal_cdf(x / sigma);
        // crossing point of ECDF^{-1} and sigma Phi^{-1} inside the segment;
        // there phi(Phi^{-1}(u)) = phi(x/sigma), so no inverse CDF is needed
        double c, pc;
        if (u <= a) {
            c = a;
            pc = grid[i];
        } else if (u >= b) {
            c = b;
            pc = grid[i + 1];
        } else {
            c = u;
            pc = normal_pdf(x / sigma);
        }
        const double pos = x * (c - a) - sigma * (grid[i] - pc);      // integrand >= 0 on [a, c]
        const double neg = x * (b - c) - sigma * (pc - grid[i + 1]);  // integrand <= 0 on [c, b]
        segments[i] = pos - neg;
    }
    return std::max(pairwise_sum(segments), 0.0);
}
}  // namespace detail

// Exact W1 distance between the empirical law of the sample and N(0, sigma^2),
// via the quantile coupling: the integral of |ECDF^{-1}(u) - sigma Phi^{-1}(u)|
// is computed segment by segment, splitting each [ (i-1)/R, i/R ] at the
// crossing point Phi(x_(i)/sigma) where the integrand changes sign, using the
// closed-form antiderivative  d/du[-phi(Phi^{-1}(u))] = Phi^{-1}(u).
inline double wasserstein_statistic_sorted(const std::vector<double>& sorted, double sigma) {
    if (sorted.empty()) throw ConfigError("wasserstein statistic: empty sample");
    return detail::wasserstein_with_grid(sorted, sigma,
                                         detail::quantile_density_grid(sorted.size()));
}

// Exact W1 distance between two same-size empirical laws (sorted pairing).
inline double wasserstein_paired(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size() || a.empty())
        throw ConfigError("wasserstein_paired: need two nonempty samples of equal size");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> gaps(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
    return pairwise_sum(gaps) / static_cast<double>(a.size());
}

// Dvoretzky-Kiefer-Wolfowitz band: with probability >= confidence the exact
// Kolmogorov statistic of an R-point sample from the target law itself stays
// below this value.
inline double dkw_bound(long reps, double confidence) {
    if (reps < 1) throw ConfigError("dkw_bound: need a positive sample size");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ConfigError("dkw_bound: confidence must lie in (0,1)");
    return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(reps)));
}

// Bootstrap standard error of an arbitrary sample statistic: `resamples`
// draws with replacement, resample b fed from stream (bootstrap | b), spread
// measured as the sample standard deviation of the resampled statistics.
inline double bootstrap_se(const std::vector<double>& values, std::uint64_t seed,
                           const std::function<double(std::vector<double>&)>& statistic,
                           int resamples = 200, int threads = 1) {
    if (values.empty()) throw ConfigError("bootstrap_se: empty sample");
    if (resamples < 2) throw ConfigError("bootstrap_se: need at least two resamples");
    if (!statistic) throw ConfigError("bootstrap_se: missing statistic");
    const std::size_t r = values.size();
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    parallel_for(resamples, threads, [&](long b) {
        RandomStream rs(seed, stream_tag::bootstrap | static_cast<std::uint64_t>(b));
        std::vector<double> res(r);
        for (std::size_t i = 0; i < r; ++i)
            res[i] = values[static_cast<std::size_t>(rs.next_below(r))];
        stats[static_cast<std::size_t>(b)] = statistic(res);
    });
    const double mean = pairwise_sum(stats) / static_cast<double>(resamples);
    std::vector<double> sq(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) sq[i] = sqr(stats[i] - mean);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(resamples - 1));
}

// ---------------------------------------------------------------------------
// Distance estimators against N(0, sigma^2)

namespace detail {
inline void check_estimator_inputs(long reps, double sigma, long min_reps) {
    if (reps < min_reps)
        throw ConfigError("distance estimator: need at least " + std::to_string(min_reps) +
                          " replications");
    if (!(sigma > 0.0)) throw ConfigError("distance estimator: sigma must be positive");
}

// A bootstrap resample of an R-point sample is the same multiset with
// multiplicities, so both statistics can be evaluated from per-point counts
// against the sorted original: no re-sorting, and the CDF/PDF values at the
// sample points are computed once and shared by all 200 resamples.
struct SortedScan {
    std::vector<double> sorted;
    std::vector<double> u;    // Phi(x_(i) / sigma)
    std::vector<double> pdf;  // phi(x_(i) / sigma)
    double sigma = 1.0;

    SortedScan(const std::vector<double>& values, double sig) : sigma(sig) {
        sorted = values;
        std::sort(sorted.begin(), sorted.end());
        u.resize(sorted.size());
        pdf.resize(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            u[i] = normal_cdf(sorted[i] / sigma);
            pdf[i] = normal_pdf(sorted[i] / sigma);
        }
    }
};

inline double kolmogorov_counts(const SortedScan& scan, const std::vector<std::uint32_t>& counts,
                                std::size_t total) {
    const auto r = static_cast<double>(total);
    double d = 0.0;
    std::size_t cum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double before = static_cast<double>(cum) / r;
        cum += counts[i];
        const double after = static_cast<double>(cum) / r;
        d = std::max(d, std::max(after - scan.u[i], scan.u[i] - before));
    }
    return d;
}

inline double wasserstein_counts(const SortedScan& scan, const std::vector<std::uint32_t>& counts,
                                 std::size_t total, const std::vector<double>& grid) {
    const auto r = static_cast<double>(total);
    long double acc = 0.0L;
    std::size_t cum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double a = static_cast<double>(cum) / r;
        const double pa = grid[cum];
        cum += counts[i];
        const double b = static_cast<double>(cum) / r;
        const double pb = grid[cum];
        const double x = scan.sorted[i];
        double c, pc;
        if (scan.u[i] <= a) {
            c = a;
            pc = pa;
        } else if (scan.u[i] >= b) {
            c = b;
            pc = pb;
        } else {
            c = scan.u[i];
            pc = scan.pdf[i];
        }
        const double pos = x * (c - a) - scan.sigma * (pa - pc);
        const double neg = x * (b - c) - scan.sigma * (pc - pb);
        acc += pos - neg;
    }
    return std::max(static_cast<double>(acc), 0.0);
}

// Seeded count-based bootstrap: resample b fills a multiplicity vector from
// stream (bootstrap | b) and re-evaluates the statistic in O(R).
inline double bootstrap_se_counts(
    const SortedScan& scan, std::uint64_t seed, int threads,
    const std::function<double(const std::vector<std::uint32_t>&, std::size_t)>& statistic,
    int resamples = 200) {
    const std::size_t r = scan.sorted.size();
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    parallel_for(resamples, threads, [&](long b) {
        RandomStream rs(seed, stream_tag::bootstrap | static_cast<std::uint64_t>(b));
        std::vector<std::uint32_t> counts(r, 0);
        for (std::size_t i = 0; i < r; ++i)
            ++counts[static_cast<std::size_t>(rs.next_below(r))];
        stats[static_cast<std::size_t>(b)] = statistic(counts, r);
    });
    const double mean = pairwise_sum(stats) / static_cast<double>(resamples);
    std::vector<double> sq(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) sq[i] = sqr(stats[i] - mean);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(resamples - 1));
}
}  // namespace detail

inline DistanceEstimate estimate_kolmogorov_from(const std::vector<double>& values, double sigma,
                                                 long n, std::uint64_t seed, int threads = 1,
                                                 int order_cap = -1) {
    detail::check_estimator_inputs(static_cast<long>(values.size()), sigma, 1000);
    const detail::SortedScan scan(values, sigma);
    DistanceEstimate out;
    out.kind = DistanceKind::kolmogorov;
    out.estimate = kolmogorov_statistic_sorted(scan.sorted, sigma);
    out.se = detail::bootstrap_se_counts(
        scan, seed, threads,
        [&scan](const std::vector<std::uint32_t>& counts, std::size_t total) {
            return detail::kolmogorov_counts(scan, counts, total);
        });
    out.replications = static_cast<long>(values.size());
    out.n = n;
    out.order_cap = order_cap;
    out.sigma = sigma;
    out.seed = seed;
    out.dkw_99 = dkw_bound(out.replications, 0.99);
    out.note = "exact ECDF-vs-CDF supremum; 99% null band " + std::to_string(out.dkw_99);
    return out;
}

inline DistanceEstimate estimate_kolmogorov(const CovarianceModel& model,
                                            const HermiteExpansion& e, long n, double sigma,
                                            long reps, std::uint64_t seed, int threads = 1,
                                            int order_cap = -1) {
    detail::check_estimator_inputs(reps, sigma, 1000);
    return estimate_kolmogorov_from(simulate_sums(model, e, n, reps, seed, threads, order_cap),
                                    sigma, n, seed, threads, order_cap);
}

inline DistanceEstimate estimate_wasserstein_from(const std::vector<double>& values, double sigma,
                                                  long n, std::uint64_t seed, int threads = 1,
                                                  int order_cap = -1) {
    detail::check_estimator_inputs(static_cast<long>(values.size()), sigma, 1000);
    const detail::SortedScan scan(values, sigma);
    const std::vector<double> grid = detail::quantile_density_grid(values.size());
    DistanceEstimate out;
    out.kind = DistanceKind::wasserstein;
    out.estimate = detail::wasserstein_with_grid(scan.sorted, sigma, grid);
    out.se = detail::bootstrap_se_counts(
        scan, seed, threads,
        [&scan, &grid](const std::vector<std::uint32_t>& counts, std::size_t total) {
            return detail::wasserstein_counts(scan, counts, total, grid);
        });
    out.replications = static_cast<long>(values.size());
    out.n = n;
    out.order_cap = order_cap;
    out.sigma = sigma;
    out.seed = seed;
    out.note = "exact quantile-coupling integral";
    return out;
}

inline DistanceEstimate estimate_wasserstein(const CovarianceModel& model,
                                             const HermiteExpansion& e, long n, double sigma,
                                             long reps, std::uint64_t seed, int threads = 1,
                                             int order_cap = -1) {
    detail::check_estimator_inputs(reps, sigma, 1000);
    return estimate_wasserstein_from(simulate_sums(model, e, n, reps, seed, threads, order_cap),
                                     sigma, n, seed, threads, order_cap);
}

// ---------------------------------------------------------------------------
// Test functions

struct TestFunction {
    std::string name;
    std::function<double(double)> h;
    // Declared derivative sup-norms; NaN marks "undeclared" and disqualifies
    // the function from derivative-weighted bound comparisons.
    double lip_norm = std::numeric_limits<double>::quiet_NaN();        // sup |h'|
    double curvature_norm = std::numeric_limits<double>::quiet_NaN();  // sup |h''|
    std::vector<double> breakpoints;  // kinks/jumps, for exact quadrature
};

namespace detail {
struct BumpNorms {
    double d1;  // sup |B'| of the mother bump B(t) = exp(-1/(1-t^2))
    double d2;  // sup |B''|
};

// The extrema are found on a dense grid with parabolic refinement; the bump
// is analytic inside (-1,1) and flat at the edges, so this is accurate to
// far beyond the use the norms are put to.
inline const BumpNorms& bump_norms() {
    static const BumpNorms cached = [] {
        const long grid = 2000001;
        auto d1 = [](double t) {
            const double s = 1.0 - t * t;
            if (s <= 0.0) return 0.0;
            const double b = std::exp(-1.0 / s);
            return b * (-2.0 * t / (s * s));
        };
        auto d2 = [](double t) {
            const double s = 1.0 - t * t;
            if (s <= 0.0) return 0.0;
            const double b = std::exp(-1.0 / s);
            const double v = -2.0 * t / (s * s);
            const double vp = -2.0 / (s * s) - 8.0 * t * t / (s * s * s);
            return b * (v * v + vp);
        };
        auto grid_max = [&](auto&& f) {
            double best = 0.0;
            for (long i = 0; i <= grid; ++i) {
                const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid);
                best = std::max(best, std::abs(f(t)));
            }
            return best;
        };
        return BumpNorms{grid_max(d1), grid_max(d2)};
    }();
    return cached;
}

inline double mother_bump(double t) {
    const double s = 1.0 - t * t;
    return s <= 0.0 ? 0.0 : std::exp(-1.0 / s);
}
}  // namespace detail

inline TestFunction tf_cos() {
    return {"cos", [](double x) { return std::cos(x); }, 1.0, 1.0, {}};
}

inline TestFunction tf_square() {
    // unbounded first derivative: usable for moment checks and curvature
    // bounds, not for Lipschitz comparisons
    return {"x2", [](double x) { return x * x; },
            std::numeric_limits<double>::quiet_NaN(), 2.0, {}};
}

inline TestFunction tf_smooth_bump(double center = 0.0, double width = 1.0) {
    if (!(width > 0.0)) throw ConfigError("tf_smooth_bump: width must be positive");
    const auto& nm = detail::bump_norms();
    TestFunction f;
    f.name = "bump(" + std::to_string(center) + "," + std::to_string(width) + ")";
    f.h = [center, width](double x) { return detail::mother_bump((x - center) / width); };
    f.lip_norm = nm.d1 / width;
    f.curvature_norm = nm.d2 / (width * width);
    f.breakpoints = {center - width, center + width};
    return f;
}

inline TestFunction tf_indicator(double z) {
    TestFunction f;
    f.name = "indicator(" + std::to_string(z) + ")";
    f.h = [z](double x) { return x <= z ? 1.0 : 0.0; };
    f.breakpoints = {z};
    return f;
}

inline TestFunction tf_custom(std::string name, std::function<double(double)> h, double lip_norm,
                              double curvature_norm, std::vector<double> breakpoints = {}) {
    if (!h) throw ConfigError("tf_custom: missing function");
    return {std::move(name), std::move(h), lip_norm, curvature_norm, std::move(breakpoints)};
}

// Registry lookup: "cos", "x2", "bump", "indicator(z)".
inline TestFunction test_function_by_name(const std::string& s) {
    if (s == "cos") return tf_cos();
    if (s == "x2" || s == "x^2") return tf_square();
    if (s == "bump") return tf_smooth_bump();
    if (s.rfind("indicator(", 0) == 0 && s.back() == ')') {
        const std::string num = s.substr(10, s.size() - 11);
        try {
            std::size_t pos = 0;
            const double z = std::stod(num, &pos);
            if (pos == num.size()) return tf_indicator(z);
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("unknown test function \"" + s +
                      "\" (expected cos, x2, bump, or indicator(z))");
}

// E[h(N(0, sigma^2))] by panel Gauss quadrature split at the declared kinks.
inline double gaussian_expectation(const TestFunction& h, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian_expectation: sigma must be positive");
    std::vector<double> cuts;
    cuts.reserve(h.breakpoints.size());
    for (double b : h.breakpoints) cuts.push_back(b / sigma);
    return integrate_gaussian([&](double t) { return h.h(sigma * t); }, cuts);
}

inline DistanceEstimate estimate_testfn_from(const std::vector<double>& values, double sigma,
                                             const TestFunction& h, long n, std::uint64_t seed,
                                             int order_cap = -1) {
    const long reps = static_cast<long>(values.size());
    detail::check_estimator_inputs(reps, sigma, 2);
    if (!h.h) throw ConfigError("estimate_testfn: missing test function");
    std::vector<double> hv(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) hv[i] = h.h(values[i]);
    const double mean = pairwise_sum(hv) / static_cast<double>(reps);
    std::vector<double> sq(hv.size());
    for (std::size_t i = 0; i < hv.size(); ++i) sq[i] = sqr(hv[i] - mean);
    const double sd = std::sqrt(pairwise_sum(sq) / static_cast<double>(reps - 1));
    DistanceEstimate out;
    out.kind = DistanceKind::test_function;
    out.detail = h.name;
    out.estimate = std::abs(mean - gaussian_expectation(h, sigma));
    out.se = sd / std::sqrt(static_cast<double>(reps));
    out.replications = reps;
    out.n = n;
    out.order_cap = order_cap;
    out.sigma = sigma;
    out.seed = seed;
    return out;
}

inline DistanceEstimate estimate_testfn(const CovarianceModel& model, const HermiteExpansion& e,
                                        long n, double sigma, const TestFunction& h, long reps,
                                        std::uint64_t seed, int threads = 1, int order_cap = -1) {
    detail::check_estimator_inputs(reps, sigma, 2);
    const std::vector<double> values = simulate_sums(model, e, n, reps, seed, threads, order_cap);
    return estimate_testfn_from(values, sigma, h, n, seed, order_cap);
}

// ---------------------------------------------------------------------------
// Second-order distance, bounded from below by a fixed 12-function family

// Twelve C^2 functions with sup |h''| <= c2_cap exactly: eight scaled
// cosines (C/w^2) cos(w x + phase) over two phases and four frequencies,
// and four translated smooth bumps rescaled to curvature c2_cap. A finite
// family can only bound the supremum over all of the C^2 ball from below,
// so estimates built from it are flagged lower_bound_only.
inline std::vector<TestFunction> second_order_family(double c2_cap) {
    if (!(c2_cap > 0.0)) throw ConfigError("second_order_family: curvature cap must be positive");
    std::vector<TestFunction> fam;
    fam.reserve(12);
    const double half_pi = std::numbers::pi / 2.0;
    for (double w : {0.5, 1.0, 2.0, 3.0}) {
        for (double phase : {0.0, half_pi}) {
            const double scale = c2_cap / (w * w);
            fam.push_back(tf_custom(
                "cos(" + std::to_string(w) + "x+" + std::to_string(phase) + ")",
                [w, phase, scale](double x) { return scale * std::cos(w * x + phase); },
                scale * w, c2_cap));
        }
    }
    const double width = 1.5;
    const auto& nm = detail::bump_norms();
    for (double center : {-2.0, -0.5, 0.5, 2.0}) {
        TestFunction b = tf_smooth_bump(center, width);
        const double scale = c2_cap / b.curvature_norm;
        const auto base = b.h;
        b.name = "bump@" + std::to_string(center);
        b.h = [base, scale](double x) { return scale * base(x); };
        b.lip_norm = scale * nm.d1 / width;
        b.curvature_norm = c2_cap;
        fam.push_back(std::move(b));
    }
    return fam;
}

inline DistanceEstimate estimate_second_order_from(const std::vector<double>& values,
                                                   double sigma, double c2_cap, long n,
                                                   std::uint64_t seed, int threads = 1,
                                                   int order_cap = -1) {
    detail::check_estimator_inputs(static_cast<long>(values.size()), sigma, 2);
    const std::vector<TestFunction> fam = second_order_family(c2_cap);
    const std::size_t r = values.size();
    const std::size_t nf = fam.size();
    std::vector<double> hv(nf * r);  // hv[j*r + i] = h_j(S_i)
    std::vector<double> exact(nf);
    for (std::size_t j = 0; j < nf; ++j) {
        for (std::size_t i = 0; i < r; ++i) hv[j * r + i] = fam[j].h(values[i]);
        exact[j] = gaussian_expectation(fam[j], sigma);
    }
    auto family_max = [&](const std::vector<std::size_t>& idx) {
        double best = 0.0;
        for (std::size_t j = 0; j < nf; ++j) {
            std::vector<double> row(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) row[i] = hv[j * r + idx[i]];
            best = std::max(best,
                            std::abs(pairwise_sum(row) / static_cast<double>(idx.size()) -
                                     exact[j]));
        }
        return best;
    };
    std::vector<std::size_t> all(r);
    for (std::size_t i = 0; i < r; ++i) all[i] = i;

    DistanceEstimate out;
    out.kind = DistanceKind::second_order;
    out.detail = "family12";
    out.estimate = family_max(all);
    const int resamples = 200;
    std::vector<double> stats(resamples);
    parallel_for(resamples, threads, [&](long b) {
        RandomStream rs(seed, stream_tag::bootstrap | static_cast<std::uint64_t>(b));
        std::vector<std::size_t> idx(r);
        for (std::size_t i = 0; i < r; ++i)
            idx[i] = static_cast<std::size_t>(rs.next_below(r));
        stats[static_cast<std::size_t>(b)] = family_max(idx);
    });
    const double mean = pairwise_sum(stats) / static_cast<double>(resamples);
    std::vector<double> sq(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) sq[i] = sqr(stats[i] - mean);
    out.se = std::sqrt(pairwise_sum(sq) / static_cast<double>(resamples - 1));
    out.replications = static_cast<long>(r);
    out.n = n;
    out.order_cap = order_cap;
    out.sigma = sigma;
    out.seed = seed;
    out.lower_bound_only = true;
    out.note = "finite family: reported value bounds the second-order distance from below";
    return out;
}

inline DistanceEstimate estimate_second_order(const CovarianceModel& model,
                                              const HermiteExpansion& e, long n, double sigma,
                                              double c2_cap, long reps, std::uint64_t seed,
                                              int threads = 1, int order_cap = -1) {
    detail::check_estimator_inputs(reps, sigma, 2);
    const std::vector<double> values = simulate_sums(model, e, n, reps, seed, threads, order_cap);
    return estimate_second_order_from(values, sigma, c2_cap, n, seed, threads, order_cap);
}

// ---------------------------------------------------------------------------
// Rate fits

struct RateFit {
    std::vector<long> n_grid;
    std::vector<double> values;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double predicted = std::numeric_limits<double>::quiet_NaN();
    double tolerance = std::numeric_limits<double>::quiet_NaN();
    bool has_prediction = false;
    bool verdict = false;  // |slope - predicted| <= tolerance
};

inline RateFit fit_rate(const std::vector<long>& n_grid, const std::vector<double>& values,
                        std::optional<double> predicted = std::nullopt,
                        double tolerance = 0.05) {
    if (n_grid.size() != values.size())
        throw ConfigError("fit_rate: grid and value counts differ");
    if (n_grid.size() < 4) throw ConfigError("fit_rate: need at least four grid points");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw ConfigError("fit_rate: grid entries must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw ConfigError("fit_rate: grid must be strictly increasing");
        if (!(values[i] > 0.0))
            throw ConfigError("fit_rate: values must be positive to fit a log-log line (entry " +
                              std::to_string(i) + " is " + std::to_string(values[i]) + ")");
    }
    const auto k = static_cast<double>(n_grid.size());
    std::vector<double> xs(n_grid.size()), ys(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        xs[i] = std::log(static_cast<double>(n_grid[i]));
        ys[i] = std::log(values[i]);
    }
    const double xbar = pairwise_sum(xs) / k;
    const double ybar = pairwise_sum(ys) / k;
    long double sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += sqr(xs[i] - xbar);
        sxy += static_cast<long double>(xs[i] - xbar) * (ys[i] - ybar);
    }
    RateFit fit;
    fit.n_grid = n_grid;
    fit.values = values;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = ybar - fit.slope * xbar;
    long double ssr = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i)
        ssr += sqr(ys[i] - (fit.intercept + fit.slope * xs[i]));
    fit.slope_se = std::sqrt(static_cast<double>(ssr / (k - 2.0) / sxx));
    if (predicted) {
        fit.has_prediction = true;
        fit.predicted = *predicted;
        fit.tolerance = tolerance;
        fit.verdict = std::abs(fit.slope - fit.predicted) <= tolerance;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Result rows

struct ExperimentRow {
    std::string experiment;
    std::string kind;
    long n = 0;
    int order_cap = -1;
    long replications = 0;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double bound = std::numeric_limits<double>::quiet_NaN();
    std::string verdict;  // PASS / FAIL under "estimate <= bound + 3 se"; empty without a bound
    std::uint64_t seed = 0;
};

inline ExperimentRow make_row(const std::string& experiment, const DistanceEstimate& est,
                              std::optional<double> bound = std::nullopt) {
    ExperimentRow row;
    row.experiment = experiment;
    row.kind = est.kind_label();
    row.n = est.n;
    row.order_cap = est.order_cap;
    row.replications = est.replications;
    row.estimate = est.estimate;
    row.se = est.se;
    row.seed = est.seed;
    if (bound) {
        row.bound = *bound;
        row.verdict = est.estimate <= *bound + 3.0 * est.se ? "PASS" : "FAIL";
    }
    return row;
}

}  // namespace bmb
