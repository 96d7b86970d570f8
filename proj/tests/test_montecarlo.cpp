#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bmb/bounds.hpp"
#include "bmb/montecarlo.hpp"

using namespace bmb;

namespace {

std::vector<double> seeded_sample(std::size_t count, std::uint64_t seed, double scale) {
    RandomStream rs(seed, stream_tag::synthetic);
    std::vector<double> out(count);
    for (auto& v : out) v = scale * rs.next_normal();
    return out;
}

}  // namespace

TEST_CASE("kolmogorov statistic is the exact supremum") {
    // two points by hand: jumps at -1 and 0.5
    const std::vector<double> two = {-1.0, 0.5};
    const double d2 = kolmogorov_statistic_sorted(two, 1.0);
    CHECK(d2 == Catch::Approx(0.5 - normal_cdf(-1.0)).margin(1e-15));

    // ties collapse into one double-height jump
    const std::vector<double> tied = {0.0, 0.0, 1.0};
    CHECK(kolmogorov_statistic_sorted(tied, 1.0) == Catch::Approx(0.5).margin(1e-15));

    // the scan dominates a dense grid search and is attained at a jump
    std::vector<double> sample = seeded_sample(50, 3, 1.0);
    std::sort(sample.begin(), sample.end());
    const double sigma = 0.8;
    const double stat = kolmogorov_statistic_sorted(sample, sigma);
    double grid_max = 0.0;
    const long grid = 200000;
    for (long g = 0; g <= grid; ++g) {
        const double z = -5.0 + 10.0 * static_cast<double>(g) / static_cast<double>(grid);
        const auto le = std::upper_bound(sample.begin(), sample.end(), z) - sample.begin();
        const double ecdf = static_cast<double>(le) / static_cast<double>(sample.size());
        grid_max = std::max(grid_max, std::abs(ecdf - normal_cdf(z / sigma)));
    }
    CHECK(stat >= grid_max - 1e-12);
    CHECK(stat <= grid_max + 1e-4);

    CHECK_THROWS_AS(kolmogorov_statistic_sorted({}, 1.0), ConfigError);
}

TEST_CASE("wasserstein statistic integrates the quantile gap exactly") {
    // single atom at the origin: integral of |Phi^{-1}| is 2 phi(0)
    const double root_two_over_pi = std::sqrt(2.0 / std::numbers::pi);
    CHECK(wasserstein_statistic_sorted({0.0}, 1.0) ==
          Catch::Approx(root_two_over_pi).margin(1e-13));
    CHECK(wasserstein_statistic_sorted({0.0}, 2.0) ==
          Catch::Approx(2.0 * root_two_over_pi).margin(1e-13));

    // brute-force midpoint integration agrees on a seeded sample
    std::vector<double> sample = seeded_sample(50, 4, 1.1);
    std::sort(sample.begin(), sample.end());
    const double sigma = 1.3;
    const double stat = wasserstein_statistic_sorted(sample, sigma);
    const long cells = 2000000;
    long double brute = 0.0L;
    for (long g = 0; g < cells; ++g) {
        const double u = (static_cast<double>(g) + 0.5) / static_cast<double>(cells);
        const auto i = std::min<std::size_t>(
            sample.size() - 1,
            static_cast<std::size_t>(u * static_cast<double>(sample.size())));
        brute += std::abs(sample[i] - sigma * normal_quantile(u));
    }
    brute /= static_cast<long double>(cells);
    CHECK(stat == Catch::Approx(static_cast<double>(brute)).epsilon(2e-5));

    // paired form: identical samples at distance zero, shifted pair by hand
    const std::vector<double> v = {0.3, -1.2, 4.0};
    CHECK(wasserstein_paired(v, v) == 0.0);
    CHECK(wasserstein_paired({0.0, 2.0}, {3.0, 1.0}) == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(wasserstein_paired({1.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("synthetic normal calibration matches the closed form") {
    // W1(N(0,1), N(0,4)) = |1-2| sqrt(2/pi)
    const double target = std::sqrt(2.0 / std::numbers::pi);
    const long reps = 100000;
    const std::vector<double> draws = synthetic_normal_sample(reps, 1.0, 77, 8);
    const DistanceEstimate west = estimate_wasserstein_from(draws, 2.0, 0, 77, 8);
    CHECK(std::abs(west.estimate - target) <= 0.02 * target);
    CHECK(std::abs(west.estimate - target) <= 3.0 * west.se);
    CHECK(west.kind_label() == "W");
    CHECK(west.replications == reps);

    // same law: the Kolmogorov statistic stays inside its own 99% DKW band
    const DistanceEstimate kol = estimate_kolmogorov_from(draws, 1.0, 0, 77, 8);
    CHECK(kol.estimate <= kol.dkw_99);
    CHECK(kol.dkw_99 == Catch::Approx(dkw_bound(reps, 0.99)).margin(1e-15));
    CHECK(kol.se > 0.0);
}

TEST_CASE("distance estimates are independent of worker count") {
    const std::vector<double> draws = synthetic_normal_sample(2000, 1.0, 5, 4);
    const std::vector<double> draws1 = synthetic_normal_sample(2000, 1.0, 5, 1);
    REQUIRE(draws == draws1);

    const DistanceEstimate w1 = estimate_wasserstein_from(draws, 1.0, 0, 5, 1);
    const DistanceEstimate w8 = estimate_wasserstein_from(draws, 1.0, 0, 5, 8);
    REQUIRE(w1.estimate == w8.estimate);
    REQUIRE(w1.se == w8.se);

    const DistanceEstimate k1 = estimate_kolmogorov_from(draws, 1.0, 0, 5, 1);
    const DistanceEstimate k8 = estimate_kolmogorov_from(draws, 1.0, 0, 5, 8);
    REQUIRE(k1.estimate == k8.estimate);
    REQUIRE(k1.se == k8.se);

    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const DistanceEstimate s1 = estimate_second_order(wn, e2, 64, std::sqrt(2.0), 2.0, 1500, 9, 1);
    const DistanceEstimate s8 = estimate_second_order(wn, e2, 64, std::sqrt(2.0), 2.0, 1500, 9, 8);
    REQUIRE(s1.estimate == s8.estimate);
    REQUIRE(s1.se == s8.se);

    const DistanceEstimate t1 = estimate_testfn(wn, e2, 64, std::sqrt(2.0), tf_cos(), 1500, 9, 1);
    const DistanceEstimate t8 = estimate_testfn(wn, e2, 64, std::sqrt(2.0), tf_cos(), 1500, 9, 8);
    REQUIRE(t1.estimate == t8.estimate);
    REQUIRE(t1.se == t8.se);
}

TEST_CASE("test function expectations are exact") {
    for (double sigma : {0.7, 1.0, 2.0}) {
        CHECK(gaussian_expectation(tf_cos(), sigma) ==
              Catch::Approx(std::exp(-0.5 * sigma * sigma)).margin(1e-12));
        CHECK(gaussian_expectation(tf_square(), sigma) ==
              Catch::Approx(sigma * sigma).margin(1e-12));
        CHECK(gaussian_expectation(tf_indicator(0.4), sigma) ==
              Catch::Approx(normal_cdf(0.4 / sigma)).margin(1e-12));
    }

    // bump expectation against brute-force integration
    const TestFunction bump = tf_smooth_bump(0.5, 1.5);
    const double sigma = 1.2;
    const long cells = 400000;
    long double brute = 0.0L;
    for (long g = 0; g < cells; ++g) {
        const double x = -10.0 + 20.0 * (static_cast<double>(g) + 0.5) / cells;
        brute += bump.h(x) * normal_pdf(x / sigma) / sigma * (20.0 / cells);
    }
    CHECK(gaussian_expectation(bump, sigma) ==
          Catch::Approx(static_cast<double>(brute)).margin(1e-9));

    // scaling laws of the declared norms
    CHECK(tf_smooth_bump(0.0, 1.0).curvature_norm ==
          Catch::Approx(4.0 * tf_smooth_bump(0.0, 2.0).curvature_norm).margin(1e-12));
    CHECK(tf_smooth_bump(0.0, 1.0).lip_norm ==
          Catch::Approx(2.0 * tf_smooth_bump(0.0, 2.0).lip_norm).margin(1e-12));
    CHECK(tf_smooth_bump(0.0, 1.0).lip_norm > 0.0);
    CHECK(std::isnan(tf_square().lip_norm));
    CHECK(tf_square().curvature_norm == 2.0);

    // registry round trips
    CHECK(test_function_by_name("cos").name == "cos");
    CHECK(test_function_by_name("x2").name == "x2");
    CHECK(test_function_by_name("bump").name.rfind("bump", 0) == 0);
    const TestFunction ind = test_function_by_name("indicator(1.5)");
    REQUIRE(ind.breakpoints.size() == 1);
    CHECK(ind.breakpoints[0] == 1.5);
    CHECK(ind.h(1.5) == 1.0);
    CHECK(ind.h(1.5000001) == 0.0);
    CHECK_THROWS_AS(test_function_by_name("nope"), ConfigError);
    CHECK_THROWS_AS(test_function_by_name("indicator(abc)"), ConfigError);

    // the twelve-member family keeps the declared curvature cap exactly
    const std::vector<TestFunction> fam = second_order_family(2.0);
    REQUIRE(fam.size() == 12);
    for (const auto& f : fam) {
        CHECK(f.curvature_norm == Catch::Approx(2.0).margin(1e-12));
        CHECK(f.lip_norm > 0.0);
        CHECK(!f.name.empty());
    }
    CHECK_THROWS_AS(second_order_family(0.0), ConfigError);
}

TEST_CASE("moment test functions hit the exact benchmark") {
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const double sigma = std::sqrt(2.0);

    // E[S_n^2] = 2 for every n in the independent case
    const DistanceEstimate sq =
        estimate_testfn(wn, e2, 50, sigma, tf_square(), 4000, 123, 8);
    CHECK(sq.estimate <= 4.0 * sq.se);
    CHECK(sq.kind_label() == "H:x2");

    // constant functions are reproduced exactly
    const DistanceEstimate flat = estimate_testfn(
        wn, e2, 8, sigma, tf_custom("one", [](double) { return 1.0; }, 0.0, 0.0), 500, 123, 8);
    CHECK(flat.estimate <= 1e-12);
    CHECK(flat.se <= 1e-12);

    // cos difference obeys the curvature-weighted bound 2/sqrt(n) at n = 100
    const DistanceEstimate cosd =
        estimate_testfn(wn, e2, 100, sigma, tf_cos(), 4000, 123, 8);
    CHECK(cosd.estimate <= 0.2 + 3.0 * cosd.se);
}

TEST_CASE("kolmogorov null case stays inside the DKW band") {
    // first-order polynomial of an independent sequence: S_n is exactly N(0,1)
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e1 = expand(fn_hermite(1));
    const DistanceEstimate kol = estimate_kolmogorov(wn, e1, 16, 1.0, 10000, 321, 8);
    CHECK(kol.estimate <= dkw_bound(10000, 0.99));
    CHECK(kol.estimate >= 0.0);
    CHECK(kol.n == 16);
}

TEST_CASE("bound validity holds for the independent benchmark") {
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const double sigma = std::sqrt(2.0);
    const long n = 1000;
    const long reps = 10000;

    const std::vector<double> sums = simulate_sums(wn, e2, n, reps, 2024, 8);

    const BoundReport lip = bound_hermite_case(wn, 2, n, BoundKind::lipschitz);
    const DistanceEstimate west = estimate_wasserstein_from(sums, sigma, n, 2024, 8);
    CHECK(west.estimate <= lip.bound + 3.0 * west.se);

    const BoundReport kolb = bound_hermite_case(wn, 2, n, BoundKind::kolmogorov);
    const DistanceEstimate kol = estimate_kolmogorov_from(sums, sigma, n, 2024, 8);
    CHECK(kol.estimate <= kolb.bound + 3.0 * kol.se);

    // result rows carry the pass verdict
    const ExperimentRow row = make_row("iid-q2", west, lip.bound);
    CHECK(row.verdict == "PASS");
    CHECK(row.kind == "W");
    CHECK(row.n == n);
    CHECK(row.estimate == west.estimate);
    const ExperimentRow unbounded = make_row("iid-q2", west);
    CHECK(unbounded.verdict.empty());
    CHECK(std::isnan(unbounded.bound));
    DistanceEstimate fixed;
    fixed.estimate = 1.0;
    fixed.se = 0.01;
    CHECK(make_row("synthetic", fixed, 0.5).verdict == "FAIL");
    CHECK(make_row("synthetic", fixed, 0.98).verdict == "PASS");  // inside 3 SE
}

TEST_CASE("second-order family bounds the distance from below") {
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const double sigma = std::sqrt(2.0);
    const long n = 200;
    const DistanceEstimate est =
        estimate_second_order(wn, e2, n, sigma, 2.0, 3000, 55, 8);
    CHECK(est.lower_bound_only);
    CHECK(est.kind_label() == "C:family12");
    CHECK(est.estimate >= 0.0);
    CHECK(est.se > 0.0);

    // every family member obeys the curvature-weighted theorem bound, so the
    // family maximum must stay under cap * (A1 + A3) up to MC noise
    const BoundReport rep = bound_hermite_case(wn, 2, n, BoundKind::c2);
    CHECK(est.estimate <= 2.0 * rep.bound_c2 + 4.0 * est.se);
}

TEST_CASE("rate fits recover exact and stochastic slopes") {
    // exact power law
    std::vector<long> grid;
    std::vector<double> vals;
    for (long n = 1024; n <= 65536; n *= 2) {
        grid.push_back(n);
        vals.push_back(3.0 * std::pow(static_cast<double>(n), -0.5));
    }
    const RateFit exact = fit_rate(grid, vals, -0.5, 0.02);
    CHECK(exact.slope == Catch::Approx(-0.5).margin(1e-9));
    CHECK(exact.intercept == Catch::Approx(std::log(3.0)).margin(1e-9));
    CHECK(exact.slope_se <= 1e-9);
    CHECK(exact.has_prediction);
    CHECK(exact.verdict);

    // curvature-bound series for a long-memory model tracks the predicted slope
    const CovarianceModel fgn06 = CovarianceModel::fgn(0.6);
    std::vector<double> bounds;
    for (long n : grid)
        bounds.push_back(bound_hermite_case(fgn06, 2, n, BoundKind::c2, 100000).bound_c2);
    const RatePrediction pred = predict_rate_fgn(0.6, 2);
    const RateFit series = fit_rate(grid, bounds, pred.exponent, 0.05);
    CHECK(pred.exponent == Catch::Approx(-0.3).margin(1e-15));
    CHECK(series.verdict);

    // empirical Wasserstein slope in the independent second-order case
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    std::vector<long> ns = {64, 128, 256, 512};
    std::vector<double> west;
    for (long n : ns) {
        std::vector<double> sums = simulate_sums(wn, e2, n, 20000, 909, 8);
        std::sort(sums.begin(), sums.end());
        west.push_back(wasserstein_statistic_sorted(sums, std::sqrt(2.0)));
    }
    const RateFit emp = fit_rate(ns, west, -0.5, 0.15);
    CHECK(emp.verdict);

    // validation
    CHECK_THROWS_AS(fit_rate({1, 2, 3}, {1.0, 1.0, 1.0}, -0.5), ConfigError);
    CHECK_THROWS_AS(fit_rate({1, 2, 3, 2}, {1.0, 1.0, 1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(fit_rate({1, 2, 3, 4}, {1.0, 1.0, 0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(fit_rate({1, 2, 3, 4}, {1.0, 1.0, -1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(fit_rate({1, 2, 3, 4}, {1.0, 1.0, 1.0}), ConfigError);
    const RateFit free = fit_rate({1, 2, 4, 8}, {1.0, 0.5, 0.25, 0.125});
    CHECK(!free.has_prediction);
    CHECK(!free.verdict);
    CHECK(free.slope == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("estimators validate their inputs") {
    const CovarianceModel wn = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    CHECK_THROWS_AS(estimate_kolmogorov(wn, e2, 16, 1.0, 999, 1), ConfigError);
    CHECK_THROWS_AS(estimate_wasserstein(wn, e2, 16, 0.0, 2000, 1), ConfigError);
    CHECK_THROWS_AS(estimate_wasserstein(wn, e2, 16, -1.0, 2000, 1), ConfigError);
    CHECK_THROWS_AS(estimate_testfn(wn, e2, 16, 1.0, tf_cos(), 1, 1), ConfigError);
    CHECK_THROWS_AS(estimate_second_order(wn, e2, 16, 0.0, 2.0, 2000, 1), ConfigError);
    CHECK_THROWS_AS(simulate_sums(wn, e2, 16, 0, 1), ConfigError);
    CHECK_THROWS_AS(synthetic_normal_sample(0, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(gaussian_expectation(tf_cos(), 0.0), ConfigError);
    CHECK_THROWS_AS(dkw_bound(0, 0.99), ConfigError);
    CHECK_THROWS_AS(dkw_bound(100, 1.0), ConfigError);
    CHECK_THROWS_AS(dkw_bound(100, 0.0), ConfigError);
    CHECK_THROWS_AS(
        bootstrap_se({}, 1, [](std::vector<double>&) { return 0.0; }), ConfigError);
    CHECK_THROWS_AS(
        bootstrap_se({1.0, 2.0}, 1, [](std::vector<double>&) { return 0.0; }, 1),
        ConfigError);
    CHECK_THROWS_AS(bootstrap_se({1.0, 2.0}, 1, nullptr), ConfigError);
    CHECK_THROWS_AS(tf_smooth_bump(0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(tf_custom("f", nullptr, 1.0, 1.0), ConfigError);
}
