#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "bmb/bounds.hpp"

using namespace bmb;

namespace {

HermiteExpansion identity_expansion() {
    // Exact expansion of f(x) = x: a single first-order coefficient.
    HermiteExpansion e;
    e.name = "identity";
    e.dimension = 1;
    e.max_order = 3;
    e.rank = 1;
    e.mean = 0.0;
    e.total_energy = 1.0;
    e.energy_tail = 0.0;
    e.coeff[{1}] = 1.0;
    e.energy_by_order = {0.0, 1.0, 0.0, 0.0};
    e.fn = [](const std::vector<double>& x) { return x[0]; };
    return e;
}

}  // namespace

TEST_CASE("contraction scale coefficients evaluate in closed form") {
    const CovarianceModel iid = CovarianceModel::fgn(0.5);
    CHECK(gamma_coefficient(iid, 2, 2, 1, 20000) == Catch::Approx(0.01).epsilon(1e-14));
    CHECK(gamma_coefficient(iid, 2, 2, 1, 2) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_coefficient(iid, 3, 4, 2, 8) ==
          Catch::Approx(std::sqrt(2.0 / 8.0)).epsilon(1e-14));

    const CovarianceModel fgn06 = CovarianceModel::fgn(0.6);
    CHECK(gamma_coefficient(fgn06, 2, 5, 2, 64, 10000) ==
          gamma_coefficient(fgn06, 2, 5, 3, 64, 10000));
    CHECK_THROWS_AS(gamma_coefficient(iid, 3, 2, 1, 16), ConfigError);
}

TEST_CASE("independent-sequence benchmark evaluates in closed form") {
    const CovarianceModel iid = CovarianceModel::fgn(0.5);
    const BoundReport rep = bound_hermite_case(iid, 2, 100, BoundKind::c2);
    CHECK(rep.a1 == 0.0);
    CHECK(rep.a1_general_form == 0.0);
    CHECK(rep.a2.at(2) == 0.0);
    CHECK(rep.a3.at(2) == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(rep.a4.at(2) == 0.0);
    CHECK(rep.a5.at(2) == 0.0);
    CHECK(rep.bound_c2 == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(rep.bound == rep.bound_c2);
    CHECK(rep.n_star == 2);
    CHECK(rep.dependence_length == 0);
    CHECK(rep.theta_total == 1.0);
    CHECK(rep.two_k_plus_theta == 1.0);
    CHECK(rep.sigma2 == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(rep.sigma2_tail == 0.0);
    CHECK_FALSE(rep.degenerate);
    CHECK(rep.gamma.at({2, 1}) == Catch::Approx(std::sqrt(0.02)).epsilon(1e-14));

    const BoundReport lip = bound_hermite_case(iid, 2, 100, BoundKind::lipschitz);
    CHECK(lip.bound == Catch::Approx(2.0 * 0.2 / std::sqrt(2.0)).epsilon(1e-12));
    const BoundReport kol = bound_hermite_case(iid, 2, 100, BoundKind::kolmogorov);
    CHECK(kol.bound == lip.bound);

    for (long n : {400L, 1600L, 6400L})
        CHECK(bound_hermite_case(iid, 2, n, BoundKind::c2).bound ==
              Catch::Approx(2.0 / std::sqrt(static_cast<double>(n))).epsilon(1e-12));
}

TEST_CASE("general bound matches the expansion benchmark") {
    const CovarianceModel iid = CovarianceModel::fgn(0.5);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const BoundReport rep = bound_theorem(iid, e2, 100, BoundKind::c2);
    CHECK(rep.bound_c2 == Catch::Approx(0.2).epsilon(1e-5));
    CHECK(rep.n_star == 2);
    CHECK(rep.a1 == 0.0);
    CHECK(rep.a2.at(2) < 1e-4);
    CHECK(rep.sigma2 == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(rep.q == 2);
    CHECK(rep.expansion_id == "hermite(2)");

    // formula coupling: the Kolmogorov bound is exactly sqrt(2)/sigma times
    // the square root of twice the per-unit Lipschitz bound
    const BoundReport lip = bound_theorem(iid, e2, 100, BoundKind::lipschitz);
    CHECK(lip.bound_kolmogorov ==
          std::numbers::sqrt2 / std::sqrt(lip.sigma2_lower) *
              std::sqrt(2.0 * lip.bound_lipschitz));
}

TEST_CASE("term table grows with the cutoff and shrinks with the window") {
    const CovarianceModel fgn06 = CovarianceModel::fgn(0.6);
    const HermiteExpansion ea = expand(fn_abs());
    REQUIRE(ea.rank == 2);
    const BoundReport rep = bound_theorem(fgn06, ea, 1024, BoundKind::c2, 20000);
    CHECK(rep.order_cap == 20);
    CHECK(rep.n_star >= rep.q);
    CHECK(rep.n_star <= rep.order_cap);
    double prev2 = std::numeric_limits<double>::infinity();
    for (int N = rep.q; N <= rep.order_cap; ++N) {
        CHECK(rep.a2.at(N) >= 0.0);
        CHECK(rep.a3.at(N) >= 0.0);
        CHECK(rep.a2.at(N) <= prev2 * (1.0 + 1e-12));
        prev2 = rep.a2.at(N);
        if (N > rep.q) {
            CHECK(rep.a3.at(N) >= rep.a3.at(N - 1));
            CHECK(rep.a4.at(N) >= rep.a4.at(N - 1));
            CHECK(rep.a5.at(N) >= rep.a5.at(N - 1));
        }
    }
    // the reported minimum is the minimum of the term table
    double best = std::numeric_limits<double>::infinity();
    for (int N = rep.q; N <= rep.order_cap; ++N)
        best = std::min(best, rep.a2.at(N) + rep.a3.at(N) + rep.a4.at(N) + rep.a5.at(N));
    CHECK(rep.bound_c2 == rep.a1 + best);

    double prev_c2 = std::numeric_limits<double>::infinity();
    double prev_kol = std::numeric_limits<double>::infinity();
    for (long n : {1024L, 4096L, 16384L}) {
        const BoundReport r = bound_theorem(fgn06, ea, n, BoundKind::kolmogorov, 20000);
        CHECK(r.bound_c2 < prev_c2);
        CHECK(r.bound_kolmogorov < prev_kol);
        prev_c2 = r.bound_c2;
        prev_kol = r.bound_kolmogorov;
    }
}

TEST_CASE("bound inputs are validated") {
    const HermiteExpansion e2 = expand(fn_hermite(2));
    CHECK_THROWS_AS(bound_theorem(CovarianceModel::fgn(0.75), e2, 64, BoundKind::c2),
                    ConfigError);
    CHECK_THROWS_AS(bound_theorem(CovarianceModel::fgn(0.5), e2, 1, BoundKind::c2),
                    ConfigError);
    CHECK_THROWS_AS(
        bound_hermite_case(CovarianceModel::table(2, {{1, 0, 0, 1}}), 2, 16, BoundKind::c2),
        ConfigError);
    CHECK_THROWS_AS(a_terms(CovarianceModel::fgn(0.5), e2, 64, 1), ConfigError);

    // a cross-correlated pair with dependence length 2: small n rejected
    const CovarianceModel cross =
        CovarianceModel::table(2, {{1.0, 0.0, 0.0, 1.0}, {0.0, 0.6, 0.0, 0.0}});
    ExpandOptions opt;
    opt.max_order = 6;
    const FunctionSpec prod{
        "x1*x2", 2, [](const std::vector<double>& x) { return x[0] * x[1]; }, {}};
    const HermiteExpansion ep = expand(prod, opt);
    CHECK(cross.dependence_length() == 2);
    CHECK_THROWS_AS(bound_theorem(cross, ep, 2, BoundKind::c2, 1000), ConfigError);
    const BoundReport ok = bound_theorem(cross, ep, 8, BoundKind::c2, 1000);
    CHECK(ok.dependence_length == 2);
    CHECK(ok.bound_c2 > 0.0);
    CHECK(std::isfinite(ok.bound_c2));

    // vanishing limit variance: smooth-class bound stays finite, the
    // distribution-distance bounds are reported infinite with a diagnostic
    const CovarianceModel ma1 = CovarianceModel::table(1, {{1.0}, {-0.5}});
    const HermiteExpansion ex = identity_expansion();
    const BoundReport deg = bound_theorem(ma1, ex, 32, BoundKind::lipschitz, 1000);
    CHECK(deg.degenerate);
    CHECK(deg.sigma2 == 0.0);
    CHECK(std::isinf(deg.bound_lipschitz));
    CHECK(std::isinf(deg.bound_kolmogorov));
    CHECK(std::isinf(deg.bound));
    CHECK(std::isfinite(deg.bound_c2));
    CHECK_FALSE(deg.tail_flags.empty());
}

TEST_CASE("term extraction is independent of the search cap") {
    const CovarianceModel fgn06 = CovarianceModel::fgn(0.6);
    const HermiteExpansion e2 = expand(fn_hermite(2));
    const ATerms at = a_terms(fgn06, e2, 128, 3, 10000);
    const BoundReport rep = bound_theorem(fgn06, e2, 128, BoundKind::c2, 10000, 5);
    CHECK(at.a1 == rep.a1);
    CHECK(at.a2 == rep.a2.at(3));
    CHECK(at.a3 == rep.a3.at(3));
    CHECK(at.a4 == rep.a4.at(3));
    CHECK(at.a5 == rep.a5.at(3));
    CHECK(at.a1 >= 0.0);
    CHECK(at.a3 > 0.0);
    CHECK(at.a4 > 0.0);
}

TEST_CASE("single-polynomial window term carries the printed extra factor") {
    const CovarianceModel fgn06 = CovarianceModel::fgn(0.6);
    const BoundReport cor = bound_hermite_case(fgn06, 2, 256, BoundKind::c2, 100000);
    CHECK(cor.theta_total > 1.0);
    CHECK(cor.a1 ==
          Catch::Approx(cor.theta_total * cor.a1_general_form).epsilon(1e-12));

    const HermiteExpansion e2 = expand(fn_hermite(2));
    const BoundReport gen = bound_theorem(fgn06, e2, 256, BoundKind::c2, 100000);
    CHECK(cor.bound_c2 >= gen.bound_c2 - 1e-6);
    CHECK(cor.bound_c2 <= gen.bound_c2 * cor.theta_total + 1e-6);

    const BoundReport lip = bound_hermite_case(fgn06, 2, 256, BoundKind::lipschitz, 100000);
    const BoundReport kol = bound_hermite_case(fgn06, 2, 256, BoundKind::kolmogorov, 100000);
    CHECK(lip.bound == kol.bound);
    CHECK(lip.bound == Catch::Approx(2.0 * cor.bound_c2 / std::sqrt(lip.sigma2_lower))
                           .epsilon(1e-12));
}

TEST_CASE("stein solution solves its equation") {
    const SteinSolution at0 = stein_solution(0.0, 0.0);
    CHECK(at0.value == Catch::Approx(0.6266570686577501).epsilon(1e-15));
    CHECK(at0.derivative == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(stein_solution(0.0, 1e-9).derivative < -0.49);

    CHECK(stein_solution(0.0, 1.25).value ==
          Catch::Approx(stein_solution(0.0, -1.25).value).epsilon(1e-14));

    const double h = 1e-3;
    for (double z : {-2.0, 0.0, 2.0}) {
        double max_resid = 0.0, max_deriv = 0.0, max_value = 0.0;
        for (int i = 0; i <= 240; ++i) {
            const double x = -6.0 + i * 0.05;
            const SteinSolution s = stein_solution(z, x);
            max_deriv = std::max(max_deriv, std::abs(s.derivative));
            max_value = std::max(max_value, s.value);
            if (std::abs(x - z) <= 3.0 * h) continue;
            const double d_num = (-stein_solution(z, x + 2 * h).value +
                                  8.0 * stein_solution(z, x + h).value -
                                  8.0 * stein_solution(z, x - h).value +
                                  stein_solution(z, x - 2 * h).value) /
                                 (12.0 * h);
            const double ind = x <= z ? 1.0 : 0.0;
            max_resid = std::max(max_resid,
                                 std::abs(ind - normal_cdf(z) - d_num + x * s.value));
        }
        CHECK(max_resid <= 1e-10);
        CHECK(max_deriv <= 1.0 + 1e-10);
        CHECK(max_value <= 0.6266570686577502);
    }

    CHECK(stein_solution(2.0, 30.0).value < 0.05);
    CHECK(stein_solution(2.0, -30.0).value < 0.05);
}

TEST_CASE("rate prediction reproduces the case table") {
    const RatePrediction fast = predict_rate(-1.5, 2);
    CHECK(fast.regime == "fast-decay");
    CHECK(fast.exponent == -0.5);
    CHECK(fast.upper == -1.0);
    CHECK(std::isinf(fast.lower));

    const RatePrediction mid = predict_rate(-0.6, 3);
    CHECK(mid.regime == "moderate-decay");
    CHECK(mid.exponent == Catch::Approx(-0.3));
    CHECK(mid.lower == -1.0);
    CHECK(mid.upper == -0.5);

    const RatePrediction slow = predict_rate(-0.6, 2);
    CHECK(slow.regime == "slow-decay");
    CHECK(slow.exponent == Catch::Approx(-0.1));
    CHECK(slow.lower == -1.0);
    CHECK(slow.upper == -0.5);

    const RatePrediction f6 = predict_rate_fgn(0.6, 2);
    CHECK(f6.a == Catch::Approx(-0.8));
    CHECK(f6.exponent == Catch::Approx(-0.3));
    CHECK(f6.source == "fractional-noise");
    CHECK(predict_rate_fgn(0.4, 2).exponent == -0.5);

    CHECK_THROWS_AS(predict_rate(-1.0, 2), ConfigError);
    CHECK_THROWS_AS(predict_rate(-0.5, 3), ConfigError);
    CHECK_THROWS_AS(predict_rate(-0.4, 2), ConfigError);
    CHECK_THROWS_AS(predict_rate(-2.0, 1), ConfigError);
    CHECK_THROWS_AS(predict_rate_fgn(0.8, 2), ConfigError);
    CHECK_THROWS_AS(predict_rate_fgn(1.1, 2), ConfigError);
}

TEST_CASE("window decay diagnostic tracks the grid") {
    const CovarianceModel slow = CovarianceModel::poly_decay(1.0, -0.6);
    const WindowDecayDiagnostic d =
        check_gamma_decay(slow, 2, 1, {1000L, 10000L, 100000L, 1000000L});
    CHECK(d.first == Catch::Approx(2.41466).epsilon(2e-4));
    CHECK(d.last == Catch::Approx(1.25304).epsilon(2e-4));
    CHECK(d.decay_ratio == Catch::Approx(1.927).epsilon(1e-3));
    CHECK(d.monotone_nonincreasing);

    const WindowDecayDiagnostic ind =
        check_gamma_decay(CovarianceModel::fgn(0.5), 2, 1, {4L, 16L});
    CHECK(ind.values[0] == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(ind.values[1] == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(ind.decay_ratio == Catch::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(check_gamma_decay(slow, 2, 2, {10L}), ConfigError);
    CHECK_THROWS_AS(check_gamma_decay(slow, 2, 0, {10L}), ConfigError);
    CHECK_THROWS_AS(check_gamma_decay(slow, 2, 1, {}), ConfigError);
    CHECK_THROWS_AS(check_gamma_decay(slow, 2, 1, {0L}), ConfigError);
}

TEST_CASE("bound kind names round-trip") {
    CHECK(parse_bound_kind("c2") == BoundKind::c2);
    CHECK(parse_bound_kind("C2") == BoundKind::c2);
    CHECK(parse_bound_kind("Lipschitz") == BoundKind::lipschitz);
    CHECK(parse_bound_kind("KOL") == BoundKind::kolmogorov);
    CHECK(std::string(bound_kind_name(BoundKind::kolmogorov)) == "KOLMOGOROV");
    CHECK_THROWS_AS(parse_bound_kind("total-variation"), ConfigError);
}
