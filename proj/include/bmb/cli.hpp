#pragma once

// Command-line front end: a JSON experiment config drives five subcommands
// (bound, distance, rates, verify-chaos, simulate-dump). Every command echoes
// the fully-resolved config (all defaults materialized) so a run can be
// replayed bit-exactly from its own output.
//
// Exit codes: 0 success, 2 config error, 3 verification failure,
// 4 numerical-cap exceeded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bmb/bounds.hpp"
#include "bmb/chaos.hpp"
#include "bmb/covariance.hpp"
#include "bmb/hermite.hpp"
#include "bmb/io.hpp"
#include "bmb/montecarlo.hpp"
#include "bmb/parallel.hpp"
#include "bmb/simulate.hpp"

namespace bmb {

// ---------------------------------------------------------------------------
// Experiment configuration

struct ModelConfig {
    std::string kind = "fgn";  // fgn | poly | table
    double hurst = 0.5;        // fgn
    double c = 1.0;            // poly: r(k) = c k^a for k >= 1
    double a = -1.5;           // poly
    int dimension = 1;         // table
    std::vector<std::vector<double>> matrices;  // table: row-major d x d per lag
};

struct FunctionConfig {
    // hermite | abs | sign | indicator | polynomial | product
    // (product is x_1 ... x_d with d taken from the model dimension)
    std::string name = "hermite";
    int q = 2;                     // hermite order
    double z = 0.0;                // indicator threshold
    std::vector<double> coefficients;  // polynomial, lowest degree first
};

struct VerifyConfig {
    int pairs = 200;          // product-formula sweep iterations
    int kernels = 200;        // variance-identity sweep iterations
    int dimension_cap = 3;    // random kernel index dimension in [1, cap]
    int order_cap = 3;        // random kernel order in [1, cap]
    double tolerance = 1e-9;  // relative tolerance for the equality checks
};

struct ExperimentConfig {
    std::string experiment = "experiment";
    ModelConfig model;
    FunctionConfig function;
    std::vector<long> n_grid = {100};
    int order_cap = 20;       // chaos cutoff searched by the bounds
    int truncate_order = -1;  // simulate f truncated to this order (-1 = full)
    long max_lag = 1000000;   // lag horizon for dependence sums
    std::vector<std::string> bound_kinds = {"C2"};
    std::string method = "auto";  // auto | general | single-polynomial
    std::vector<std::string> distances = {"W", "KOL"};
    std::vector<std::string> test_functions;
    double curvature_cap = 2.0;  // |h''| cap for the second-order family
    long replications = 10000;
    std::uint64_t seed = 12345;
    int threads = 0;     // 0 = BM_THREADS or 1
    double sigma = 0.0;  // 0 = derive from the limit variance
    std::vector<std::string> rate_series = {"bound"};
    double rate_tolerance = 0.05;
    bool compare_bounds = true;
    std::string out;  // empty = stdout
    std::string format = "csv";
    VerifyConfig verify;
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::string& context,
                         const std::vector<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + context + " must be a JSON object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            std::string expected;
            for (const auto& k : allowed) {
                if (!expected.empty()) expected += ", ";
                expected += k;
            }
            throw ConfigError("config: unknown key \"" + item.key() + "\" in " + context +
                              " (expected one of: " + expected + ")");
        }
    }
}

template <typename T>
inline void read_field(const nlohmann::json& obj, const char* key, T& slot,
                       const std::string& context) {
    if (!obj.contains(key)) return;
    try {
        slot = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("config: bad value for " + context + "." + key + ": " + ex.what());
    }
}

}  // namespace detail

inline ModelConfig parse_model_config(const nlohmann::json& j) {
    detail::require_keys(j, "model", {"kind", "hurst", "c", "a", "dimension", "matrices"});
    ModelConfig m;
    detail::read_field(j, "kind", m.kind, "model");
    detail::read_field(j, "hurst", m.hurst, "model");
    detail::read_field(j, "c", m.c, "model");
    detail::read_field(j, "a", m.a, "model");
    detail::read_field(j, "dimension", m.dimension, "model");
    detail::read_field(j, "matrices", m.matrices, "model");
    if (m.kind != "fgn" && m.kind != "poly" && m.kind != "table")
        throw ConfigError("config: model.kind must be fgn, poly, or table (got \"" + m.kind +
                          "\")");
    return m;
}

inline FunctionConfig parse_function_config(const nlohmann::json& j) {
    detail::require_keys(j, "function", {"name", "q", "z", "coefficients"});
    FunctionConfig f;
    detail::read_field(j, "name", f.name, "function");
    detail::read_field(j, "q", f.q, "function");
    detail::read_field(j, "z", f.z, "function");
    detail::read_field(j, "coefficients", f.coefficients, "function");
    if (f.name != "hermite" && f.name != "abs" && f.name != "sign" && f.name != "indicator" &&
        f.name != "polynomial" && f.name != "product")
        throw ConfigError(
            "config: function.name must be hermite, abs, sign, indicator, polynomial, or "
            "product (got \"" + f.name + "\")");
    return f;
}

inline VerifyConfig parse_verify_config(const nlohmann::json& j) {
    detail::require_keys(j, "verify",
                         {"pairs", "kernels", "dimension_cap", "order_cap", "tolerance"});
    VerifyConfig v;
    detail::read_field(j, "pairs", v.pairs, "verify");
    detail::read_field(j, "kernels", v.kernels, "verify");
    detail::read_field(j, "dimension_cap", v.dimension_cap, "verify");
    detail::read_field(j, "order_cap", v.order_cap, "verify");
    detail::read_field(j, "tolerance", v.tolerance, "verify");
    if (v.pairs < 1 || v.kernels < 1)
        throw ConfigError("config: verify sweep sizes must be positive");
    if (v.dimension_cap < 1 || v.dimension_cap > 6)
        throw ConfigError("config: verify.dimension_cap must be in [1, 6]");
    if (v.order_cap < 1 || v.order_cap > 4)
        throw ConfigError("config: verify.order_cap must be in [1, 4]");
    if (!(v.tolerance > 0.0)) throw ConfigError("config: verify.tolerance must be positive");
    return v;
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    detail::require_keys(
        j, "config",
        {"experiment",  "model",          "function",   "n_grid",        "order_cap",
         "truncate_order", "max_lag",     "bound_kinds", "method",       "distances",
         "test_functions", "curvature_cap", "replications", "seed",      "threads",
         "sigma",       "rate_series",    "rate_tolerance", "compare_bounds", "out",
         "format",      "verify"});
    ExperimentConfig c;
    detail::read_field(j, "experiment", c.experiment, "config");
    if (j.contains("model")) c.model = parse_model_config(j.at("model"));
    if (j.contains("function")) c.function = parse_function_config(j.at("function"));
    detail::read_field(j, "n_grid", c.n_grid, "config");
    detail::read_field(j, "order_cap", c.order_cap, "config");
    detail::read_field(j, "truncate_order", c.truncate_order, "config");
    detail::read_field(j, "max_lag", c.max_lag, "config");
    detail::read_field(j, "bound_kinds", c.bound_kinds, "config");
    detail::read_field(j, "method", c.method, "config");
    detail::read_field(j, "distances", c.distances, "config");
    detail::read_field(j, "test_functions", c.test_functions, "config");
    detail::read_field(j, "curvature_cap", c.curvature_cap, "config");
    detail::read_field(j, "replications", c.replications, "config");
    detail::read_field(j, "seed", c.seed, "config");
    detail::read_field(j, "threads", c.threads, "config");
    detail::read_field(j, "sigma", c.sigma, "config");
    detail::read_field(j, "rate_series", c.rate_series, "config");
    detail::read_field(j, "rate_tolerance", c.rate_tolerance, "config");
    detail::read_field(j, "compare_bounds", c.compare_bounds, "config");
    detail::read_field(j, "out", c.out, "config");
    detail::read_field(j, "format", c.format, "config");
    if (j.contains("verify")) c.verify = parse_verify_config(j.at("verify"));

    if (c.n_grid.empty()) throw ConfigError("config: n_grid cannot be empty");
    for (long n : c.n_grid)
        if (n < 1) throw ConfigError("config: n_grid entries must be positive");
    if (c.order_cap < 1 || c.order_cap > 20)
        throw ConfigError("config: order_cap must be in [1, 20]");
    if (c.max_lag < 2) throw ConfigError("config: max_lag must be at least 2");
    if (c.bound_kinds.empty()) throw ConfigError("config: bound_kinds cannot be empty");
    for (const auto& k : c.bound_kinds) parse_bound_kind(k);  // validates
    if (c.method != "auto" && c.method != "general" && c.method != "single-polynomial")
        throw ConfigError("config: method must be auto, general, or single-polynomial (got \"" +
                          c.method + "\")");
    for (const auto& d : c.distances)
        if (d != "W" && d != "KOL" && d != "C")
            throw ConfigError("config: distances entries must be W, KOL, or C (got \"" + d +
                              "\")");
    if (!(c.curvature_cap > 0.0)) throw ConfigError("config: curvature_cap must be positive");
    if (c.replications < 1) throw ConfigError("config: replications must be positive");
    if (c.threads < 0) throw ConfigError("config: threads must be >= 0");
    if (c.sigma < 0.0) throw ConfigError("config: sigma must be >= 0");
    for (const auto& s : c.rate_series)
        if (s != "bound" && s != "empirical")
            throw ConfigError("config: rate_series entries must be bound or empirical (got \"" +
                              s + "\")");
    if (!(c.rate_tolerance > 0.0)) throw ConfigError("config: rate_tolerance must be positive");
    if (c.format != "csv" && c.format != "json")
        throw ConfigError("config: format must be csv or json (got \"" + c.format + "\")");
    return c;
}

inline ExperimentConfig parse_experiment_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config: invalid JSON: ") + ex.what());
    }
    return parse_experiment_config(j);
}

inline nlohmann::json resolved_config_json(const ExperimentConfig& c) {
    nlohmann::json model{{"kind", c.model.kind}};
    if (c.model.kind == "fgn") {
        model["hurst"] = c.model.hurst;
    } else if (c.model.kind == "poly") {
        model["c"] = c.model.c;
        model["a"] = c.model.a;
    } else {
        model["dimension"] = c.model.dimension;
        model["matrices"] = c.model.matrices;
    }
    nlohmann::json function{{"name", c.function.name}};
    if (c.function.name == "hermite") function["q"] = c.function.q;
    if (c.function.name == "indicator") function["z"] = c.function.z;
    if (c.function.name == "polynomial") function["coefficients"] = c.function.coefficients;

    return nlohmann::json{{"experiment", c.experiment},
                          {"model", model},
                          {"function", function},
                          {"n_grid", c.n_grid},
                          {"order_cap", c.order_cap},
                          {"truncate_order", c.truncate_order},
                          {"max_lag", c.max_lag},
                          {"bound_kinds", c.bound_kinds},
                          {"method", c.method},
                          {"distances", c.distances},
                          {"test_functions", c.test_functions},
                          {"curvature_cap", c.curvature_cap},
                          {"replications", c.replications},
                          {"seed", c.seed},
                          {"threads", c.threads},
                          {"sigma", c.sigma},
                          {"rate_series", c.rate_series},
                          {"rate_tolerance", c.rate_tolerance},
                          {"compare_bounds", c.compare_bounds},
                          {"out", c.out},
                          {"format", c.format},
                          {"verify",
                           {{"pairs", c.verify.pairs},
                            {"kernels", c.verify.kernels},
                            {"dimension_cap", c.verify.dimension_cap},
                            {"order_cap", c.verify.order_cap},
                            {"tolerance", c.verify.tolerance}}}};
}

// ---------------------------------------------------------------------------
// Config -> library objects

inline CovarianceModel make_model(const ModelConfig& m) {
    if (m.kind == "fgn") return CovarianceModel::fgn(m.hurst);
    if (m.kind == "poly") return CovarianceModel::poly_decay(m.c, m.a);
    if (m.matrices.empty())
        throw ConfigError("config: model.kind table requires model.matrices");
    return CovarianceModel::table(m.dimension, m.matrices);
}

inline FunctionSpec make_function(const FunctionConfig& f, int model_dim) {
    if (f.name == "product") {
        if (model_dim < 2)
            throw ConfigError("config: function product needs a model of dimension >= 2");
        return {"product(" + std::to_string(model_dim) + ")", model_dim,
                [](const std::vector<double>& x) {
                    double v = 1.0;
                    for (double xi : x) v *= xi;
                    return v;
                },
                {}};
    }
    FunctionSpec spec;
    if (f.name == "hermite")
        spec = fn_hermite(f.q);
    else if (f.name == "abs")
        spec = fn_abs();
    else if (f.name == "sign")
        spec = fn_sign();
    else if (f.name == "indicator")
        spec = fn_indicator(f.z);
    else
        spec = fn_polynomial(f.coefficients);
    if (model_dim != 1)
        throw ConfigError("config: function " + f.name +
                          " is one-dimensional but the model has dimension " +
                          std::to_string(model_dim));
    return spec;
}

inline HermiteExpansion make_expansion(const ExperimentConfig& c, const CovarianceModel& model) {
    ExpandOptions opt;
    opt.max_order = c.order_cap;
    if (c.function.name == "hermite" && c.function.q > c.order_cap)
        throw ConfigError("config: function order exceeds order_cap");
    return expand(make_function(c.function, model.dim()), opt);
}

// Bound evaluation honoring the method switch: "single-polynomial" insists on
// the closed-form pure-Hermite route, "general" on the expanded route, and
// "auto" picks the former exactly when it applies.
inline BoundReport make_bound_report(const ExperimentConfig& c, const CovarianceModel& model,
                                     const HermiteExpansion& e, long n, BoundKind kind) {
    const bool pure_hermite = (c.function.name == "hermite") && model.dim() == 1;
    if (c.method == "single-polynomial" && !pure_hermite)
        throw ConfigError(
            "config: method single-polynomial requires a scalar model and a hermite function");
    if (c.method == "single-polynomial" || (c.method == "auto" && pure_hermite))
        return bound_hermite_case(model, c.function.q, n, kind, c.max_lag);
    return bound_theorem(model, e, n, kind, c.max_lag, c.order_cap);
}

// Standard-deviation target for the Gaussian comparison: explicit override or
// the square root of the limit variance of the (possibly truncated) series.
inline double resolve_sigma(const ExperimentConfig& c, const CovarianceModel& model,
                            const HermiteExpansion& e) {
    if (c.sigma > 0.0) return c.sigma;
    const int cap = c.truncate_order >= 0 ? c.truncate_order
                                          : std::min(c.order_cap, e.max_order);
    const VarianceDecomposition v = sigma2_total(model, e, cap, c.max_lag);
    if (!(v.total > 0.0))
        throw ConfigError("config: limit variance is not positive; set sigma explicitly");
    return std::sqrt(v.total);
}

// ---------------------------------------------------------------------------
// Output plumbing

struct CommandOutput {
    std::string text;    // rendered payload (CSV rows or JSON document)
    int exit_code = 0;   // 0, or 3 when a verification verdict failed
};

inline void echo_resolved_config(const ExperimentConfig& c, std::ostream& err) {
    err << "resolved-config: " << resolved_config_json(c).dump() << "\n";
}

inline void deliver(const ExperimentConfig& c, const CommandOutput& out, std::ostream& os) {
    if (c.out.empty())
        os << out.text;
    else
        write_text_file(c.out, out.text);
}

// ---------------------------------------------------------------------------
// bound: evaluate the distance bounds on the n grid

inline CommandOutput run_bound(const ExperimentConfig& c) {
    const CovarianceModel model = make_model(c.model);
    const HermiteExpansion e = make_expansion(c, model);
    std::vector<BoundReport> reports;
    for (long n : c.n_grid)
        for (const auto& kind : c.bound_kinds)
            reports.push_back(make_bound_report(c, model, e, n, parse_bound_kind(kind)));

    CommandOutput out;
    if (c.format == "json") {
        nlohmann::json doc{{"schema", "bound-run/1"},
                           {"config", resolved_config_json(c)},
                           {"reports", nlohmann::json::array()}};
        for (const auto& r : reports) doc["reports"].push_back(bound_report_json(r));
        out.text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        write_bound_reports_csv(os, reports);
        out.text = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// distance: Monte Carlo distance estimates with bound-validity verdicts

inline double testfn_bound_value(const ExperimentConfig& c, const CovarianceModel& model,
                                 const HermiteExpansion& e, long n, const TestFunction& h) {
    if (std::isfinite(h.curvature_norm))
        return h.curvature_norm *
               make_bound_report(c, model, e, n, BoundKind::c2).bound_c2;
    if (std::isfinite(h.lip_norm))
        return h.lip_norm *
               make_bound_report(c, model, e, n, BoundKind::lipschitz).bound_lipschitz;
    if (h.name.rfind("indicator", 0) == 0)
        return make_bound_report(c, model, e, n, BoundKind::kolmogorov).bound_kolmogorov;
    throw ConfigError("distance: test function \"" + h.name +
                      "\" declares no norms; set compare_bounds to false or use a function "
                      "with declared norms");
}

inline CommandOutput run_distance(const ExperimentConfig& c) {
    const CovarianceModel model = make_model(c.model);
    const HermiteExpansion e = make_expansion(c, model);
    const double sigma = resolve_sigma(c, model, e);
    const int threads = resolve_threads(c.threads);

    std::vector<ExperimentRow> rows;
    for (long n : c.n_grid) {
        const std::vector<double> values = simulate_sums(model, e, n, c.replications, c.seed,
                                                         threads, c.truncate_order);
        for (const auto& d : c.distances) {
            DistanceEstimate est;
            std::optional<double> bound;
            if (d == "KOL") {
                est = estimate_kolmogorov_from(values, sigma, n, c.seed, threads,
                                               c.truncate_order);
                if (c.compare_bounds)
                    bound = make_bound_report(c, model, e, n, BoundKind::kolmogorov)
                                .bound_kolmogorov;
            } else if (d == "W") {
                est = estimate_wasserstein_from(values, sigma, n, c.seed, threads,
                                                c.truncate_order);
                if (c.compare_bounds)
                    bound = make_bound_report(c, model, e, n, BoundKind::lipschitz)
                                .bound_lipschitz;
            } else {
                est = estimate_second_order_from(values, sigma, c.curvature_cap, n, c.seed,
                                                 threads, c.truncate_order);
                if (c.compare_bounds)
                    bound = c.curvature_cap *
                            make_bound_report(c, model, e, n, BoundKind::c2).bound_c2;
            }
            rows.push_back(make_row(c.experiment, est, bound));
        }
        for (const auto& name : c.test_functions) {
            const TestFunction h = test_function_by_name(name);
            const DistanceEstimate est =
                estimate_testfn_from(values, sigma, h, n, c.seed, c.truncate_order);
            std::optional<double> bound;
            if (c.compare_bounds) bound = testfn_bound_value(c, model, e, n, h);
            rows.push_back(make_row(c.experiment, est, bound));
        }
    }

    CommandOutput out;
    for (const auto& r : rows)
        if (r.verdict == "FAIL") out.exit_code = 3;
    if (c.format == "json") {
        nlohmann::json doc{{"schema", "distance-run/1"},
                           {"config", resolved_config_json(c)},
                           {"rows", nlohmann::json::array()}};
        for (const auto& r : rows) doc["rows"].push_back(experiment_row_json(r));
        out.text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        write_experiment_rows_csv(os, rows);
        out.text = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// rates: log-log slope fits of bound and/or empirical series over the n grid

struct RateSeriesResult {
    std::string series;
    RateFit fit;
};

inline CommandOutput run_rates(const ExperimentConfig& c) {
    const CovarianceModel model = make_model(c.model);
    const HermiteExpansion e = make_expansion(c, model);
    if (c.n_grid.size() < 4)
        throw ConfigError("rates: need at least four grid points for a slope fit");

    std::optional<RatePrediction> prediction;
    try {
        if (c.model.kind == "fgn")
            prediction = predict_rate_fgn(c.model.hurst, e.rank);
        else if (c.model.kind == "poly")
            prediction = predict_rate(c.model.a, e.rank);
    } catch (const ConfigError&) {
        // outside the predicted-rate regime: fit without a verdict
    }
    auto fit_series = [&](const std::vector<double>& values) {
        return prediction
                   ? fit_rate(c.n_grid, values, prediction->exponent, c.rate_tolerance)
                   : fit_rate(c.n_grid, values);
    };

    const int threads = resolve_threads(c.threads);
    const double sigma = resolve_sigma(c, model, e);
    std::vector<RateSeriesResult> results;
    for (const auto& series : c.rate_series) {
        if (series == "bound") {
            for (const auto& kind_name : c.bound_kinds) {
                const BoundKind kind = parse_bound_kind(kind_name);
                std::vector<double> values;
                for (long n : c.n_grid)
                    values.push_back(make_bound_report(c, model, e, n, kind).bound);
                results.push_back(
                    {"bound:" + std::string(bound_kind_name(kind)), fit_series(values)});
            }
        } else {
            for (const auto& d : c.distances) {
                std::vector<double> values;
                for (long n : c.n_grid) {
                    const std::vector<double> sums = simulate_sums(
                        model, e, n, c.replications, c.seed, threads, c.truncate_order);
                    if (d == "KOL")
                        values.push_back(estimate_kolmogorov_from(sums, sigma, n, c.seed,
                                                                  threads, c.truncate_order)
                                             .estimate);
                    else if (d == "W")
                        values.push_back(estimate_wasserstein_from(sums, sigma, n, c.seed,
                                                                   threads, c.truncate_order)
                                             .estimate);
                    else
                        values.push_back(
                            estimate_second_order_from(sums, sigma, c.curvature_cap, n, c.seed,
                                                       threads, c.truncate_order)
                                .estimate);
                }
                results.push_back({"empirical:" + d, fit_series(values)});
            }
        }
    }

    CommandOutput out;
    if (c.format == "json") {
        nlohmann::json doc{{"schema", "rate-run/1"},
                           {"config", resolved_config_json(c)},
                           {"series", nlohmann::json::array()}};
        for (const auto& r : results) {
            nlohmann::json s = rate_fit_json(r.fit);
            s["series"] = r.series;
            if (prediction) s["regime"] = prediction->regime;
            doc["series"].push_back(s);
        }
        out.text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        os << "experiment,series,n,value,slope,slope_se,intercept,predicted,tolerance,verdict\n";
        for (const auto& r : results) {
            const RateFit& f = r.fit;
            const std::string pred = f.has_prediction ? format_double(f.predicted) : "";
            const std::string tol = f.has_prediction ? format_double(f.tolerance) : "";
            const std::string verdict =
                f.has_prediction ? (f.verdict ? "PASS" : "FAIL") : "";
            for (std::size_t i = 0; i < f.n_grid.size(); ++i)
                os << csv_escape(c.experiment) << ',' << csv_escape(r.series) << ','
                   << f.n_grid[i] << ',' << format_double(f.values[i]) << ','
                   << format_double(f.slope) << ',' << format_double(f.slope_se) << ','
                   << format_double(f.intercept) << ',' << pred << ',' << tol << ',' << verdict
                   << '\n';
        }
        out.text = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// verify-chaos: seeded sweeps of the exact finite-dimensional identities

struct VerifyCheck {
    std::string name;
    long iterations = 0;
    double worst = 0.0;      // worst relative discrepancy or worst margin deficit
    double threshold = 0.0;  // pass when worst <= threshold
    bool pass = true;
};

inline CommandOutput run_verify_chaos(const ExperimentConfig& c) {
    const VerifyConfig& v = c.verify;
    std::vector<VerifyCheck> checks;

    // Product formula: E[(F x G) H] must match the pairing oracle, the mean
    // formula delta_{pq} p! <f, g>, and the constant component of the product.
    {
        RandomStream shapes(90210, 11);
        double worst = 0.0;
        for (int it = 0; it < v.pairs; ++it) {
            const int D = 1 + static_cast<int>(shapes.next_below(
                                  static_cast<std::uint64_t>(v.dimension_cap)));
            const int p = 1 + static_cast<int>(
                                  shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            const int q = 1 + static_cast<int>(
                                  shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            const int r = 1 + static_cast<int>(
                                  shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            RandomStream rs(555, static_cast<std::uint64_t>(it) + 1);
            const SymmetricKernel f = random_symmetric_kernel(rs, D, p);
            const SymmetricKernel g = random_symmetric_kernel(rs, D, q);
            const SymmetricKernel h = random_symmetric_kernel(rs, D, r);
            const ChaosVector F = ChaosVector::single(f);
            const ChaosVector G = ChaosVector::single(g);
            const ChaosVector H = ChaosVector::single(h);
            const ChaosVector P = multiply(F, G);

            const double lhs = expected_product(P, H);
            const double rhs = isserlis_moment(F, G, H);
            worst = std::max(worst, std::abs(lhs - rhs) /
                                        std::max({1.0, std::abs(lhs), std::abs(rhs)}));
            const double mean_oracle = isserlis_moment(F, G);
            const double mean_formula = (p == q) ? factorial(p) * inner(f, g) : 0.0;
            worst = std::max(worst,
                             std::abs(mean_oracle - mean_formula) /
                                 std::max({1.0, std::abs(mean_oracle), std::abs(mean_formula)}));
            worst = std::max(worst, std::abs(P.constant_part() - mean_formula) /
                                        std::max(1.0, std::abs(mean_formula)));
        }
        checks.push_back({"product-formula", v.pairs, worst, v.tolerance, true});
    }

    // Derivative-energy variance identity, with the canonical anchors: the
    // squared first basis kernel at order two has value 8 on both sides, and
    // an order-one kernel is degenerate (both sides vanish).
    {
        double worst = 0.0;
        for (int it = 0; it < v.kernels; ++it) {
            const int s = 2 + (it % 2);
            const int D = 1 + (it % v.dimension_cap);
            RandomStream rs(808, static_cast<std::uint64_t>(it) + 1);
            SymmetricKernel g = random_symmetric_kernel(rs, D, s);
            if (g.norm() == 0.0) continue;
            g = g.scaled(1.0 / g.norm());
            const double lhs = variance_identity_lhs(g);
            const double rhs = variance_identity_rhs(g);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, lhs, rhs}));
        }
        const SymmetricKernel canon = SymmetricKernel::elementary(2, {0, 0});
        worst = std::max(worst, std::abs(variance_identity_lhs(canon) - 8.0) / 8.0);
        worst = std::max(worst, std::abs(variance_identity_rhs(canon) - 8.0) / 8.0);
        const SymmetricKernel degen = SymmetricKernel::basis(2, 0);
        worst = std::max(worst, std::abs(variance_identity_rhs(degen)));
        worst = std::max(worst, std::abs(variance_identity_lhs(degen)));
        checks.push_back({"variance-identity", v.kernels, worst, v.tolerance, true});
    }

    // Symmetrization is an orthogonal projection: it cannot increase the norm.
    {
        RandomStream shapes(424242, 1);
        double worst = 0.0;  // worst norm increase
        for (int it = 0; it < v.kernels; ++it) {
            const int D = 1 + static_cast<int>(shapes.next_below(
                                  static_cast<std::uint64_t>(v.dimension_cap)));
            const int m = 1 + static_cast<int>(
                                  shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            RandomStream rs(626, static_cast<std::uint64_t>(it) + 1);
            Kernel raw(D, m);
            for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = rs.next_normal();
            const double raw2 = inner(raw, raw);
            const double sym2 = symmetrize(raw).norm2();
            worst = std::max(worst, (sym2 - raw2) / std::max(1.0, raw2));
        }
        checks.push_back({"symmetrize-nonexpansive", v.kernels, worst, v.tolerance, true});
    }

    // Cross-derivative inner-product bound: rhs - lhs must be nonnegative for
    // every kernel pair with 1 <= p < s.
    {
        RandomStream shapes(171717, 1);
        double worst = 0.0;  // worst margin deficit, relative
        long count = 0;
        for (int it = 0; it < v.pairs; ++it) {
            const int D = 1 + static_cast<int>(shapes.next_below(
                                  static_cast<std::uint64_t>(v.dimension_cap)));
            int p = 1 + static_cast<int>(
                            shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            int s = 1 + static_cast<int>(
                            shapes.next_below(static_cast<std::uint64_t>(v.order_cap)));
            if (p == s) continue;
            if (p > s) std::swap(p, s);
            RandomStream rs(737, static_cast<std::uint64_t>(it) + 1);
            const SymmetricKernel h = random_symmetric_kernel(rs, D, p);
            const SymmetricKernel g = random_symmetric_kernel(rs, D, s);
            const BoundPair b = cross_inner_bound(h, g);
            worst = std::max(worst, (b.lhs - b.rhs) / std::max({1.0, b.lhs, b.rhs}));
            ++count;
        }
        checks.push_back({"cross-inner-bound", count, worst, v.tolerance, true});
    }

    // Exact partial-sum kernels: contraction and norm inequalities on short-
    // and long-memory scalar models.
    {
        const HermiteExpansion e2 = expand(fn_hermite(2));
        double worst = 0.0;
        long count = 0;
        for (double H : {0.5, 0.6, 0.75}) {
            const CovarianceModel m = CovarianceModel::fgn(H);
            for (long n : {4L, 8L, 16L}) {
                const KernelBoundCheck chk =
                    kernel_contraction_bound_check(m, e2, 2, 1, n, 2000);
                worst = std::max(worst, (chk.contraction_lhs - chk.contraction_rhs) /
                                            std::max(1.0, chk.contraction_rhs));
                worst = std::max(worst, (chk.norm_lhs - chk.norm_rhs) /
                                            std::max(1.0, chk.norm_rhs));
                ++count;
            }
        }
        checks.push_back({"kernel-inequalities", count, worst, v.tolerance, true});
    }

    CommandOutput out;
    bool all_pass = true;
    for (auto& chk : checks) {
        chk.pass = chk.worst <= chk.threshold;
        all_pass = all_pass && chk.pass;
    }
    if (!all_pass) out.exit_code = 3;

    if (c.format == "json") {
        nlohmann::json doc{{"schema", "verify-chaos/1"},
                           {"config", resolved_config_json(c)},
                           {"pass", all_pass},
                           {"checks", nlohmann::json::array()}};
        for (const auto& chk : checks)
            doc["checks"].push_back({{"name", chk.name},
                                     {"iterations", chk.iterations},
                                     {"worst", json_number(chk.worst)},
                                     {"threshold", json_number(chk.threshold)},
                                     {"pass", chk.pass}});
        out.text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        os << "check,iterations,worst,threshold,verdict\n";
        for (const auto& chk : checks)
            os << csv_escape(chk.name) << ',' << chk.iterations << ','
               << format_double(chk.worst) << ',' << format_double(chk.threshold) << ','
               << (chk.pass ? "PASS" : "FAIL") << '\n';
        out.text = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// simulate-dump: raw partial-sum replications with full provenance

inline CommandOutput run_simulate_dump(const ExperimentConfig& c) {
    const CovarianceModel model = make_model(c.model);
    const HermiteExpansion e = make_expansion(c, model);
    const int threads = resolve_threads(c.threads);
    std::vector<PartialSumSample> samples;
    for (long n : c.n_grid) {
        auto batch = simulate_sum_samples(model, e, n, c.replications, c.seed, threads,
                                          c.truncate_order);
        samples.insert(samples.end(), batch.begin(), batch.end());
    }

    CommandOutput out;
    if (c.format == "json") {
        nlohmann::json doc{{"schema", "sum-samples/1"},
                           {"config", resolved_config_json(c)},
                           {"samples", nlohmann::json::array()}};
        for (const auto& s : samples)
            doc["samples"].push_back({{"replication", s.replication},
                                      {"n", s.n},
                                      {"N", s.order_cap},
                                      {"value", json_number(s.value)},
                                      {"seed", s.seed},
                                      {"stream", s.stream}});
        out.text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        write_sum_samples_csv(os, samples);
        out.text = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entry point

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

inline void apply_overrides(ExperimentConfig& c, const CliOverrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (o.out) c.out = *o.out;
    if (o.format) {
        if (*o.format != "csv" && *o.format != "json")
            throw ConfigError("config: format must be csv or json (got \"" + *o.format + "\")");
        c.format = *o.format;
    }
}

inline int cli_main(const std::vector<std::string>& args, std::ostream& os = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Quantitative central-limit bounds for Gaussian-subordinated sums"};
    app.fallthrough();

    std::string config_path;
    CliOverrides overrides;
    std::uint64_t seed_value = 0;
    int threads_value = 0;
    std::string out_value, format_value;
    app.add_option("--config", config_path, "JSON experiment config file");
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
    auto* threads_opt = app.add_option("--threads", threads_value, "worker cap override");
    auto* out_opt = app.add_option("--out", out_value, "output file (default stdout)");
    auto* format_opt = app.add_option("--format", format_value, "output format: csv or json");

    app.require_subcommand(1);
    auto* cmd_bound = app.add_subcommand("bound", "evaluate the distance bounds on the n grid");
    auto* cmd_distance =
        app.add_subcommand("distance", "Monte Carlo distances with bound-validity verdicts");
    auto* cmd_rates = app.add_subcommand("rates", "log-log slope fits over the n grid");
    auto* cmd_verify = app.add_subcommand(
        "verify-chaos", "sweep the exact finite-dimensional identities and inequalities");
    auto* cmd_dump =
        app.add_subcommand("simulate-dump", "raw partial-sum replications with provenance");

    try {
        // CLI11's vector overload consumes the arguments back to front.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& ex) {
        os << app.help();
        return 0;
    } catch (const CLI::ParseError& ex) {
        err << "config error: " << ex.what() << "\n";
        return 2;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = parse_experiment_config_text(read_text_file(config_path));
        if (seed_opt->count() > 0) overrides.seed = seed_value;
        if (threads_opt->count() > 0) overrides.threads = threads_value;
        if (out_opt->count() > 0) overrides.out = out_value;
        if (format_opt->count() > 0) overrides.format = format_value;
        apply_overrides(cfg, overrides);
        echo_resolved_config(cfg, err);

        CommandOutput result;
        if (cmd_bound->parsed())
            result = run_bound(cfg);
        else if (cmd_distance->parsed())
            result = run_distance(cfg);
        else if (cmd_rates->parsed())
            result = run_rates(cfg);
        else if (cmd_verify->parsed())
            result = run_verify_chaos(cfg);
        else if (cmd_dump->parsed())
            result = run_simulate_dump(cfg);
        deliver(cfg, result, os);
        return result.exit_code;
    } catch (const CapError& ex) {
        err << "cap exceeded: " << ex.what() << "\n";
        return 4;
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << "\n";
        return 2;
    }
}

inline int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

}  // namespace bmb
