#pragma once

// Serialization of reports and result rows to JSON and CSV.
//
// Doubles are rendered with 17 significant digits so every emitted number
// round-trips bit-exactly. JSON has no literals for infinities or NaN, so
// non-finite values are emitted as the strings "inf" / "-inf" / "nan"; CSV
// uses the same spellings inline.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmb/bounds.hpp"
#include "bmb/common.hpp"
#include "bmb/montecarlo.hpp"
#include "bmb/simulate.hpp"

namespace bmb {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// JSON value for a double: numeric when finite, spelled out otherwise.
inline nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// ---------------------------------------------------------------------------
// JSON report builders (each tagged with a versioned schema id)

inline nlohmann::json bound_report_json(const BoundReport& r) {
    nlohmann::json j;
    j["schema"] = "bound-report/1";
    j["model"] = r.model_id;
    j["expansion"] = r.expansion_id;
    j["kind"] = bound_kind_name(r.kind);
    j["n"] = r.n;
    j["q"] = r.q;
    j["dimension"] = r.dimension;
    j["order_cap"] = r.order_cap;
    j["n_star"] = r.n_star;
    j["max_lag"] = r.max_lag;
    j["dependence_length"] = r.dependence_length;
    j["theta_total"] = json_number(r.theta_total);
    j["fn_second_moment"] = json_number(r.fn_second_moment);
    j["two_k_plus_theta"] = json_number(r.two_k_plus_theta);
    j["sigma2"] = json_number(r.sigma2);
    j["sigma2_tail"] = json_number(r.sigma2_tail);
    j["sigma2_lower"] = json_number(r.sigma2_lower);
    nlohmann::json by_order = nlohmann::json::object();
    for (const auto& [m, v] : r.sigma2_by_order) by_order[std::to_string(m)] = json_number(v);
    j["sigma2_by_order"] = by_order;
    nlohmann::json gammas = nlohmann::json::array();
    for (const auto& [me, v] : r.gamma)
        gammas.push_back({{"m", me.first}, {"e", me.second}, {"value", json_number(v)}});
    j["gamma"] = gammas;
    j["a1"] = json_number(r.a1);
    j["a1_general_form"] = json_number(r.a1_general_form);
    const std::pair<const char*, const std::map<int, double>*> cutoff_terms[] = {
        {"a2", &r.a2}, {"a3", &r.a3}, {"a4", &r.a4}, {"a5", &r.a5}};
    for (const auto& [name, term] : cutoff_terms) {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& [cut, v] : *term) o[std::to_string(cut)] = json_number(v);
        j[name] = o;
    }
    j["bound_c2"] = json_number(r.bound_c2);
    j["bound_lipschitz"] = json_number(r.bound_lipschitz);
    j["bound_kolmogorov"] = json_number(r.bound_kolmogorov);
    j["bound"] = json_number(r.bound);
    j["degenerate"] = r.degenerate;
    j["tail_flags"] = r.tail_flags;
    return j;
}

inline nlohmann::json distance_json(const DistanceEstimate& e) {
    nlohmann::json j;
    j["schema"] = "distance-estimate/1";
    j["kind"] = e.kind_label();
    j["estimate"] = json_number(e.estimate);
    j["se"] = json_number(e.se);
    j["replications"] = e.replications;
    j["n"] = e.n;
    j["order_cap"] = e.order_cap;
    j["sigma"] = json_number(e.sigma);
    j["seed"] = e.seed;
    j["lower_bound_only"] = e.lower_bound_only;
    if (!std::isnan(e.dkw_99)) j["dkw_99"] = json_number(e.dkw_99);
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

inline nlohmann::json rate_fit_json(const RateFit& f) {
    nlohmann::json j;
    j["schema"] = "rate-fit/1";
    j["n_grid"] = f.n_grid;
    nlohmann::json vals = nlohmann::json::array();
    for (double v : f.values) vals.push_back(json_number(v));
    j["values"] = vals;
    j["slope"] = json_number(f.slope);
    j["intercept"] = json_number(f.intercept);
    j["slope_se"] = json_number(f.slope_se);
    j["has_prediction"] = f.has_prediction;
    if (f.has_prediction) {
        j["predicted"] = json_number(f.predicted);
        j["tolerance"] = json_number(f.tolerance);
        j["verdict"] = f.verdict ? "PASS" : "FAIL";
    }
    return j;
}

inline nlohmann::json experiment_row_json(const ExperimentRow& r) {
    nlohmann::json j;
    j["schema"] = "experiment-row/1";
    j["experiment"] = r.experiment;
    j["kind"] = r.kind;
    j["n"] = r.n;
    j["N"] = r.order_cap;
    j["R"] = r.replications;
    j["estimate"] = json_number(r.estimate);
    j["se"] = json_number(r.se);
    j["bound"] = json_number(r.bound);
    j["verdict"] = r.verdict;
    j["seed"] = r.seed;
    return j;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_experiment_rows_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
    os << "experiment,kind,n,N,R,estimate,se,bound,verdict,seed\n";
    for (const auto& r : rows) {
        os << csv_escape(r.experiment) << ',' << csv_escape(r.kind) << ',' << r.n << ','
           << (r.order_cap < 0 ? std::string("inf") : std::to_string(r.order_cap)) << ','
           << r.replications << ',' << format_double(r.estimate) << ',' << format_double(r.se)
           << ',' << (std::isnan(r.bound) ? std::string() : format_double(r.bound)) << ','
           << r.verdict << ',' << r.seed << '\n';
    }
}

inline void write_bound_reports_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
    os << "model,expansion,kind,n,q,K,theta,sigma2,sigma2_lower,"
          "a1,a2,a3,a4,a5,n_star,bound\n";
    for (const auto& r : reports) {
        const int ns = r.n_star;
        auto term = [&](const std::map<int, double>& t) {
            const auto it = t.find(ns);
            return it == t.end() ? std::string() : format_double(it->second);
        };
        os << csv_escape(r.model_id) << ',' << csv_escape(r.expansion_id) << ','
           << bound_kind_name(r.kind) << ',' << r.n << ',' << r.q << ','
           << r.dependence_length << ',' << format_double(r.theta_total) << ','
           << format_double(r.sigma2) << ',' << format_double(r.sigma2_lower) << ','
           << format_double(r.a1) << ',' << term(r.a2) << ',' << term(r.a3) << ','
           << term(r.a4) << ',' << term(r.a5) << ',' << ns << ',' << format_double(r.bound)
           << '\n';
    }
}

inline void write_sum_samples_csv(std::ostream& os, const std::vector<PartialSumSample>& samples) {
    os << "replication,n,N,value,seed,stream\n";
    for (const auto& s : samples) {
        os << s.replication << ',' << s.n << ','
           << (s.order_cap < 0 ? std::string("inf") : std::to_string(s.order_cap)) << ','
           << format_double(s.value) << ',' << s.seed << ',' << s.stream << '\n';
    }
}

inline void write_rate_fit_csv(std::ostream& os, const std::string& experiment,
                               const std::string& series, const RateFit& f) {
    os << "experiment,series,n,value,slope,slope_se,intercept,predicted,tolerance,verdict\n";
    const std::string predicted = f.has_prediction ? format_double(f.predicted) : std::string();
    const std::string tolerance = f.has_prediction ? format_double(f.tolerance) : std::string();
    const std::string verdict =
        f.has_prediction ? (f.verdict ? std::string("PASS") : std::string("FAIL"))
                         : std::string();
    for (std::size_t i = 0; i < f.n_grid.size(); ++i) {
        os << csv_escape(experiment) << ',' << csv_escape(series) << ',' << f.n_grid[i] << ','
           << format_double(f.values[i]) << ',' << format_double(f.slope) << ','
           << format_double(f.slope_se) << ',' << format_double(f.intercept) << ',' << predicted
           << ',' << tolerance << ',' << verdict << '\n';
    }
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw ConfigError("failed while writing: " + path);
}

}  // namespace bmb
