#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmb/cli.hpp"

using namespace bmb;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = cli_main(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string write_temp_config(const std::string& tag, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / ("bmb_cli_" + tag + ".json");
    std::ofstream f(path);
    f << body;
    return path.string();
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

// Split one CSV record, honoring double-quoted fields.
std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

TEST_CASE("bound command reproduces the independent benchmark row") {
    const std::string cfg = write_temp_config(
        "iid", R"({"model":{"kind":"fgn","hurst":0.5},
                   "function":{"name":"hermite","q":2},
                   "n_grid":[100],"bound_kinds":["C2"]})");

    const CliRun csv = run_cli({"bound", "--config", cfg});
    REQUIRE(csv.code == 0);
    const auto rows = lines_of(csv.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] ==
          "model,expansion,kind,n,q,K,theta,sigma2,sigma2_lower,a1,a2,a3,a4,a5,n_star,bound");
    const auto f = csv_fields(rows[1]);
    REQUIRE(f.size() == 16);
    CHECK(f[1] == "hermite(2)");
    CHECK(f[2] == "C2");
    CHECK(f[3] == "100");
    CHECK(f[5] == "0");                                        // dependence length K
    CHECK(std::stod(f[7]) == Catch::Approx(2.0).margin(1e-13));  // limit variance
    CHECK(std::stod(f[15]) == Catch::Approx(0.2).margin(1e-12));
    CHECK(csv.err.find("resolved-config: ") == 0);

    const CliRun js = run_cli({"bound", "--config", cfg, "--format", "json"});
    REQUIRE(js.code == 0);
    const auto doc = nlohmann::json::parse(js.out);
    CHECK(doc.at("schema") == "bound-run/1");
    CHECK(doc.at("config").at("model").at("hurst") == 0.5);
    REQUIRE(doc.at("reports").size() == 1);
    const auto& rep = doc.at("reports").at(0);
    CHECK(rep.at("bound").get<double>() == Catch::Approx(0.2).margin(1e-12));
    CHECK(rep.at("bound_c2").get<double>() == Catch::Approx(0.2).margin(1e-12));
    CHECK(rep.at("q") == 2);
    CHECK(rep.at("n") == 100);
}

TEST_CASE("config validation produces structured rejections") {
    SECTION("unknown key") {
        const std::string cfg = write_temp_config("badkey", R"({"typo_key": 1})");
        const CliRun r = run_cli({"bound", "--config", cfg});
        CHECK(r.code == 2);
        CHECK(r.err.find("unknown key \"typo_key\"") != std::string::npos);
    }
    SECTION("unknown nested key") {
        const std::string cfg =
            write_temp_config("badnested", R"({"model":{"kind":"fgn","window":3}})");
        const CliRun r = run_cli({"bound", "--config", cfg});
        CHECK(r.code == 2);
        CHECK(r.err.find("unknown key \"window\" in model") != std::string::npos);
    }
    SECTION("bad enum values") {
        for (const char* body :
             {R"({"format":"xml"})", R"({"method":"fastest"})", R"({"distances":["L2"]})",
              R"({"bound_kinds":["C9"]})", R"({"rate_series":["theory"]})",
              R"({"model":{"kind":"arma"}})", R"({"function":{"name":"cube"}})"}) {
            const std::string cfg = write_temp_config("badenum", body);
            CHECK(run_cli({"bound", "--config", cfg}).code == 2);
        }
    }
    SECTION("bad numeric ranges") {
        for (const char* body :
             {R"({"n_grid":[]})", R"({"n_grid":[0]})", R"({"replications":0})",
              R"({"threads":-1})", R"({"order_cap":0})", R"({"sigma":-1.0})",
              R"({"curvature_cap":0.0})"}) {
            const std::string cfg = write_temp_config("badnum", body);
            CHECK(run_cli({"bound", "--config", cfg}).code == 2);
        }
    }
    SECTION("invalid JSON and missing file") {
        const std::string cfg = write_temp_config("badjson", "{not json");
        CHECK(run_cli({"bound", "--config", cfg}).code == 2);
        CHECK(run_cli({"bound", "--config", "/nonexistent/x.json"}).code == 2);
    }
    SECTION("missing summability names the condition") {
        const std::string cfg = write_temp_config(
            "nosumm", R"({"model":{"kind":"fgn","hurst":0.9},
                          "function":{"name":"hermite","q":2},"n_grid":[100]})");
        const CliRun r = run_cli({"bound", "--config", cfg});
        CHECK(r.code == 2);
        CHECK(r.err.find("summability condition fails") != std::string::npos);
    }
    SECTION("command line errors") {
        CHECK(run_cli({}).code == 2);                    // a subcommand is required
        CHECK(run_cli({"bogus"}).code == 2);             // unknown subcommand
        CHECK(run_cli({"bound", "--nope"}).code == 2);   // unknown flag
        const CliRun help = run_cli({"--help"});
        CHECK(help.code == 0);
        CHECK(help.out.find("bound") != std::string::npos);
        CHECK(help.out.find("verify-chaos") != std::string::npos);
    }
}

TEST_CASE("bounds require n above the dependence window") {
    const std::string base = R"({"model":{"kind":"table","dimension":2,
        "matrices":[[1,0,0,1],[0.6,0.6,0.6,0.6],[0.2,0.2,0.2,0.2]]},
        "function":{"name":"product"},"n_grid":[%N%]})";
    auto with_n = [&](const std::string& n) {
        std::string body = base;
        body.replace(body.find("%N%"), 3, n);
        return write_temp_config("depwin" + n, body);
    };

    const CliRun reject = run_cli({"bound", "--config", with_n("2")});
    CHECK(reject.code == 2);
    CHECK(reject.err.find("n must exceed the dependence length K = 2") != std::string::npos);

    const CliRun ok = run_cli({"bound", "--config", with_n("8"), "--format", "json"});
    REQUIRE(ok.code == 0);
    const auto doc = nlohmann::json::parse(ok.out);
    const auto& rep = doc.at("reports").at(0);
    CHECK(rep.at("dependence_length") == 2);
    CHECK(rep.at("q") == 2);
    // sum_j [r11 r22 + r12 r21](j) = 1 + 2(0.36 + 0.36) + 2(0.04 + 0.04)
    CHECK(rep.at("sigma2").get<double>() == Catch::Approx(2.6).margin(1e-12));
    CHECK(rep.at("expansion") == "product(2)");
}

TEST_CASE("distance command emits verdict rows and bound comparisons") {
    const std::string cfg = write_temp_config(
        "dist", R"({"experiment":"iid-check",
                    "model":{"kind":"fgn","hurst":0.5},
                    "function":{"name":"hermite","q":2},
                    "n_grid":[50],"distances":["W","KOL"],
                    "test_functions":["cos","x2"],
                    "replications":1000,"seed":4242})");
    const CliRun r = run_cli({"distance", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto rows = lines_of(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "experiment,kind,n,N,R,estimate,se,bound,verdict,seed");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = csv_fields(rows[i]);
        REQUIRE(f.size() == 10);
        CHECK(f[0] == "iid-check");
        CHECK(f[3] == "inf");
        CHECK(f[4] == "1000");
        CHECK(std::stod(f[5]) >= 0.0);
        CHECK(std::stod(f[7]) > 0.0);
        CHECK(f[8] == "PASS");
        CHECK(f[9] == "4242");
    }
    const auto kinds = std::vector<std::string>{csv_fields(rows[1])[1], csv_fields(rows[2])[1],
                                                csv_fields(rows[3])[1], csv_fields(rows[4])[1]};
    CHECK(kinds == std::vector<std::string>{"W", "KOL", "H:cos", "H:x2"});

    // A deliberately wrong target scale makes every verdict fail: exit 3.
    const std::string bad = write_temp_config(
        "distbad", R"({"model":{"kind":"fgn","hurst":0.5},
                       "function":{"name":"hermite","q":2},
                       "n_grid":[50],"distances":["W"],
                       "sigma":5.0,"replications":1000,"seed":4242})");
    const CliRun fail = run_cli({"distance", "--config", bad});
    CHECK(fail.code == 3);
    CHECK(fail.out.find("FAIL") != std::string::npos);

    // Without bound comparison there is no verdict and no failure exit.
    const std::string nobound = write_temp_config(
        "distnb", R"({"model":{"kind":"fgn","hurst":0.5},
                      "function":{"name":"hermite","q":2},
                      "n_grid":[50],"distances":["W"],"compare_bounds":false,
                      "sigma":5.0,"replications":1000,"seed":4242})");
    const CliRun nb = run_cli({"distance", "--config", nobound});
    CHECK(nb.code == 0);
    const auto nbrows = lines_of(nb.out);
    REQUIRE(nbrows.size() == 2);
    const auto nbf = csv_fields(nbrows[1]);
    CHECK(nbf[7].empty());  // no bound column value
    CHECK(nbf[8].empty());  // no verdict
}

TEST_CASE("rates command fits the bound series against the prediction") {
    const std::string cfg = write_temp_config(
        "rates", R"({"experiment":"fgn06",
                     "model":{"kind":"fgn","hurst":0.6},
                     "function":{"name":"hermite","q":2},
                     "n_grid":[1024,2048,4096,8192],
                     "bound_kinds":["C2"],"rate_series":["bound"],
                     "max_lag":100000})");
    const CliRun r = run_cli({"rates", "--config", cfg, "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("schema") == "rate-run/1");
    REQUIRE(doc.at("series").size() == 1);
    const auto& s = doc.at("series").at(0);
    CHECK(s.at("series") == "bound:C2");
    CHECK(s.at("regime") == "slow-decay");  // for q = 2 the exponent -0.8 sits in (-1, -1/2)
    CHECK(s.at("predicted").get<double>() == Catch::Approx(-0.3).margin(1e-12));
    CHECK(s.at("slope").get<double>() == Catch::Approx(-0.3).margin(0.05));
    CHECK(s.at("verdict") == "PASS");

    const CliRun csv = run_cli({"rates", "--config", cfg});
    REQUIRE(csv.code == 0);
    const auto rows = lines_of(csv.out);
    REQUIRE(rows.size() == 5);  // header + one row per grid point
    CHECK(rows[0] ==
          "experiment,series,n,value,slope,slope_se,intercept,predicted,tolerance,verdict");
    CHECK(csv_fields(rows[4])[9] == "PASS");

    const std::string small = write_temp_config(
        "ratesshort", R"({"model":{"kind":"fgn","hurst":0.6},
                          "function":{"name":"hermite","q":2},"n_grid":[64,128]})");
    CHECK(run_cli({"rates", "--config", small}).code == 2);
}

TEST_CASE("verify-chaos sweeps the identities and reports per-check verdicts") {
    const std::string cfg = write_temp_config(
        "verify", R"({"verify":{"pairs":40,"kernels":40,"dimension_cap":3,
                                "order_cap":3,"tolerance":1e-9}})");
    const CliRun r = run_cli({"verify-chaos", "--config", cfg, "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("schema") == "verify-chaos/1");
    CHECK(doc.at("pass") == true);
    REQUIRE(doc.at("checks").size() == 5);
    std::vector<std::string> names;
    for (const auto& chk : doc.at("checks")) {
        names.push_back(chk.at("name"));
        CHECK(chk.at("pass") == true);
        CHECK(chk.at("worst").get<double>() <= chk.at("threshold").get<double>());
    }
    CHECK(names == std::vector<std::string>{"product-formula", "variance-identity",
                                            "symmetrize-nonexpansive", "cross-inner-bound",
                                            "kernel-inequalities"});

    const CliRun csv = run_cli({"verify-chaos", "--config", cfg});
    REQUIRE(csv.code == 0);
    const auto rows = lines_of(csv.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "check,iterations,worst,threshold,verdict");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(csv_fields(rows[i])[4] == "PASS");
}

TEST_CASE("simulate-dump emits provenance and replays bit-exactly") {
    const std::string cfg = write_temp_config(
        "dump", R"({"model":{"kind":"fgn","hurst":0.75},
                    "function":{"name":"abs"},
                    "n_grid":[16,32],"truncate_order":2,
                    "replications":5,"seed":7})");
    const CliRun r = run_cli({"simulate-dump", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto rows = lines_of(r.out);
    REQUIRE(rows.size() == 11);  // header + 2 grid points x 5 replications
    CHECK(rows[0] == "replication,n,N,value,seed,stream");
    const auto first = csv_fields(rows[1]);
    CHECK(first[0] == "0");
    CHECK(first[1] == "16");
    CHECK(first[2] == "2");
    CHECK(first[4] == "7");

    // The echoed resolved config replays the run bit-exactly.
    const std::string prefix = "resolved-config: ";
    REQUIRE(r.err.rfind(prefix, 0) == 0);
    const std::string echoed = r.err.substr(prefix.size());
    const std::string replay = write_temp_config("dumpreplay", echoed);
    const CliRun again = run_cli({"simulate-dump", "--config", replay});
    REQUIRE(again.code == 0);
    CHECK(again.out == r.out);

    // Overrides: a different seed changes the draw, --out redirects the rows.
    const CliRun reseeded = run_cli({"simulate-dump", "--config", cfg, "--seed", "8"});
    REQUIRE(reseeded.code == 0);
    CHECK(reseeded.out != r.out);
    CHECK(reseeded.err.find("\"seed\":8") != std::string::npos);

    const auto out_path =
        (std::filesystem::temp_directory_path() / "bmb_cli_dump_out.csv").string();
    std::remove(out_path.c_str());
    const CliRun filed = run_cli({"simulate-dump", "--config", cfg, "--out", out_path});
    REQUIRE(filed.code == 0);
    CHECK(filed.out.empty());
    std::ifstream in(out_path);
    std::stringstream content;
    content << in.rdbuf();
    CHECK(content.str() == r.out);
    std::remove(out_path.c_str());
}

TEST_CASE("dense-factorization caps surface as cap errors") {
    const std::string cfg = write_temp_config(
        "cap", R"({"model":{"kind":"table","dimension":2,
                   "matrices":[[1,0,0,1],[0.2,0.2,0.2,0.2]]},
                   "function":{"name":"product"},
                   "n_grid":[3000],"replications":4})");
    const CliRun r = run_cli({"simulate-dump", "--config", cfg});
    CHECK(r.code == 4);
    CHECK(r.err.find("cap exceeded") != std::string::npos);
}
