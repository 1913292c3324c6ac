#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "singular_bound/cli.hpp"
#include "singular_bound/config.hpp"
#include "singular_bound/gibbs_pacbayes.hpp"
#include "singular_bound/io.hpp"

using namespace sb;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string config_path(const std::string& name) { return std::string(SB_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "singular_bound_cli" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "input.conf";
    write_file(p.string(), text);
    return p;
}

std::string replace_line(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("cli: rlct completion prints both methods") {
    const auto r = run({"rlct", "completion", "5", "3", "2", "1"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["lambda"]["num"] == 9);
    CHECK(j["lambda"]["den"] == 2);
    CHECK(j["m"] == 1);
    CHECK(j["regime"] == "case1");
    CHECK(j["agree"] == true);

    const auto t = run({"rlct", "completion", "2", "2", "2", "1", "--table"});
    CHECK(t.code == 0);
    CHECK(t.out.find("interior-odd") != std::string::npos);
    CHECK(t.out.find("discrepancy") != std::string::npos);
}

TEST_CASE("cli: rlct relu, charts and bic") {
    const auto relu = run({"rlct", "relu", "2", "3", "1"});
    REQUIRE(relu.code == 0);
    const auto j = nlohmann::json::parse(relu.out);
    CHECK(j["lambda"]["num"] == 13);
    CHECK(j["lambda"]["den"] == 2);

    const auto charts = run({"rlct", "charts", std::string(SB_DATA_DIR) + "/blowup_charts.json"});
    REQUIRE(charts.code == 0);
    const auto c = nlohmann::json::parse(charts.out);
    CHECK(c["lambda"]["num"] == 1);
    CHECK(c["lambda"]["den"] == 2);
    CHECK(c["m"] == 1);

    const auto bic = run({"rlct", "bic", "7"});
    REQUIRE(bic.code == 0);
    CHECK(nlohmann::json::parse(bic.out)["lambda"]["den"] == 2);
}

TEST_CASE("cli: invalid arguments exit with code 2") {
    CHECK(run({"rlct", "completion", "2", "2", "3", "1"}).code == 2);
    CHECK(run({"rlct", "completion", "2", "2"}).code == 2);
    CHECK(run({"rlct", "completion", "2", "x", "2", "1"}).code == 2);
    CHECK(run({"rlct", "relu", "2", "0", "1"}).code == 2);
    CHECK(run({"rlct", "charts", "/nonexistent/charts.json"}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({}).code == 2);
    const auto bad = run({"rlct", "completion", "2", "2", "1", "1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("Usage") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: constants") {
    const auto sq = run({"constants", "squared", "--B0", "1", "--sigma", "0.5"});
    REQUIRE(sq.code == 0);
    const auto j = nlohmann::json::parse(sq.out);
    CHECK(j["L"].get<double>() == doctest::Approx(33.0));
    CHECK(j.contains("omega_bar"));
    CHECK(run({"constants", "logistic", "--B3", "2", "--tau", "0.25"}).code == 0);
    CHECK(run({"constants", "squared", "--B0", "-1", "--sigma", "0.5"}).code == 3);
}

TEST_CASE("cli: certify writes a certificate that recomputes from its fields") {
    const auto dir = scratch("certify");
    const auto r = run({"--out", dir.string(), "certify", config_path("completion_2x2.conf")});
    REQUIRE(r.code == 0);
    const auto cert = BoundCertificate::from_json(nlohmann::json::parse(read_file((dir / "certificate.json").string())));
    CHECK(cert.n == 1000);
    CHECK(cert.delta == 0.05);
    CHECK(cert.rlct_source == "discrete");
    CHECK(cert.lambda == Rational(2));
    CHECK(std::abs(cert.recompute() - cert.bound_value) <= 1e-12 * cert.bound_value);
    CHECK(fs::exists(dir / "resolved.conf"));

    const auto bigger = run({"certify", config_path("completion_2x2.conf"), "--n", "2000"});
    REQUIRE(bigger.code == 0);
    CHECK(nlohmann::json::parse(bigger.out)["bound"].get<double>() < cert.bound_value);
}

TEST_CASE("cli: certify rejects invalid delta, omega and keys") {
    const auto dir = scratch("certify_errors");
    const std::string base = read_file(config_path("completion_2x2.conf"));

    const auto delta = run({"certify", write_config(dir, replace_line(base, "certificate.delta = 0.05", "certificate.delta = 1.5")).string()});
    CHECK(delta.code == 3);
    CHECK(delta.err.find("delta") != std::string::npos);

    const auto omega = run({"certify", write_config(dir, base + "gibbs.omega = 0.5\n").string()});
    CHECK(omega.code == 3);
    CHECK(omega.err.find("omega") != std::string::npos);

    const auto unknown = run({"certify", write_config(dir, base + "gibbs.temperature = 2\n").string()});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("gibbs.temperature") != std::string::npos);

    CHECK(run({"certify", (dir / "missing.conf").string()}).code == 2);
    CHECK(run({"certify", config_path("relu_scaling.conf")}).code == 3);
    CHECK(run({"certify", config_path("logistic.conf")}).code == 0);
}

TEST_CASE("cli: zero-risk experiment, determinism and resolved-config replay") {
    const auto a = scratch("zero_a");
    const auto b = scratch("zero_b");
    const auto c = scratch("zero_c");
    REQUIRE(run({"--out", a.string(), "experiment", config_path("zero_toy.conf")}).code == 0);
    REQUIRE(run({"--out", b.string(), "--threads", "2", "experiment", config_path("zero_toy.conf")}).code == 0);
    REQUIRE(run({"--out", c.string(), "experiment", (a / "resolved.conf").string()}).code == 0);

    const std::string csv = read_file((a / "results.csv").string());
    CHECK(csv == read_file((b / "results.csv").string()));
    CHECK(csv == read_file((c / "results.csv").string()));
    CHECK(fs::exists(a / "scaling.svg"));
    CHECK(fs::exists(a / "summary.json"));

    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "n,replicate,post_risk,post_risk_se,bound,neg_log_z,neg_log_z_se");
    int rows = 0;
    while (std::getline(lines, line)) {
        const auto f = split(line, ',');
        REQUIRE(f.size() == 7);
        CHECK(parse_double(f[2]) == 0.0);
        CHECK(parse_double(f[4]) > 0.0);
        ++rows;
    }
    CHECK(rows == 8);

    const Config resolved = Config::load((a / "resolved.conf").string());
    CHECK(resolved.get_string("seed", "") == "3");
    CHECK(resolved.get_string("output.dir", "") == a.string());
}

TEST_CASE("cli: seed override changes the run and is recorded") {
    const auto a = scratch("seed_a");
    const auto b = scratch("seed_b");
    REQUIRE(run({"--out", a.string(), "gibbs-run", config_path("completion_2x2.conf"), "--n", "200"}).code == 0);
    REQUIRE(run({"--out", b.string(), "--seed", "99", "gibbs-run", config_path("completion_2x2.conf"), "--n", "200"})
                .code == 0);
    CHECK(read_file((a / "chain.csv").string()) != read_file((b / "chain.csv").string()));
    CHECK(Config::load((b / "resolved.conf").string()).get_string("seed", "") == "99");
    const auto g = nlohmann::json::parse(read_file((a / "gibbs.json").string()));
    CHECK(g["n"] == 200);
    CHECK(g["acceptance_rate"].get<double>() > 0.02);
    CHECK(read_file((a / "chain.csv").string()).rfind("chain,iter,coord0,", 0) == 0);
    CHECK(read_file((a / "dataset.csv").string()).rfind("i,j,y\n", 0) == 0);
}

TEST_CASE("cli: estimate-z by quadrature and thermodynamic integration") {
    const auto q = run({"estimate-z", "--k", "1", "--h", "0", "--n", "4"});
    REQUIRE(q.code == 0);
    CHECK(q.out.rfind("n,beta,neg_log_z,std_err,method\n4,1,", 0) == 0);
    CHECK(parse_double(split(q.out.substr(q.out.find('\n') + 1), ',')[2]) == doctest::Approx(0.8187).epsilon(1e-4));

    const auto fit = run({"estimate-z", "--k", "1", "--h", "1", "--n", "7.38905609893065,20.0855369231877,54.5981500331442,"
                                                                       "148.413159102577,403.428793492735",
                          "--fit"});
    REQUIRE(fit.code == 0);
    CHECK(nlohmann::json::parse(fit.out)["lambda_hat"].get<double>() == doctest::Approx(1.0).epsilon(0.03));

    const auto dir = scratch("estimate_z");
    const auto t = run({"--out", dir.string(), "estimate-z", "--k", "1", "--h", "0", "--n", "50", "--method", "thermo",
                        "--iterations", "2000"});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("thermo") != std::string::npos);
    CHECK(fs::exists(dir / "partition.csv"));

    const auto cfg_dir = scratch("estimate_z_config") / "nested";
    const auto cfg = write_config(scratch("estimate_z_input"),
                                  "model.family = completion\nthermo.iterations = 2000\nthermo.burn_in = 500\n"
                                  "thermo.start = truth\ngrid.n = 50, 200, 800\n");
    const auto zc = run({"--out", cfg_dir.string(), "estimate-z", "--config", cfg.string()});
    REQUIRE(zc.code == 0);
    CHECK(fs::exists(cfg_dir / "resolved.conf"));
    CHECK(fs::exists(cfg_dir / "partition.csv"));

    CHECK(run({"estimate-z", "--k", "1", "--h", "1", "--n", "50", "--method", "thermo"}).code == 2);
    CHECK(run({"estimate-z", "--k", "1,1", "--h", "0", "--n", "50"}).code == 2);
    CHECK(run({"estimate-z", "--k", "1", "--h", "0", "--n", "4", "--method", "simpson"}).code == 2);
}
