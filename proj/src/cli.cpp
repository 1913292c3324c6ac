#include "singular_bound/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "singular_bound/bernstein.hpp"
#include "singular_bound/config.hpp"
#include "singular_bound/errors.hpp"
#include "singular_bound/experiment.hpp"
#include "singular_bound/gibbs_pacbayes.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/kernels.hpp"
#include "singular_bound/partition.hpp"
#include "singular_bound/rlct.hpp"

namespace sb {

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out_dir;
};

Config load_checked(const std::string& path) {
    Config c = Config::load(path);
    c.check_keys(config_keys());
    return c;
}

std::uint64_t effective_seed(const Globals& g, Config& c) {
    const std::uint64_t seed = g.seed ? *g.seed : c.get_seed("seed", 1);
    c.set("seed", std::to_string(seed));
    return seed;
}

std::string effective_dir(const Globals& g, Config& c, const std::string& fallback) {
    std::string dir = g.out_dir.empty() ? c.get_string("output.dir", fallback) : g.out_dir;
    if (!dir.empty()) c.set("output.dir", dir);
    return dir;
}

void write_json(const std::string& dir, const std::string& name, const nlohmann::json& j) {
    std::filesystem::create_directories(dir);
    write_file((std::filesystem::path(dir) / name).string(), j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int cmd_rlct_completion(int d1, int d2, int H, int r, bool table, std::ostream& out) {
    const auto c = compare_completion_rlct(d1, d2, H, r);
    if (table) {
        out << "regime        " << regime_name(c.regime) << '\n'
            << "discrete      lambda=" << c.discrete.lambda << "  m=" << c.discrete.m << '\n'
            << "closed form   lambda=" << c.closed_form.lambda << "  m=" << c.closed_form.m << '\n'
            << "agree         " << (c.agree ? "yes" : "no") << '\n';
        if (!c.agree) out << "discrepancy   " << c.difference << '\n';
    } else {
        out << c.to_json().dump(2) << '\n';
    }
    return exit_ok;
}

int cmd_certify(const Globals& g, const std::string& path, std::optional<long long> n_override, std::ostream& out) {
    Config c = load_checked(path);
    effective_seed(g, c);
    if (n_override) c.set("certificate.n", std::to_string(*n_override));
    const std::string dir = effective_dir(g, c, "");
    const Problem problem = build_problem(c);
    const long long n = c.get_int("certificate.n", 1000);
    const auto cert = certify(c, problem, n);
    out << cert.to_json().dump(2) << '\n';
    if (!dir.empty()) {
        write_json(dir, "certificate.json", cert.to_json());
        write_file((std::filesystem::path(dir) / "resolved.conf").string(), c.to_text());
    }
    return exit_ok;
}

int cmd_gibbs_run(const Globals& g, const std::string& path, std::optional<long long> n_override, std::ostream& out) {
    Config c = load_checked(path);
    const std::uint64_t seed = effective_seed(g, c);
    if (n_override) c.set("certificate.n", std::to_string(*n_override));
    const std::string dir = effective_dir(g, c, "");
    const Problem problem = build_problem(c);
    const long long n = c.get_int("certificate.n", 1000);
    if (n < 1) throw ConstraintError("certificate.n must be positive");
    const auto data = problem.model->generate(static_cast<std::size_t>(n), derive_seed(seed, label_hash("data"), n, 0));
    const auto gc = gibbs_config(c, problem, derive_seed(seed, label_hash("gibbs"), n, 0));
    const auto samples = sample_gibbs_posterior(*problem.model, data, gc);
    const auto risk = posterior_mean_excess_risk(samples, *problem.model);
    nlohmann::json j{{"n", n},
                     {"omega", gc.omega},
                     {"acceptance_rate", samples.acceptance_rate},
                     {"ess", samples.ess},
                     {"draws", samples.count()},
                     {"post_risk", risk.mean},
                     {"post_risk_se", risk.std_err}};
    out << j.dump(2) << '\n';
    if (!dir.empty()) {
        write_json(dir, "gibbs.json", j);
        write_file((std::filesystem::path(dir) / "chain.csv").string(), chain_csv(samples));
        write_file((std::filesystem::path(dir) / "dataset.csv").string(), dataset_to_csv(data));
        write_file((std::filesystem::path(dir) / "resolved.conf").string(), c.to_text());
    }
    return exit_ok;
}

int cmd_experiment(const Globals& g, const std::string& path, std::ostream& out) {
    Config c = load_checked(path);
    const std::uint64_t seed = effective_seed(g, c);
    const std::string dir = effective_dir(g, c, "out");
    const auto result = run_experiment(c, seed);
    write_experiment(result, c, dir);
    out << result.summary().dump(2) << '\n';
    return exit_ok;
}

struct EstimateZArgs {
    std::string config;
    std::vector<int> k, h;
    std::vector<double> n;
    double beta = 1.0;
    std::string method = "quadrature";
    std::size_t points = 64;
    std::size_t rungs = 32;
    std::size_t iterations = 4000;
    bool fit = false;
    bool loglog = false;
};

int cmd_estimate_z(const Globals& g, const EstimateZArgs& a, std::ostream& out) {
    std::vector<PartitionEstimate> estimates;
    std::string dir = g.out_dir;
    if (!a.config.empty()) {
        Config c = load_checked(a.config);
        const std::uint64_t seed = effective_seed(g, c);
        dir = effective_dir(g, c, "");
        const Problem problem = build_problem(c);
        const double beta = c.get_double("thermo.beta", 1.0);
        const RiskFunction risk = [&](std::span<const double> t) { return problem.model->population_excess_risk(t); };
        for (double n : c.get_doubles("grid.n", a.n)) {
            const auto opts = thermo_options(c, problem, derive_seed(seed, label_hash("thermo"), static_cast<std::int64_t>(n)));
            estimates.push_back(thermo_integration_neg_log_z(risk, problem.prior, beta, n, opts));
        }
        if (!dir.empty()) {
            std::filesystem::create_directories(dir);
            write_file((std::filesystem::path(dir) / "resolved.conf").string(), c.to_text());
        }
    } else {
        if (a.k.empty() || a.k.size() != a.h.size()) throw ConfigError("estimate-z: --k and --h must have equal nonzero length");
        if (a.n.empty()) throw ConfigError("estimate-z: --n is required");
        const Integrand risk = monomial_risk(a.k);
        const std::uint64_t seed = g.seed.value_or(1);
        for (double n : a.n) {
            if (a.method == "quadrature") {
                QuadratureOptions q;
                q.points_per_axis = a.points;
                estimates.push_back(neg_log_z_quadrature(risk, a.h, a.beta, n, q));
            } else if (a.method == "thermo") {
                for (int hj : a.h)
                    if (hj != 0) throw ConfigError("estimate-z: thermo integrates against the uniform prior; use h = 0");
                ThermoOptions o;
                o.schedule = power_schedule(a.rungs);
                o.mcmc.iterations = a.iterations;
                o.mcmc.burn_in = a.iterations / 4;
                o.mcmc.proposal_scale = 0.2;
                o.seed = derive_seed(seed, label_hash("thermo"), static_cast<std::uint64_t>(n));
                estimates.push_back(thermo_integration_neg_log_z(risk, Box::cube(a.k.size(), 0.0, 1.0), a.beta, n, o));
            } else {
                throw ConfigError("estimate-z: --method must be quadrature or thermo");
            }
        }
    }
    const std::string csv = partition_csv(estimates);
    std::optional<RlctFit> fit;
    if (a.fit) {
        std::vector<PartitionEstimate> usable;
        for (const auto& e : estimates)
            if (e.n > std::exp(2.0) * (1.0 - 1e-12)) usable.push_back(e);
        fit = fit_rlct_from_partition(usable, a.loglog);
        out << fit->to_json().dump(2) << '\n';
    } else {
        out << csv;
    }
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        write_file((std::filesystem::path(dir) / "partition.csv").string(), csv);
        if (fit) write_json(dir, "fit.json", fit->to_json());
    }
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"PAC-Bayes certificates and empirical checks for Gibbs posteriors in singular models",
                 "singular-bound"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (overrides the config)");
    app.add_option("--threads", g.threads, "OpenMP worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out_dir, "Output directory");

    int status = exit_ok;
    std::function<int()> action;

    auto* rlct = app.add_subcommand("rlct", "Exact RLCT pairs")->require_subcommand(1);
    int d1 = 0, d2 = 0, H = 0, r = 0;
    bool table = false;
    auto* rc = rlct->add_subcommand("completion", "Matrix completion RLCT, both methods side by side");
    rc->add_option("d1", d1)->required();
    rc->add_option("d2", d2)->required();
    rc->add_option("H", H)->required();
    rc->add_option("r", r)->required();
    rc->add_flag("--table", table, "Plain-text table instead of JSON");
    rc->callback([&] { action = [&] { return cmd_rlct_completion(d1, d2, H, r, table, out); }; });

    std::vector<int> widths;
    auto* rr = rlct->add_subcommand("relu", "Upper bound for a ReLU network with the given true widths");
    rr->add_option("widths", widths)->required();
    rr->callback([&] {
        action = [&] {
            const Rational lam = relu_rlct_upper_bound(widths);
            out << nlohmann::json{{"lambda", rational_to_json(lam)}, {"bound", "upper"}}.dump(2) << '\n';
            return exit_ok;
        };
    });

    std::string charts_file;
    auto* rch = rlct->add_subcommand("charts", "Pole of normal-crossing chart data (JSON file)");
    rch->add_option("file", charts_file)->required();
    rch->callback([&] {
        action = [&] {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(read_file(charts_file));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("charts: ") + e.what());
            }
            const auto& arr = j.is_object() ? j.at("charts") : j;
            out << normal_crossing_rlct(charts_from_json(arr)).to_json().dump(2) << '\n';
            return exit_ok;
        };
    });

    long long bic_d = 0;
    auto* rb = rlct->add_subcommand("bic", "Regular-model value d/2");
    rb->add_option("d", bic_d)->required();
    rb->callback([&] {
        action = [&] {
            out << nlohmann::json{{"lambda", rational_to_json(regular_bic_lambda(bic_d))}, {"m", 1}}.dump(2) << '\n';
            return exit_ok;
        };
    });

    auto* constants = app.add_subcommand("constants", "Bernstein constants (L, b, omega_bar)")->require_subcommand(1);
    double B0 = 1.0, sigma = 0.0, B3 = 1.0, tau = 0.25;
    auto* cs = constants->add_subcommand("squared", "Squared loss");
    cs->add_option("--B0", B0)->required();
    cs->add_option("--sigma", sigma)->required();
    cs->callback([&] { action = [&] { out << squared_loss_constants(B0, sigma).to_json().dump(2) << '\n'; return exit_ok; }; });
    auto* cl = constants->add_subcommand("logistic", "Logistic loss");
    cl->add_option("--B3", B3)->required();
    cl->add_option("--tau", tau)->required();
    cl->callback([&] { action = [&] { out << logistic_loss_constants(B3, tau).to_json().dump(2) << '\n'; return exit_ok; }; });

    std::string config_path;
    std::optional<long long> n_override;
    auto* certify_cmd = app.add_subcommand("certify", "Evaluate the PAC-Bayes certificate for a config");
    certify_cmd->add_option("config", config_path)->required();
    certify_cmd->add_option("--n", n_override, "Sample size (overrides certificate.n)");
    certify_cmd->callback([&] { action = [&] { return cmd_certify(g, config_path, n_override, out); }; });

    EstimateZArgs z;
    auto* ez = app.add_subcommand("estimate-z", "Estimate -log Z(n) by quadrature or thermodynamic integration");
    ez->set_help_flag("--help", "Print this help message and exit");
    ez->add_option("--config", z.config, "Model config (thermodynamic integration of its population risk)");
    ez->add_option("--k", z.k, "Monomial risk exponents: risk = prod u_j^(2 k_j)")->delimiter(',');
    ez->add_option("--h", z.h, "Weight exponents prod u_j^h_j")->delimiter(',');
    ez->add_option("--n", z.n, "Sample sizes")->delimiter(',');
    ez->add_option("--beta", z.beta);
    ez->add_option("--method", z.method)->check(CLI::IsMember({"quadrature", "thermo"}));
    ez->add_option("--points", z.points, "Initial quadrature points per axis");
    ez->add_option("--rungs", z.rungs);
    ez->add_option("--iterations", z.iterations);
    ez->add_flag("--fit", z.fit, "Fit lambda over the n > e^2 estimates and print the fit");
    ez->add_flag("--loglog", z.loglog, "Include the -log log n regressor in the fit");
    ez->callback([&] { action = [&] { return cmd_estimate_z(g, z, out); }; });

    auto* gr = app.add_subcommand("gibbs-run", "Sample one Gibbs posterior and write the chain");
    gr->add_option("config", config_path)->required();
    gr->add_option("--n", n_override, "Sample size (overrides certificate.n)");
    gr->callback([&] { action = [&] { return cmd_gibbs_run(g, config_path, n_override, out); }; });

    auto* ex = app.add_subcommand("experiment", "Risk-scaling study over an n-grid");
    ex->add_option("config", config_path)->required();
    ex->callback([&] { action = [&] { return cmd_experiment(g, config_path, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    if (*seed_opt) g.seed = seed_value;
    if (g.threads > 0) set_thread_count(g.threads);

    const bool rlct_command = rlct->parsed();
    try {
        status = action ? action() : exit_usage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        status = exit_usage;
    } catch (const ConstraintError& e) {
        err << "error: " << e.what() << '\n';
        status = rlct_command ? exit_usage : exit_constraint;
    } catch (const DiagnosticError& e) {
        err << "diagnostic failure: " << e.what() << '\n';
        status = exit_diagnostic;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        status = exit_usage;
    }
    if (status == exit_usage && rlct_command) err << rlct->help();
    return status;
}

}  // namespace sb
