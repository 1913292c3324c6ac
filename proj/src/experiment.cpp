#include "singular_bound/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/rlct.hpp"
#include "singular_bound/svg_plot.hpp"

namespace sb {

const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "seed",
        "model.family", "model.d1", "model.d2", "model.rank", "model.width", "model.sigma", "model.bound",
        "model.truth_seed", "model.truth_scale", "model.truth_u", "model.truth_v", "model.true_widths",
        "model.widths", "model.truth_params", "model.input_lo", "model.input_hi", "model.eval_points",
        "model.intercept", "model.slope", "model.B3", "model.tau", "model.dim", "model.L", "model.b",
        "gibbs.omega", "gibbs.omega_fraction", "gibbs.allow_uncertified", "gibbs.prior_lo", "gibbs.prior_hi",
        "gibbs.proposal_scale", "gibbs.chain_length", "gibbs.burn_in", "gibbs.thinning", "gibbs.chains",
        "gibbs.adapt", "gibbs.start",
        "certificate.delta", "certificate.n", "certificate.rlct_source", "certificate.lambda", "certificate.m",
        "certificate.c0",
        "grid.n", "grid.replicates",
        "thermo.enabled", "thermo.beta", "thermo.schedule", "thermo.rungs", "thermo.power", "thermo.s_min",
        "thermo.iterations", "thermo.burn_in", "thermo.thinning", "thermo.chains", "thermo.start",
        "thermo.include_loglog", "thermo.proposal_scale",
        "output.dir", "output.formats",
    };
    return keys;
}

namespace {

Matrix matrix_from_list(const std::vector<double>& values, int rows, int cols, const std::string& key) {
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ConfigError(key + ": expected " + std::to_string(rows * cols) + " values");
    Matrix M(rows, cols);
    std::copy(values.begin(), values.end(), M.data());
    return M;
}

int positive_int(const Config& c, const std::string& key, long long fallback) {
    const long long v = c.get_int(key, fallback);
    if (v < 1) throw ConfigError(key + " must be a positive integer");
    return static_cast<int>(v);
}

std::size_t count_key(const Config& c, const std::string& key, long long fallback) {
    return static_cast<std::size_t>(positive_int(c, key, fallback));
}

}  // namespace

Problem build_problem(const Config& config) {
    Problem p;
    p.family = config.get_string("model.family", "completion");
    const double lo = config.get_double("gibbs.prior_lo", -1.0);
    const double hi = config.get_double("gibbs.prior_hi", 1.0);
    const double reach = std::max(std::abs(lo), std::abs(hi));
    const std::uint64_t truth_seed = config.get_seed("model.truth_seed", 1);
    const double truth_scale = config.get_double("model.truth_scale", 0.8);

    if (p.family == "completion") {
        const int d1 = positive_int(config, "model.d1", 2);
        const int d2 = positive_int(config, "model.d2", 2);
        const int r = positive_int(config, "model.rank", 1);
        const int H = positive_int(config, "model.width", 2);
        const double sigma = config.get_double("model.sigma", 0.5);
        p.B0 = config.get_double("model.bound", H * reach * reach);
        if (config.has("model.truth_u") || config.has("model.truth_v")) {
            const Matrix U = matrix_from_list(config.get_doubles("model.truth_u", {}), d1, r, "model.truth_u");
            const Matrix V = matrix_from_list(config.get_doubles("model.truth_v", {}), r, d2, "model.truth_v");
            p.completion = MatrixCompletionTruth::from_factors(U, V, H, sigma, p.B0);
        } else {
            p.completion = MatrixCompletionTruth::random(d1, d2, r, H, sigma, p.B0, truth_scale, truth_seed);
        }
        p.model = std::make_unique<CompletionModel>(*p.completion);
        p.constants = squared_loss_constants(p.B0, sigma);
    } else if (p.family == "relu") {
        p.true_widths = config.get_ints("model.true_widths", {2, 2, 1});
        const auto widths = config.get_ints("model.widths", {2, 4, 4, 1});
        const double sigma = config.get_double("model.sigma", 0.1);
        const double in_lo = config.get_double("model.input_lo", -1.0);
        const double in_hi = config.get_double("model.input_hi", 1.0);
        std::vector<double> theta;
        if (config.has("model.truth_params")) {
            theta = config.get_doubles("model.truth_params", {});
        } else {
            Rng rng(truth_seed, label_hash("relu-truth"));
            theta.resize(relu_parameter_count(p.true_widths));
            for (double& v : theta) v = truth_scale * (2.0 * rng.uniform() - 1.0);
        }
        ReluNetwork truth = ReluNetwork::unflatten(p.true_widths, theta);
        p.B0 = config.get_double("model.bound", relu_output_bound(widths, reach, in_lo, in_hi));
        truth.B2 = p.B0;
        p.model = std::make_unique<ReluRegressionModel>(
            std::move(truth), widths, sigma, in_lo, in_hi,
            static_cast<std::size_t>(positive_int(config, "model.eval_points", 2048)));
        p.constants = squared_loss_constants(p.B0, sigma);
    } else if (p.family == "logistic") {
        LogisticMargin margin;
        margin.B3 = config.get_double("model.B3", 2.0 * reach);
        margin.tau = config.get_double("model.tau", 0.25);
        p.B0 = margin.B3;
        p.model = std::make_unique<LogisticModel>(config.get_double("model.intercept", 0.3),
                                                  config.get_double("model.slope", 0.5), margin);
        p.constants = logistic_loss_constants(margin.B3, margin.tau);
    } else if (p.family == "zero") {
        const int dim = positive_int(config, "model.dim", 2);
        p.model = std::make_unique<DeterministicRiskModel>(
            dim, [](std::span<const double>) { return 0.0; }, std::vector<double>(dim, 0.5 * (lo + hi)), "zero");
        p.constants = make_constants(config.get_double("model.L", 2.0), config.get_double("model.b", 1.0));
    } else {
        throw ConfigError("model.family must be completion, relu, logistic or zero");
    }
    p.prior = Box::cube(p.model->dimension(), lo, hi);
    return p;
}

RlctChoice resolve_rlct(const Config& config, const Problem& problem) {
    std::string source = config.get_string("certificate.rlct_source", "");
    if (source.empty()) source = problem.family == "completion" ? "discrete" : problem.family == "relu" ? "relu" : "bic";
    const auto& t = problem.completion;
    if (source == "discrete" || source == "closed_form") {
        if (!t) throw ConfigError("certificate.rlct_source = " + source + " needs a completion model");
        const RlctPair pr = source == "discrete" ? completion_rlct(t->d1, t->d2, t->H, t->r)
                                                 : completion_rlct_closed_form(t->d1, t->d2, t->H, t->r);
        return {pr.lambda, pr.m, source};
    }
    if (source == "relu") {
        if (problem.true_widths.empty()) throw ConfigError("certificate.rlct_source = relu needs a relu model");
        return {relu_rlct_upper_bound(problem.true_widths), 1, source};
    }
    if (source == "bic")
        return {regular_bic_lambda(static_cast<std::int64_t>(problem.model->dimension())), 1, source};
    if (source == "user") {
        const auto parts = split(config.require_string("certificate.lambda"), '/');
        if (parts.size() > 2) throw ConfigError("certificate.lambda must look like p or p/q");
        const long long num = parse_int(parts[0]);
        const long long den = parts.size() == 2 ? parse_int(parts[1]) : 1;
        return {Rational(num, den), positive_int(config, "certificate.m", 1), source};
    }
    throw ConfigError("certificate.rlct_source must be discrete, closed_form, relu, bic or user");
}

double resolve_omega(const Config& config, const Problem& problem) {
    if (config.has("gibbs.omega")) return config.get_double("gibbs.omega", 0.0);
    const double fraction = config.get_double("gibbs.omega_fraction", 0.5);
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConstraintError("gibbs.omega_fraction must lie in (0, 1)");
    return fraction * problem.constants.omega_bar;
}

GibbsConfig gibbs_config(const Config& config, const Problem& problem, std::uint64_t seed) {
    GibbsConfig g;
    g.omega = resolve_omega(config, problem);
    g.prior = problem.prior;
    g.proposal_scale = config.get_double("gibbs.proposal_scale", 0.0);
    g.chain_length = count_key(config, "gibbs.chain_length", 20000);
    g.burn_in = static_cast<std::size_t>(std::max(0LL, config.get_int("gibbs.burn_in", 5000)));
    g.thinning = count_key(config, "gibbs.thinning", 10);
    g.chains = count_key(config, "gibbs.chains", 2);
    g.adapt = config.get_bool("gibbs.adapt", true);
    g.seed = seed;
    const std::string start = config.get_string("gibbs.start", "prior");
    if (start == "truth")
        g.initial = problem.model->truth_parameters();
    else if (start != "prior")
        throw ConfigError("gibbs.start must be prior or truth");
    if (config.get_bool("gibbs.allow_uncertified", false))
        g.validate();
    else
        g.validate(problem.constants);
    return g;
}

double resolve_c0(const Config& config, const Problem& problem, double omega) {
    if (config.has("certificate.c0")) return config.get_double("certificate.c0", 0.0);
    if (problem.completion) {
        const auto& t = *problem.completion;
        if (t.r >= t.H) throw ConstraintError("completion certificate requires r < H");
        return completion_c1_constant(t.d1, t.d2, t.H, t.r, omega, problem.constants.L, t.P0, t.Q0) +
               problem.prior.log_volume();
    }
    if (problem.family == "zero") return 0.0;
    throw ConfigError("certificate.c0 is required for the " + problem.family + " family");
}

BoundCertificate certify(const Config& config, const Problem& problem, std::int64_t n) {
    const double omega = resolve_omega(config, problem);
    if (!(omega > 0.0 && omega < problem.constants.omega_bar))
        throw ConstraintError("omega = " + format_double(omega) + " must lie in (0, omega_bar = " +
                              format_double(problem.constants.omega_bar) + ")");
    const auto rlct = resolve_rlct(config, problem);
    const double delta = config.get_double("certificate.delta", 0.05);
    if (!(delta > 0.0 && delta < 1.0)) throw ConstraintError("certificate.delta must lie in (0, 1)");
    return pac_bayes_certificate(rlct.lambda, rlct.m, problem.constants.L, omega, n, delta,
                                 resolve_c0(config, problem, omega), rlct.source);
}

ThermoOptions thermo_options(const Config& config, const Problem& problem, std::uint64_t seed) {
    ThermoOptions o;
    const std::string schedule = config.get_string("thermo.schedule", "power");
    const std::size_t rungs = count_key(config, "thermo.rungs", 32);
    if (schedule == "power")
        o.schedule = power_schedule(rungs, config.get_double("thermo.power", 2.0));
    else if (schedule == "geometric")
        o.schedule = geometric_schedule(rungs, config.get_double("thermo.s_min", 1e-4));
    else
        throw ConfigError("thermo.schedule must be power or geometric");
    o.mcmc.iterations = count_key(config, "thermo.iterations", 4000);
    o.mcmc.burn_in = static_cast<std::size_t>(std::max(0LL, config.get_int("thermo.burn_in", 1000)));
    o.mcmc.thinning = count_key(config, "thermo.thinning", 1);
    o.mcmc.proposal_scale = config.get_double(
        "thermo.proposal_scale",
        0.2 * problem.prior.max_width() / std::sqrt(static_cast<double>(problem.prior.dim())));
    o.chains = count_key(config, "thermo.chains", 1);
    o.seed = seed;
    const std::string start = config.get_string("thermo.start", "prior");
    if (start == "truth")
        o.initial = problem.model->truth_parameters();
    else if (start != "prior")
        throw ConfigError("thermo.start must be prior or truth");
    o.exec = Exec::serial;
    return o;
}

// ---------------------------------------------------------------------------

std::string ExperimentResult::csv() const {
    std::ostringstream os;
    os << "n,replicate,post_risk,post_risk_se,bound,neg_log_z,neg_log_z_se\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.replicate << ',' << format_double(r.post_risk) << ',' << format_double(r.post_risk_se)
           << ',' << format_double(r.bound) << ',' << format_double(r.neg_log_z) << ','
           << format_double(r.neg_log_z_se) << '\n';
    return os.str();
}

namespace {

struct GridMeans {
    std::vector<double> n, risk, bound;
};

GridMeans grid_means(const std::vector<ExperimentRow>& rows) {
    GridMeans g;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        double risk = 0.0, bound = 0.0;
        int ok = 0;
        for (; j < rows.size() && rows[j].n == rows[i].n; ++j) {
            if (!rows[j].failure.empty()) continue;
            risk += rows[j].post_risk;
            bound += rows[j].bound;
            ++ok;
        }
        if (ok > 0) {
            g.n.push_back(static_cast<double>(rows[i].n));
            g.risk.push_back(risk / ok);
            g.bound.push_back(bound / ok);
        }
        i = j;
    }
    return g;
}

}  // namespace

std::string ExperimentResult::svg() const {
    const auto g = grid_means(rows);
    LogLogPlot plot("Posterior excess risk and certificate", "n", "excess risk");
    plot.add({"posterior risk", g.n, g.risk, "#1f77b4", false});
    if (certified) plot.add({"certificate", g.n, g.bound, "#d62728", true});
    return plot.to_svg();
}

nlohmann::json ExperimentResult::summary() const {
    nlohmann::json j;
    j["omega"] = omega;
    j["certified"] = certified;
    j["rlct"] = {{"lambda", {{"num", rlct.lambda.num()}, {"den", rlct.lambda.den()}}},
                 {"m", rlct.m},
                 {"source", rlct.source}};
    j["risk_slope"] = risk_slope ? nlohmann::json(*risk_slope) : nlohmann::json(nullptr);
    j["failures"] = nlohmann::json::array();
    for (const auto& r : rows)
        if (!r.failure.empty()) j["failures"].push_back({{"n", r.n}, {"replicate", r.replicate}, {"error", r.failure}});
    if (fit) j["fit"] = fit->to_json();
    return j;
}

ExperimentResult run_experiment(const Config& config, std::uint64_t seed, Exec exec) {
    const Problem problem = build_problem(config);
    const auto grid = config.get_doubles("grid.n", {});
    if (grid.size() < 4) throw ConstraintError("grid.n needs at least 4 sample sizes");
    std::vector<std::int64_t> ns;
    for (double v : grid) {
        if (!(v >= 3.0) || v != std::floor(v)) throw ConstraintError("grid.n entries must be integers >= 3");
        ns.push_back(static_cast<std::int64_t>(v));
    }
    const int replicates = positive_int(config, "grid.replicates", 1);

    ExperimentResult result;
    result.omega = resolve_omega(config, problem);
    result.rlct = resolve_rlct(config, problem);
    result.certified = result.omega > 0.0 && result.omega < problem.constants.omega_bar;
    const GibbsConfig base = gibbs_config(config, problem, seed);

    std::vector<double> neg_log_z(ns.size(), NAN), neg_log_z_se(ns.size(), NAN);
    if (config.get_bool("thermo.enabled", false)) {
        const double beta = config.get_double("thermo.beta", 1.0);
        const RiskFunction risk = [&](std::span<const double> t) { return problem.model->population_excess_risk(t); };
        auto estimates = map_chunks<PartitionEstimate>(
            ns.size(),
            [&](std::size_t i) {
                const auto opts = thermo_options(config, problem, derive_seed(seed, label_hash("thermo"), ns[i]));
                return thermo_integration_neg_log_z(risk, problem.prior, beta, static_cast<double>(ns[i]), opts);
            },
            exec);
        for (std::size_t i = 0; i < ns.size(); ++i) {
            neg_log_z[i] = estimates[i].neg_log_z;
            neg_log_z_se[i] = estimates[i].std_err;
            if (estimates[i].n > std::exp(2.0)) result.partition.push_back(estimates[i]);
        }
        if (result.partition.size() >= 3)
            result.fit = fit_rlct_from_partition(result.partition, config.get_bool("thermo.include_loglog", false));
    }

    const std::size_t tasks = ns.size() * static_cast<std::size_t>(replicates);
    result.rows = map_chunks<ExperimentRow>(
        tasks,
        [&](std::size_t task) {
            const std::size_t i = task / static_cast<std::size_t>(replicates);
            ExperimentRow row;
            row.n = ns[i];
            row.replicate = static_cast<int>(task % static_cast<std::size_t>(replicates));
            row.neg_log_z = neg_log_z[i];
            row.neg_log_z_se = neg_log_z_se[i];
            try {
                const auto data = problem.model->generate(static_cast<std::size_t>(row.n),
                                                          derive_seed(seed, label_hash("data"), row.n, row.replicate));
                GibbsConfig g = base;
                g.seed = derive_seed(seed, label_hash("gibbs"), row.n, row.replicate);
                const auto samples = sample_gibbs_posterior(*problem.model, data, g, Exec::serial);
                const auto risk = posterior_mean_excess_risk(samples, *problem.model, Exec::serial);
                row.post_risk = risk.mean;
                row.post_risk_se = risk.std_err;
                if (result.certified) row.bound = certify(config, problem, row.n).bound_value;
            } catch (const DiagnosticError& e) {
                row.failure = e.what();
                row.post_risk = row.post_risk_se = NAN;
            }
            return row;
        },
        exec);

    const auto g = grid_means(result.rows);
    bool positive = g.n.size() >= 2;
    for (double r : g.risk) positive = positive && r > 0.0;
    if (positive) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < g.n.size(); ++i) mx += std::log(g.n[i]), my += std::log(g.risk[i]);
        mx /= static_cast<double>(g.n.size());
        my /= static_cast<double>(g.n.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < g.n.size(); ++i) {
            const double dx = std::log(g.n[i]) - mx;
            sxy += dx * (std::log(g.risk[i]) - my);
            sxx += dx * dx;
        }
        result.risk_slope = sxy / sxx;
    }
    return result;
}

void write_experiment(const ExperimentResult& result, const Config& resolved, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto formats = split(resolved.get_string("output.formats", "csv,svg,json"), ',');
    auto wants = [&](const std::string& f) {
        return std::any_of(formats.begin(), formats.end(), [&](const std::string& x) { return trim(x) == f; });
    };
    const std::filesystem::path base(dir);
    write_file((base / "resolved.conf").string(), resolved.to_text());
    if (wants("csv")) {
        write_file((base / "results.csv").string(), result.csv());
        if (!result.partition.empty()) write_file((base / "partition.csv").string(), partition_csv(result.partition));
    }
    if (wants("svg")) write_file((base / "scaling.svg").string(), result.svg());
    if (wants("json")) {
        write_file((base / "summary.json").string(), result.summary().dump(2) + "\n");
        if (result.fit) write_file((base / "fit.json").string(), result.fit->to_json().dump(2) + "\n");
    }
}

}  // namespace sb
