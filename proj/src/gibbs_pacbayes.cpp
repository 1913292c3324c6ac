#include "singular_bound/gibbs_pacbayes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/rlct.hpp"

namespace sb {

void GibbsConfig::validate() const {
    prior.validate();
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConstraintError("gibbs: omega must be finite and nonnegative");
    if (proposal_scale < 0.0 || !std::isfinite(proposal_scale))
        throw ConstraintError("gibbs: proposal_scale must be positive");
    if (chain_length == 0 || thinning == 0 || chains == 0)
        throw ConstraintError("gibbs: chain_length, thinning and chains must be positive");
    if (burn_in >= chain_length) throw ConstraintError("gibbs: burn_in must be smaller than chain_length");
    if (!initial.empty() && !prior.contains(initial))
        throw ConstraintError("gibbs: initial state outside the prior box");
}

void GibbsConfig::validate(const BernsteinConstants& constants) const {
    validate();
    if (!(omega < constants.omega_bar))
        throw ConstraintError("gibbs: omega = " + format_double(omega) + " must be below omega_bar = " +
                              format_double(constants.omega_bar));
}

double GibbsConfig::effective_proposal_scale() const {
    if (proposal_scale > 0.0) return proposal_scale;
    return 0.2 * prior.max_width() / std::sqrt(static_cast<double>(prior.dim()));
}

std::size_t GibbsSamples::count() const {
    std::size_t c = 0;
    for (const auto& ch : chains) c += ch.count();
    return c;
}

std::vector<std::vector<double>> GibbsSamples::states() const {
    std::vector<std::vector<double>> out;
    out.reserve(count());
    for (const auto& ch : chains)
        for (std::size_t i = 0; i < ch.count(); ++i) {
            auto row = ch.row(i);
            out.emplace_back(row.begin(), row.end());
        }
    return out;
}

GibbsSamples sample_gibbs_posterior(const LossModel& model, const Dataset& data, const GibbsConfig& config,
                                    Exec exec) {
    config.validate();
    if (config.prior.dim() != model.dimension()) throw ConstraintError("gibbs: prior box dimension differs from the model");

    RiskFunction risk;
    std::size_t n = config.n;
    if (data.n() == 0) {
        if (model.data_kind() != DataKind::none) throw ConstraintError("gibbs: empty dataset for a data-driven model");
        if (n == 0) throw ConstraintError("gibbs: n must be given for a data-free model");
        risk = [&model](std::span<const double> theta) { return model.population_excess_risk(theta); };
    } else {
        if (data.kind != model.data_kind()) throw ConstraintError("gibbs: dataset kind does not match the model");
        if (n == 0) n = data.n();
        if (n != data.n()) throw ConstraintError("gibbs: config n differs from the dataset size");
        risk = model.bind(data);
    }

    MetropolisConfig mc;
    mc.proposal_scale = config.effective_proposal_scale();
    mc.burn_in = config.burn_in;
    mc.iterations = config.chain_length - config.burn_in;
    mc.thinning = config.thinning;
    mc.adapt = config.adapt;

    GibbsSamples out;
    out.inverse_temperature = config.omega * static_cast<double>(n);
    out.burn_in = config.burn_in;
    out.thinning = config.thinning;
    out.chains = run_chains(risk, out.inverse_temperature, config.prior, config.initial, mc, config.chains,
                            config.seed, label_hash("gibbs-chain"), exec);
    double acc = 0.0;
    for (const auto& ch : out.chains) {
        if (ch.acceptance_rate < 0.02)
            throw DiagnosticError("gibbs: acceptance rate " + format_double(ch.acceptance_rate) + " below 0.02");
        acc += ch.acceptance_rate;
        out.ess += batch_means_ess(ch.risks);
    }
    out.acceptance_rate = acc / static_cast<double>(out.chains.size());
    return out;
}

namespace {

std::vector<double> population_risks(std::span<const double> flat, std::size_t dim, std::size_t count,
                                     const LossModel& model, Exec exec) {
    constexpr std::size_t chunk = 64;
    const std::size_t chunks = (count + chunk - 1) / chunk;
    auto parts = map_chunks<std::vector<double>>(
        chunks,
        [&](std::size_t c) {
            std::vector<double> v;
            for (std::size_t i = c * chunk; i < std::min(count, (c + 1) * chunk); ++i)
                v.push_back(model.population_excess_risk(flat.subspan(i * dim, dim)));
            return v;
        },
        exec);
    std::vector<double> out;
    out.reserve(count);
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

}  // namespace

MeanStderr posterior_mean_excess_risk(const GibbsSamples& samples, const LossModel& model, Exec exec) {
    if (samples.count() == 0) throw ConstraintError("posterior risk: no samples");
    KahanSum mean, var;
    for (const auto& ch : samples.chains) {
        const auto risks = population_risks(ch.samples, ch.dim, ch.count(), model, exec);
        const auto ms = batch_means(risks);
        mean.add(ms.mean);
        var.add(ms.std_err * ms.std_err);
    }
    const double c = static_cast<double>(samples.chains.size());
    return {mean.value() / c, std::sqrt(var.value()) / c};
}

MeanStderr posterior_mean_excess_risk(std::span<const std::vector<double>> samples, const LossModel& model,
                                      Exec exec) {
    if (samples.empty()) throw ConstraintError("posterior risk: no samples");
    const std::size_t dim = samples.front().size();
    std::vector<double> flat;
    flat.reserve(samples.size() * dim);
    for (const auto& s : samples) {
        if (s.size() != dim) throw ConstraintError("posterior risk: samples have different dimensions");
        flat.insert(flat.end(), s.begin(), s.end());
    }
    const auto risks = population_risks(flat, dim, samples.size(), model, exec);
    return batch_means(risks);
}

std::string chain_csv(const GibbsSamples& samples) {
    std::ostringstream os;
    os << "chain,iter";
    for (std::size_t j = 0; j < samples.dim(); ++j) os << ",coord" << j;
    os << ",risk\n";
    for (std::size_t c = 0; c < samples.chains.size(); ++c) {
        const auto& ch = samples.chains[c];
        for (std::size_t i = 0; i < ch.count(); ++i) {
            os << c << ',' << samples.burn_in + i * samples.thinning;
            for (double v : ch.row(i)) os << ',' << format_double(v);
            os << ',' << format_double(ch.risks[i]) << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------

double certificate_bound(const Rational& lambda, int m, double L, double omega, std::int64_t n, double delta,
                         double c0) {
    if (!(lambda > Rational(0))) throw ConstraintError("certificate: lambda must be positive");
    if (m < 1) throw ConstraintError("certificate: m must be at least 1");
    if (!(L > 0.0)) throw ConstraintError("certificate: L must be positive");
    if (!(omega > 0.0)) throw ConstraintError("certificate: omega must be positive");
    if (!(omega * L < 2.0)) throw ConstraintError("certificate: omega must be below 2/L");
    if (n < 3) throw ConstraintError("certificate: n must be at least 3");
    if (!(delta > 0.0 && delta < 1.0)) throw ConstraintError("certificate: delta must lie in (0, 1)");
    if (!std::isfinite(c0)) throw ConstraintError("certificate: c0 must be finite");
    const double ln = std::log(static_cast<double>(n));
    const double bracket =
        lambda.to_double() * ln - static_cast<double>(m - 1) * std::log(ln) + std::log(2.0 / delta) + c0;
    const double prefactor = 2.0 / ((1.0 - omega * L / 2.0) * omega * static_cast<double>(n));
    return prefactor * std::max(0.0, bracket);
}

double BoundCertificate::recompute() const { return certificate_bound(lambda, m, L, omega, n, delta, c0); }

nlohmann::json BoundCertificate::to_json() const {
    return {{"lambda", rational_to_json(lambda)},
            {"m", m},
            {"L", L},
            {"omega", omega},
            {"delta", delta},
            {"n", n},
            {"c0", c0},
            {"bound", bound_value},
            {"rlct_source", rlct_source}};
}

BoundCertificate BoundCertificate::from_json(const nlohmann::json& j) {
    BoundCertificate c;
    c.lambda = rational_from_json(j.at("lambda"));
    c.m = j.at("m").get<int>();
    c.L = j.at("L").get<double>();
    c.omega = j.at("omega").get<double>();
    c.delta = j.at("delta").get<double>();
    c.n = j.at("n").get<std::int64_t>();
    c.c0 = j.at("c0").get<double>();
    c.bound_value = j.at("bound").get<double>();
    c.rlct_source = j.at("rlct_source").get<std::string>();
    return c;
}

BoundCertificate pac_bayes_certificate(const Rational& lambda, int m, double L, double omega, std::int64_t n,
                                       double delta, double c0, std::string rlct_source) {
    BoundCertificate c{lambda, m, L, omega, delta, n, c0, 0.0, std::move(rlct_source)};
    c.bound_value = c.recompute();
    return c;
}

double log_abs_det(const Matrix& A) {
    if (A.rows() != A.cols()) throw ConstraintError("log_abs_det: matrix must be square");
    Eigen::PartialPivLU<Matrix> lu(A);
    double s = 0.0;
    const auto& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double d = std::abs(U(i, i));
        if (!(d > 0.0)) throw ConstraintError("log_abs_det: singular matrix");
        s += std::log(d);
    }
    return s;
}

double completion_c1_constant(int d1, int d2, int H, int r, double omega, double L, const Matrix& P0,
                              const Matrix& Q0) {
    check_completion_dimensions(d1, d2, H, r);
    if (P0.rows() != d1 || Q0.rows() != d2) throw ConstraintError("C1: P0 must be d1 x d1 and Q0 d2 x d2");
    if (!(omega > 0.0) || !(L > 0.0)) throw ConstraintError("C1: omega and L must be positive");
    const auto fb = frobenius_conjugation_bounds(P0, Q0);
    const double a = static_cast<double>(H - r + 2);
    const double width = static_cast<double>(d1 + d2 - r);
    return 9.0 * a * a * width * std::log(2.0 * r * d1 * d2) + H * (log_abs_det(P0) + log_abs_det(Q0)) +
           0.5 * H * width * std::log(3.0 + 1.5 * omega * L) + omega * fb.upper;
}

// ---------------------------------------------------------------------------

namespace {

void check_probability(std::span<const double> p, const char* what) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConstraintError(std::string(what) + ": weights must be nonnegative");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConstraintError(std::string(what) + ": weights must sum to 1");
}

double log_sum_exp(std::span<const double> logs) {
    double mx = -INFINITY;
    for (double v : logs) mx = std::max(mx, v);
    if (mx == -INFINITY) return mx;
    KahanSum s;
    for (double v : logs) s.add(std::exp(v - mx));
    return mx + std::log(s.value());
}

}  // namespace

double kl_divergence(std::span<const double> rho, std::span<const double> prior) {
    if (rho.size() != prior.size()) throw ConstraintError("KL: length mismatch");
    KahanSum s;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] == 0.0) continue;
        if (prior[i] == 0.0) throw ConstraintError("KL: rho is not absolutely continuous with respect to the prior");
        s.add(rho[i] * std::log(rho[i] / prior[i]));
    }
    return s.value();
}

DvCheck dv_inequality_check(std::span<const double> h, std::span<const double> prior, std::span<const double> rho) {
    if (h.size() != prior.size() || h.size() != rho.size() || h.empty())
        throw ConstraintError("DV: h, prior and rho must be nonempty and equal length");
    check_probability(prior, "DV prior");
    check_probability(rho, "DV rho");
    std::vector<double> logs;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (prior[i] > 0.0) logs.push_back(std::log(prior[i]) + h[i]);
    DvCheck out;
    out.lhs = log_sum_exp(logs);
    KahanSum mean;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (rho[i] > 0.0) mean.add(rho[i] * h[i]);
    out.rhs = mean.value() - kl_divergence(rho, prior);
    out.holds = out.lhs >= out.rhs - 1e-12;
    return out;
}

std::vector<double> gibbs_weights(std::span<const double> risk, std::span<const double> prior, double scale) {
    if (risk.size() != prior.size() || risk.empty()) throw ConstraintError("gibbs weights: length mismatch");
    check_probability(prior, "gibbs weights prior");
    std::vector<double> logs(risk.size(), -INFINITY);
    for (std::size_t i = 0; i < risk.size(); ++i)
        if (prior[i] > 0.0) logs[i] = std::log(prior[i]) - scale * risk[i];
    const double lse = log_sum_exp(logs);
    std::vector<double> w(risk.size());
    for (std::size_t i = 0; i < risk.size(); ++i) w[i] = std::exp(logs[i] - lse);
    return w;
}

double variational_objective(std::span<const double> rho, std::span<const double> risk,
                             std::span<const double> prior, double scale) {
    if (!(scale > 0.0)) throw ConstraintError("variational objective: omega * n must be positive");
    KahanSum s;
    for (std::size_t i = 0; i < rho.size(); ++i) s.add(rho[i] * risk[i]);
    return s.value() + kl_divergence(rho, prior) / scale;
}

VariationalCheck variational_optimality_check(std::span<const double> risk, std::span<const double> prior,
                                              double omega, double n, std::size_t perturbations,
                                              std::uint64_t seed) {
    const double scale = omega * n;
    VariationalCheck out;
    out.gibbs = gibbs_weights(risk, prior, scale);
    out.gibbs_objective = variational_objective(out.gibbs, risk, prior, scale);
    out.best_competitor = INFINITY;
    out.optimal = true;
    Rng rng(seed, label_hash("variational"));
    const std::size_t N = risk.size();
    std::vector<double> rho(N);
    for (std::size_t p = 0; p < perturbations; ++p) {
        double total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            rho[i] = prior[i] > 0.0 ? -std::log1p(-rng.uniform()) : 0.0;
            total += rho[i];
        }
        for (double& v : rho) v /= total;
        if (p % 2 == 1) {
            const double eps = std::pow(10.0, -1.0 - 5.0 * rng.uniform());
            for (std::size_t i = 0; i < N; ++i) rho[i] = (1.0 - eps) * out.gibbs[i] + eps * rho[i];
        }
        const double obj = variational_objective(rho, risk, prior, scale);
        out.best_competitor = std::min(out.best_competitor, obj);
        if (obj < out.gibbs_objective - 1e-12) out.optimal = false;
    }
    return out;
}

}  // namespace sb
