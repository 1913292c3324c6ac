#include "singular_bound/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/rational.hpp"

namespace sb {

std::string_view method_name(PartitionMethod method) {
    return method == PartitionMethod::quadrature ? "quadrature" : "thermo";
}

std::string partition_csv(std::span<const PartitionEstimate> estimates) {
    std::ostringstream os;
    os << "n,beta,neg_log_z,std_err,method\n";
    for (const auto& e : estimates)
        os << format_double(e.n) << ',' << format_double(e.beta) << ',' << format_double(e.neg_log_z) << ','
           << format_double(e.std_err) << ',' << method_name(e.method) << '\n';
    return os.str();
}

namespace {

std::size_t default_cap(std::size_t dim) {
    switch (dim) {
        case 1: return 65536;
        case 2: return 4096;
        default: return 512;
    }
}

double integrate_once(const Integrand& risk, std::span<const int> h, double scale, std::size_t points, Exec exec) {
    const auto rule = composite_gauss_legendre(0.0, 1.0, points);
    const std::size_t dim = h.size();
    const Integrand f = [&](std::span<const double> u) {
        const double r = risk(u);
        double w = std::exp(-scale * r);
        for (std::size_t j = 0; j < dim; ++j)
            if (h[j] != 0) w *= std::pow(u[j], h[j]);
        if (!std::isfinite(w)) throw DiagnosticError("quadrature: nonfinite integrand sample");
        return w;
    };
    return tensor_integral(f, dim, rule, exec);
}

}  // namespace

PartitionEstimate neg_log_z_quadrature(const Integrand& risk, std::span<const int> h, double beta, double n,
                                       const QuadratureOptions& options) {
    const std::size_t dim = h.size();
    if (dim == 0 || dim > 3) throw ConstraintError("quadrature: dimension must be 1, 2 or 3");
    if (options.points_per_axis < 64 || options.points_per_axis % 8 != 0)
        throw ConstraintError("quadrature: points_per_axis must be a multiple of 8 and at least 64");
    if (!(beta > 0.0) || !(n > 0.0)) throw ConstraintError("quadrature: beta and n must be positive");
    for (int hj : h)
        if (hj < 0) throw ConstraintError("quadrature: weight exponents must be nonnegative");
    const std::size_t cap = options.max_points ? options.max_points : default_cap(dim);

    std::size_t points = options.points_per_axis;
    double previous = -std::log(integrate_once(risk, h, n * beta, points, options.exec));
    while (true) {
        if (points * 2 > cap)
            throw DiagnosticError("quadrature: refinement did not settle within the grid cap");
        points *= 2;
        const double z = integrate_once(risk, h, n * beta, points, options.exec);
        if (!(z > 0.0) || !std::isfinite(z)) throw DiagnosticError("quadrature: integral is not positive and finite");
        const double current = -std::log(z);
        if (std::abs(current - previous) < options.tolerance)
            return {n, beta, current, 0.0, PartitionMethod::quadrature};
        previous = current;
    }
}

Integrand monomial_risk(std::vector<int> k) {
    return [k = std::move(k)](std::span<const double> u) {
        double r = 1.0;
        for (std::size_t j = 0; j < k.size(); ++j) r *= std::pow(u[j], 2 * k[j]);
        return r;
    };
}

double state_density_lower_bound(std::span<const int> k, std::span<const int> h, std::span<const int> k_rest,
                                 std::span<const int> h_rest, double beta, double n) {
    if (k.empty() || k.size() != h.size()) throw ConstraintError("state density: k and h must be nonempty and equal length");
    if (k_rest.size() != h_rest.size()) throw ConstraintError("state density: k' and h' lengths differ");
    if (!(n > 1.0)) throw ConstraintError("state density: n must exceed 1");
    if (!(beta > 0.0)) throw ConstraintError("state density: beta must be positive");
    for (std::size_t i = 0; i < k.size(); ++i)
        if (k[i] < 1 || h[i] < 0) throw ConstraintError("state density: leading block needs k >= 1, h >= 0");
    const Rational lambda(h[0] + 1, 2 * static_cast<std::int64_t>(k[0]));
    for (std::size_t i = 1; i < k.size(); ++i)
        if (Rational(h[i] + 1, 2 * static_cast<std::int64_t>(k[i])) != lambda)
            throw ConstraintError("state density: leading block ratios (h+1)/(2k) must all be equal");
    for (std::size_t j = 0; j < k_rest.size(); ++j) {
        if (k_rest[j] < 0 || h_rest[j] < 0) throw ConstraintError("state density: exponents must be nonnegative");
        if (k_rest[j] > 0 && !(Rational(h_rest[j] + 1, 2 * static_cast<std::int64_t>(k_rest[j])) > lambda))
            throw ConstraintError("state density: remaining ratios must exceed lambda");
    }

    const int m = static_cast<int>(k.size());
    const double lam = lambda.to_double();
    const double log_n = std::log(n);
    double value = std::pow(log_n, m - 1) / std::pow(n, lam);
    for (int hj : h_rest) value /= hj + 1;
    double k_prod = 1.0;
    for (int ki : k) k_prod *= ki;
    value /= std::ldexp(1.0, m) * std::tgamma(static_cast<double>(m)) * k_prod;
    value /= lam * std::exp(beta);
    return value;
}

std::vector<double> power_schedule(std::size_t rungs, double power) {
    if (rungs < 1) throw ConstraintError("schedule: need at least one step");
    if (!(power > 0.0)) throw ConstraintError("schedule: power must be positive");
    std::vector<double> s(rungs + 1);
    for (std::size_t t = 0; t <= rungs; ++t)
        s[t] = std::pow(static_cast<double>(t) / static_cast<double>(rungs), power);
    return s;
}

std::vector<double> geometric_schedule(std::size_t rungs, double s_min) {
    if (rungs < 1) throw ConstraintError("schedule: need at least one step");
    if (!(s_min > 0.0 && s_min < 1.0)) throw ConstraintError("schedule: s_min must lie in (0, 1)");
    std::vector<double> s{0.0};
    const double ratio = std::pow(1.0 / s_min, 1.0 / static_cast<double>(rungs));
    for (std::size_t t = 0; t < rungs; ++t) s.push_back(s_min * std::pow(ratio, static_cast<double>(t)));
    s.push_back(1.0);
    return s;
}

namespace {

void check_schedule(std::span<const double> s) {
    if (s.size() < 8) throw ConstraintError("thermo: schedule needs at least 8 rungs");
    if (s.front() != 0.0 || s.back() != 1.0) throw ConstraintError("thermo: schedule must run from 0 to 1");
    for (std::size_t t = 1; t < s.size(); ++t)
        if (!(s[t] > s[t - 1])) throw ConstraintError("thermo: schedule must be strictly increasing");
}

ThermoRung prior_rung(const RiskFunction& risk, const Box& prior, const ThermoOptions& o, std::uint64_t stream) {
    const std::size_t per_chain = o.mcmc.iterations / o.mcmc.thinning;
    std::vector<double> values;
    values.reserve(per_chain * o.chains);
    for (std::size_t c = 0; c < o.chains; ++c) {
        Rng rng(o.seed, stream + c);
        for (std::size_t i = 0; i < per_chain; ++i) {
            const auto theta = prior.sample(rng);
            const double r = risk(theta);
            if (!std::isfinite(r)) throw DiagnosticError("thermo: nonfinite risk at a prior draw");
            values.push_back(r);
        }
    }
    const auto ms = batch_means(values, 1);
    return {0.0, ms.mean, ms.std_err, 1.0, false};
}

}  // namespace

ThermoResult thermo_integration(const RiskFunction& risk, const Box& prior, double beta, double n,
                                const ThermoOptions& options) {
    prior.validate();
    check_schedule(options.schedule);
    options.mcmc.validate();
    if (options.mcmc.iterations < 1000) throw ConstraintError("thermo: at least 1000 post burn-in iterations per rung");
    if (options.chains == 0) throw ConstraintError("thermo: at least one chain per rung");
    if (!(beta > 0.0) || !(n > 0.0)) throw ConstraintError("thermo: beta and n must be positive");
    const double nb = n * beta;
    const std::size_t T = options.schedule.size();

    auto rungs = map_chunks<ThermoRung>(
        T,
        [&](std::size_t t) {
            const std::uint64_t stream = derive_seed(label_hash("thermo-rung"), t);
            const double s = options.schedule[t];
            if (s == 0.0) return prior_rung(risk, prior, options, stream);
            auto chains = run_chains(risk, s * nb, prior, options.initial, options.mcmc, options.chains, options.seed,
                                     stream, Exec::serial);
            ThermoRung rung;
            rung.s = s;
            rung.acceptance = 1.0;
            rung.scale_saturated = true;
            KahanSum mean, var;
            for (const auto& ch : chains) {
                const auto ms = batch_means(ch.risks, options.batches);
                mean.add(ms.mean);
                var.add(ms.std_err * ms.std_err);
                rung.acceptance = std::min(rung.acceptance, ch.acceptance_rate);
                rung.scale_saturated = rung.scale_saturated && ch.scale_saturated;
                const bool too_low = ch.acceptance_rate < options.min_acceptance;
                const bool too_high = ch.acceptance_rate > options.max_acceptance && !ch.scale_saturated;
                if (too_low || too_high)
                    throw DiagnosticError("thermo: acceptance rate " + format_double(ch.acceptance_rate) +
                                          " outside the admissible band at s = " + format_double(s));
            }
            const double c = static_cast<double>(chains.size());
            rung.mean_risk = mean.value() / c;
            rung.std_err = std::sqrt(var.value()) / c;
            return rung;
        },
        options.exec);

    KahanSum total, variance;
    for (std::size_t t = 0; t < T; ++t) {
        double w = 0.0;
        if (t > 0) w += 0.5 * (options.schedule[t] - options.schedule[t - 1]);
        if (t + 1 < T) w += 0.5 * (options.schedule[t + 1] - options.schedule[t]);
        total.add(w * nb * rungs[t].mean_risk);
        const double e = w * nb * rungs[t].std_err;
        variance.add(e * e);
    }
    ThermoResult out;
    out.estimate = {n, beta, total.value(), std::sqrt(variance.value()), PartitionMethod::thermo};
    out.rungs = std::move(rungs);
    return out;
}

PartitionEstimate thermo_integration_neg_log_z(const RiskFunction& risk, const Box& prior, double beta, double n,
                                               const ThermoOptions& options) {
    return thermo_integration(risk, prior, beta, n, options).estimate;
}

nlohmann::json RlctFit::to_json() const {
    return {{"lambda_hat", lambda_hat},
            {"loglog_coef", loglog_coef},
            {"intercept", intercept},
            {"residual_rms", residual_rms}};
}

RlctFit fit_rlct_from_partition(std::span<const PartitionEstimate> estimates, bool include_loglog) {
    const std::size_t N = estimates.size();
    const std::size_t p = include_loglog ? 3 : 2;
    if (N < 3) throw ConstraintError("rlct fit: at least three estimates are required");
    std::set<double> distinct;
    bool weighted = true;
    for (const auto& e : estimates) {
        if (!(e.n > std::numbers::e)) throw ConstraintError("rlct fit: every n must exceed e");
        if (!std::isfinite(e.neg_log_z)) throw ConstraintError("rlct fit: nonfinite neg_log_z");
        distinct.insert(e.n);
        if (!(e.std_err > 0.0)) weighted = false;
    }
    if (distinct.size() != N) throw ConstraintError("rlct fit: n values must be distinct");

    Eigen::MatrixXd X(N, p);
    Eigen::VectorXd y(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double ln = std::log(estimates[i].n);
        const double w = weighted ? 1.0 / estimates[i].std_err : 1.0;
        X(i, 0) = w * ln;
        if (include_loglog) X(i, 1) = -w * std::log(ln);
        X(i, p - 1) = w;
        y(i) = w * estimates[i].neg_log_z;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < static_cast<Eigen::Index>(p)) throw ConstraintError("rlct fit: rank-deficient design");
    const Eigen::VectorXd coef = qr.solve(y);

    RlctFit fit;
    fit.lambda_hat = coef(0);
    fit.loglog_coef = include_loglog ? coef(1) : 0.0;
    fit.intercept = coef(p - 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double ln = std::log(estimates[i].n);
        double pred = fit.lambda_hat * ln + fit.intercept;
        if (include_loglog) pred -= fit.loglog_coef * std::log(ln);
        const double r = estimates[i].neg_log_z - pred;
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(N));
    return fit;
}

}  // namespace sb
