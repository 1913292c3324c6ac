#include "singular_bound/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singular_bound/errors.hpp"

namespace sb {

namespace {

constexpr std::size_t kChunk = 4096;

}  // namespace

double BernsteinConstants::omega_band() const {
    return b > 0.0 ? 1.0 / (2.0 * b) : std::numeric_limits<double>::infinity();
}

nlohmann::json BernsteinConstants::to_json() const {
    return {{"L", L}, {"b", b}, {"omega_bar", omega_bar}};
}

BernsteinConstants make_constants(double L, double b) {
    if (!(L > 0.0)) throw ConstraintError("Bernstein constants: L must be positive");
    if (b < 0.0) throw ConstraintError("Bernstein constants: b must be nonnegative");
    BernsteinConstants c;
    c.L = L;
    c.b = b;
    c.omega_bar = std::min(2.0 / L, c.omega_band());
    return c;
}

BernsteinConstants squared_loss_constants(double B0, double sigma) {
    if (!(B0 > 0.0)) throw ConstraintError("squared_loss_constants: B0 must be positive");
    if (sigma < 0.0) throw ConstraintError("squared_loss_constants: sigma must be nonnegative");
    const double L = 32.0 * B0 * B0 + 4.0 * sigma * sigma;
    double band = 3.0 / (16.0 * B0 * B0);
    if (sigma > 0.0) band = std::min(band, 1.0 / (2.0 * sigma * sigma));
    return make_constants(L, 1.0 / (2.0 * band));
}

BernsteinConstants logistic_loss_constants(double B3, double tau) {
    if (!(tau > 0.0 && tau < 0.5)) throw ConstraintError("logistic_loss_constants: tau must lie in (0, 1/2)");
    if (B3 < 0.0) throw ConstraintError("logistic_loss_constants: B3 must be nonnegative");
    return make_constants(8.0 / (tau * (1.0 - tau)), std::log1p(std::exp(B3)));
}

nlohmann::json MgfReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows)
        rows_json.push_back(
            {{"omega", r.omega}, {"empirical", r.empirical}, {"cap", r.cap}, {"stderr", r.std_err}, {"pass", r.pass}});
    return {{"risk", risk}, {"pass", pass}, {"rows", rows_json}};
}

std::vector<double> sample_excess_losses(const LossModel& model, std::span<const double> theta,
                                         std::size_t samples, std::uint64_t seed, Exec exec) {
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    auto parts = map_chunks<std::vector<double>>(
        chunks,
        [&](std::size_t c) {
            Rng rng(derive_seed(seed, label_hash("mgf-sample")), c);
            const std::size_t begin = c * kChunk, end = std::min(samples, begin + kChunk);
            std::vector<double> out;
            out.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) out.push_back(model.excess_loss(theta, model.draw(rng)));
            return out;
        },
        exec);
    std::vector<double> losses;
    losses.reserve(samples);
    for (auto& p : parts) losses.insert(losses.end(), p.begin(), p.end());
    return losses;
}

MgfReport empirical_mgf_check(const LossModel& model, std::span<const double> theta,
                              const BernsteinConstants& constants, std::span<const double> omegas,
                              std::size_t samples, std::uint64_t seed, const MgfOptions& options, Exec exec) {
    if (samples < 2) throw ConstraintError("empirical_mgf_check: need at least two samples");
    const double band = constants.omega_band();
    for (double w : omegas)
        if (std::abs(w) > band * (1.0 + 1e-12))
            throw ConstraintError("empirical_mgf_check: |omega| exceeds the admissible band 1/(2b)");
    if (options.neighborhood_radius) {
        const auto dev = model.sup_deviation(theta);
        if (!dev) throw ConstraintError("empirical_mgf_check: model has no sup-norm neighborhood notion");
        if (*dev > *options.neighborhood_radius)
            throw ConstraintError("empirical_mgf_check: parameter lies outside the local neighborhood");
    }

    MgfReport report;
    report.risk = model.population_excess_risk(theta);
    const std::vector<double> losses = sample_excess_losses(model, theta, samples, seed, exec);
    const std::size_t W = omegas.size();

    // Sample-major table of exp(w (l - R) - shift_w); the shift keeps the
    // exponentials in range and is added back after the log.
    std::vector<double> shift(W, 0.0);
    for (std::size_t a = 0; a < W; ++a) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double l : losses) mx = std::max(mx, omegas[a] * (l - report.risk));
        shift[a] = mx;
    }
    std::vector<double> table(samples * W);
    for (std::size_t k = 0; k < samples; ++k)
        for (std::size_t a = 0; a < W; ++a)
            table[k * W + a] = std::exp(omegas[a] * (losses[k] - report.risk) - shift[a]);

    auto log_means = [&](auto&& index_of) {
        std::vector<KahanSum> acc(W);
        for (std::size_t k = 0; k < samples; ++k) {
            const double* row = table.data() + index_of(k) * W;
            for (std::size_t a = 0; a < W; ++a) acc[a].add(row[a]);
        }
        std::vector<double> out(W);
        for (std::size_t a = 0; a < W; ++a)
            out[a] = std::log(acc[a].value() / static_cast<double>(samples)) + shift[a];
        return out;
    };

    const std::vector<double> point = log_means([](std::size_t k) { return k; });
    const std::uint64_t boot_seed = derive_seed(seed, label_hash("mgf-bootstrap"));
    const auto boots = map_chunks<std::vector<double>>(
        options.bootstrap,
        [&](std::size_t rep) {
            Rng rng(boot_seed, rep);
            std::vector<std::size_t> idx(samples);
            for (auto& i : idx) i = static_cast<std::size_t>(rng.below(samples));
            return log_means([&](std::size_t k) { return idx[k]; });
        },
        exec);

    for (std::size_t a = 0; a < W; ++a) {
        MgfRow row;
        row.omega = omegas[a];
        row.empirical = point[a];
        row.cap = omegas[a] * omegas[a] * constants.L * report.risk / 2.0;
        if (boots.size() >= 2) {
            KahanSum m, ss;
            for (const auto& b : boots) m.add(b[a]);
            const double mean = m.value() / static_cast<double>(boots.size());
            for (const auto& b : boots) ss.add((b[a] - mean) * (b[a] - mean));
            row.std_err = std::sqrt(ss.value() / static_cast<double>(boots.size() - 1));
        }
        row.pass = row.empirical <= row.cap + options.se_multiplier * row.std_err;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

SubExponentialCheck sub_exponential_check(const LossModel& model, std::span<const double> theta, double omega,
                                          double L, std::size_t samples, std::uint64_t seed,
                                          double se_multiplier, Exec exec) {
    if (!(omega > 0.0) || !(omega * L < 2.0))
        throw ConstraintError("sub_exponential_check: need 0 < omega < 2/L");
    SubExponentialCheck out;
    out.risk = model.population_excess_risk(theta);
    const auto losses = sample_excess_losses(model, theta, samples, seed, exec);
    std::vector<double> minus(losses.size()), plus(losses.size());
    for (std::size_t k = 0; k < losses.size(); ++k) {
        minus[k] = std::exp(-omega * losses[k]);
        plus[k] = std::exp(omega * losses[k]);
    }
    const auto m = batch_means(minus, 1);
    const auto p = batch_means(plus, 1);
    out.minus_mean = m.mean;
    out.minus_se = m.std_err;
    out.plus_mean = p.mean;
    out.plus_se = p.std_err;
    out.minus_bound = std::exp(-(1.0 - omega * L / 2.0) * omega * out.risk);
    out.plus_bound = std::exp((1.0 + omega * L / 2.0) * omega * out.risk);
    out.pass = out.minus_mean <= out.minus_bound * (1.0 + se_multiplier * out.minus_se) &&
               out.plus_mean <= out.plus_bound * (1.0 + se_multiplier * out.plus_se);
    return out;
}

}  // namespace sb
