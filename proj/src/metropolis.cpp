#include "singular_bound/metropolis.hpp"

#include <algorithm>
#include <cmath>

#include "singular_bound/errors.hpp"

namespace sb {

Box Box::cube(std::size_t dim, double lo, double hi) {
    Box b{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
    b.validate();
    return b;
}

void Box::validate() const {
    if (lo.size() != hi.size()) throw ConstraintError("box: lo and hi lengths differ");
    if (lo.empty()) throw ConstraintError("box: zero dimension");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i]))
            throw ConstraintError("box: every interval must satisfy lo < hi");
}

double Box::max_width() const {
    double w = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) w = std::max(w, width(i));
    return w;
}

double Box::log_volume() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += std::log(width(i));
    return s;
}

bool Box::contains(std::span<const double> theta) const {
    if (theta.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
    return true;
}

std::vector<double> Box::midpoint() const {
    std::vector<double> m(dim());
    for (std::size_t i = 0; i < dim(); ++i) m[i] = 0.5 * (lo[i] + hi[i]);
    return m;
}

std::vector<double> Box::sample(Rng& rng) const {
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i) x[i] = lo[i] + width(i) * rng.uniform();
    return x;
}

double reflect_into(double x, double lo, double hi) {
    const double w = hi - lo;
    double y = std::fmod(x - lo, 2.0 * w);
    if (y < 0.0) y += 2.0 * w;
    if (y > w) y = 2.0 * w - y;
    return lo + y;
}

void MetropolisConfig::validate() const {
    if (!(proposal_scale > 0.0) || !std::isfinite(proposal_scale))
        throw ConstraintError("metropolis: proposal_scale must be positive");
    if (iterations == 0) throw ConstraintError("metropolis: iterations must be positive");
    if (thinning == 0) throw ConstraintError("metropolis: thinning must be positive");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
        throw ConstraintError("metropolis: target_acceptance must lie in (0, 1)");
}

ChainResult run_metropolis(const RiskFunction& risk, double inverse_temperature, const Box& box,
                           std::span<const double> initial, const MetropolisConfig& config, Rng& rng) {
    box.validate();
    config.validate();
    if (!(inverse_temperature >= 0.0) || !std::isfinite(inverse_temperature))
        throw ConstraintError("metropolis: inverse temperature must be finite and nonnegative");
    const std::size_t d = box.dim();

    std::vector<double> current = initial.empty() ? box.sample(rng) : std::vector<double>(initial.begin(), initial.end());
    if (!box.contains(current)) throw ConstraintError("metropolis: initial state outside the prior box");
    double current_risk = risk(current);
    if (!std::isfinite(current_risk)) throw DiagnosticError("metropolis: nonfinite risk at the initial state");

    const double cap = box.max_width();
    double scale = std::min(config.proposal_scale, cap);
    std::vector<double> proposal(d);

    ChainResult out;
    out.dim = d;
    out.samples.reserve(config.iterations / config.thinning * d + d);
    out.risks.reserve(config.iterations / config.thinning + 1);

    constexpr std::size_t window = 50;
    std::size_t window_accepts = 0;
    std::size_t window_count = 0;
    std::size_t kept_accepts = 0;

    const std::size_t total = config.burn_in + config.iterations;
    for (std::size_t it = 0; it < total; ++it) {
        for (std::size_t i = 0; i < d; ++i)
            proposal[i] = reflect_into(current[i] + scale * rng.normal(), box.lo[i], box.hi[i]);
        const double r = risk(proposal);
        if (!std::isfinite(r)) throw DiagnosticError("metropolis: nonfinite risk at a proposed state");
        const double log_ratio = -inverse_temperature * (r - current_risk);
        const bool accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
        if (accept) {
            current.swap(proposal);
            current_risk = r;
        }

        if (it < config.burn_in) {
            if (config.adapt) {
                window_accepts += accept ? 1 : 0;
                if (++window_count == window) {
                    const double rate = static_cast<double>(window_accepts) / window;
                    scale *= std::exp(rate - config.target_acceptance);
                    scale = std::min(scale, cap);
                    window_accepts = 0;
                    window_count = 0;
                }
            }
            continue;
        }
        kept_accepts += accept ? 1 : 0;
        const std::size_t k = it - config.burn_in;
        if (k % config.thinning == 0) {
            out.samples.insert(out.samples.end(), current.begin(), current.end());
            out.risks.push_back(current_risk);
        }
    }
    out.acceptance_rate = static_cast<double>(kept_accepts) / static_cast<double>(config.iterations);
    out.final_scale = scale;
    out.scale_saturated = scale >= cap * (1.0 - 1e-12);
    return out;
}

std::vector<ChainResult> run_chains(const RiskFunction& risk, double inverse_temperature, const Box& box,
                                    std::span<const double> initial, const MetropolisConfig& config,
                                    std::size_t chains, std::uint64_t seed, std::uint64_t stream, Exec exec) {
    if (chains == 0) throw ConstraintError("metropolis: at least one chain is required");
    return map_chunks<ChainResult>(
        chains,
        [&](std::size_t c) {
            Rng rng(seed, stream + c);
            return run_metropolis(risk, inverse_temperature, box, initial, config, rng);
        },
        exec);
}

}  // namespace sb
