#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "singular_bound/kernels.hpp"
#include "singular_bound/rng.hpp"

namespace sb {

/// Axis-aligned box [lo_i, hi_i], the support of the uniform prior.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    static Box cube(std::size_t dim, double lo, double hi);

    /// Throws ConstraintError for mismatched lengths or empty intervals.
    void validate() const;
    std::size_t dim() const { return lo.size(); }
    double width(std::size_t i) const { return hi[i] - lo[i]; }
    double max_width() const;
    double log_volume() const;
    bool contains(std::span<const double> theta) const;
    std::vector<double> midpoint() const;
    std::vector<double> sample(Rng& rng) const;
};

/// Folds x back into [lo, hi] by repeated mirror reflection at the ends.
double reflect_into(double x, double lo, double hi);

using RiskFunction = std::function<double(std::span<const double>)>;

struct MetropolisConfig {
    double proposal_scale = 0.1;
    std::size_t iterations = 10000;  // kept (post burn-in) iterations
    std::size_t burn_in = 1000;
    std::size_t thinning = 1;
    /// Adapt the proposal scale towards `target_acceptance` during burn-in;
    /// the scale is frozen afterwards.
    bool adapt = true;
    double target_acceptance = 0.3;

    void validate() const;
};

struct ChainResult {
    std::size_t dim = 0;
    std::vector<double> samples;  // kept states, row-major (count x dim)
    std::vector<double> risks;    // risk at each kept state
    double acceptance_rate = 0.0;
    double final_scale = 0.0;
    /// True when adaptation pushed the scale to its cap (the box width), in
    /// which case the chain is effectively proposing independent draws.
    bool scale_saturated = false;

    std::size_t count() const { return risks.size(); }
    std::span<const double> row(std::size_t i) const { return {samples.data() + i * dim, dim}; }
};

/// Random-walk Metropolis targeting exp(-inverse_temperature * risk(theta))
/// restricted to `box`. Proposals add scale * N(0, I) to every coordinate
/// and reflect each coordinate into the box; the proposal kernel stays
/// symmetric, so the plain Metropolis ratio is exact for the truncated
/// target. A nonfinite risk at a proposed point raises DiagnosticError.
ChainResult run_metropolis(const RiskFunction& risk, double inverse_temperature, const Box& box,
                           std::span<const double> initial, const MetropolisConfig& config, Rng& rng);

/// Runs `chains` independent chains, chain c using Rng(seed, stream + c).
/// An empty `initial` starts every chain from a prior draw.
std::vector<ChainResult> run_chains(const RiskFunction& risk, double inverse_temperature, const Box& box,
                                    std::span<const double> initial, const MetropolisConfig& config,
                                    std::size_t chains, std::uint64_t seed, std::uint64_t stream,
                                    Exec exec = Exec::parallel);

}  // namespace sb
