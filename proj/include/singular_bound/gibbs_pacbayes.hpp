#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "singular_bound/bernstein.hpp"
#include "singular_bound/kernels.hpp"
#include "singular_bound/metropolis.hpp"
#include "singular_bound/model_losses.hpp"
#include "singular_bound/rational.hpp"

namespace sb {

// ---------------------------------------------------------------------------
// Gibbs posterior sampling

struct GibbsConfig {
    double omega = 0.0;
    /// Sample size in the exponent omega * n * R_n; 0 takes it from the data.
    std::size_t n = 0;
    Box prior;
    /// 0 selects the default 0.2 * (max box width) / sqrt(dim).
    double proposal_scale = 0.0;
    std::size_t chain_length = 20000;  // total iterations, burn-in included
    std::size_t burn_in = 5000;
    std::size_t thinning = 10;
    std::uint64_t seed = 0;
    std::size_t chains = 2;
    /// Tune the proposal scale during burn-in (frozen afterwards).
    bool adapt = true;
    /// Starting state for every chain; empty means a prior draw.
    std::vector<double> initial;

    void validate() const;
    /// Additionally requires omega < omega_bar.
    void validate(const BernsteinConstants& constants) const;
    double effective_proposal_scale() const;
};

struct GibbsSamples {
    std::vector<ChainResult> chains;
    double inverse_temperature = 0.0;  // omega * n
    double acceptance_rate = 0.0;      // mean over chains
    double ess = 0.0;                  // batch-means ESS of the risk trace, summed over chains
    std::size_t burn_in = 0;
    std::size_t thinning = 1;

    std::size_t dim() const { return chains.empty() ? 0 : chains.front().dim; }
    std::size_t count() const;
    /// Kept states of all chains, chain-major.
    std::vector<std::vector<double>> states() const;
};

/// Random-walk Metropolis on exp(-omega n R_n(theta)) times the uniform
/// prior box. With an empty dataset the model must be data-free and its
/// population risk is used. Throws DiagnosticError when a chain accepts
/// fewer than 2% of its post burn-in proposals.
GibbsSamples sample_gibbs_posterior(const LossModel& model, const Dataset& data, const GibbsConfig& config,
                                    Exec exec = Exec::parallel);

/// Mean population excess risk over the kept draws with a batch-means
/// standard error (per chain, combined across chains).
MeanStderr posterior_mean_excess_risk(const GibbsSamples& samples, const LossModel& model,
                                      Exec exec = Exec::parallel);

/// Same for a plain list of parameters, treated as one sequence.
MeanStderr posterior_mean_excess_risk(std::span<const std::vector<double>> samples, const LossModel& model,
                                      Exec exec = Exec::parallel);

/// CSV with header `chain,iter,coord0..coordk,risk` (risk is R_n).
std::string chain_csv(const GibbsSamples& samples);

// ---------------------------------------------------------------------------
// Certificate

struct BoundCertificate {
    Rational lambda;
    int m = 1;
    double L = 0.0;
    double omega = 0.0;
    double delta = 0.05;
    std::int64_t n = 0;
    double c0 = 0.0;
    double bound_value = 0.0;
    std::string rlct_source = "user";

    /// Bound recomputed from the stored fields.
    double recompute() const;
    nlohmann::json to_json() const;
    static BoundCertificate from_json(const nlohmann::json& j);
};

/// 2/((1 - omega L/2) omega n) * max(0, lambda log n - (m - 1) log log n
///   + log(2/delta) + c0).
double certificate_bound(const Rational& lambda, int m, double L, double omega, std::int64_t n, double delta,
                         double c0);

BoundCertificate pac_bayes_certificate(const Rational& lambda, int m, double L, double omega, std::int64_t n,
                                       double delta, double c0, std::string rlct_source = "user");

/// log |det A|.
double log_abs_det(const Matrix& A);

/// Constant C1 of the completion certificate:
///   9 (H - r + 2)^2 (d1 + d2 - r) log(2 r d1 d2) + H log|det P0 det Q0|
///   + H (d1 + d2 - r)/2 log(3 + 3 omega L/2) + omega smax(P0)^2 smax(Q0)^2.
double completion_c1_constant(int d1, int d2, int H, int r, double omega, double L, const Matrix& P0,
                              const Matrix& Q0);

// ---------------------------------------------------------------------------
// Finite-grid identities

struct DvCheck {
    double lhs = 0.0;  // log sum prior_i exp(h_i)
    double rhs = 0.0;  // sum rho_i h_i - KL(rho || prior)
    bool holds = false;
};

/// Throws ConstraintError for invalid weights or rho not absolutely
/// continuous with respect to the prior.
DvCheck dv_inequality_check(std::span<const double> h, std::span<const double> prior, std::span<const double> rho);

double kl_divergence(std::span<const double> rho, std::span<const double> prior);

/// rho_i proportional to prior_i exp(-scale * risk_i).
std::vector<double> gibbs_weights(std::span<const double> risk, std::span<const double> prior, double scale);

/// sum rho_i risk_i + KL(rho || prior) / scale.
double variational_objective(std::span<const double> rho, std::span<const double> risk,
                             std::span<const double> prior, double scale);

struct VariationalCheck {
    bool optimal = false;
    double gibbs_objective = 0.0;
    double best_competitor = 0.0;
    std::vector<double> gibbs;
};

/// Compares the Gibbs weights with `perturbations` random competitors
/// (Dirichlet draws and mixtures of the Gibbs weights with Dirichlet draws).
VariationalCheck variational_optimality_check(std::span<const double> risk, std::span<const double> prior,
                                              double omega, double n, std::size_t perturbations,
                                              std::uint64_t seed);

}  // namespace sb
