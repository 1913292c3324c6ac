#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "singular_bound/kernels.hpp"
#include "singular_bound/metropolis.hpp"
#include "singular_bound/quadrature.hpp"

namespace sb {

enum class PartitionMethod { quadrature, thermo };

std::string_view method_name(PartitionMethod method);

/// -log Z(n) with Z(n) = int exp(-n beta R) dphi, plus its standard error.
struct PartitionEstimate {
    double n = 0.0;
    double beta = 1.0;
    double neg_log_z = 0.0;
    double std_err = 0.0;
    PartitionMethod method = PartitionMethod::quadrature;
};

/// CSV with header `n,beta,neg_log_z,std_err,method`.
std::string partition_csv(std::span<const PartitionEstimate> estimates);

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureOptions {
    std::size_t points_per_axis = 64;  // starting grid, multiple of 8, >= 64
    double tolerance = 1e-6;           // accepted change under 2x refinement
    std::size_t max_points = 0;        // 0 selects a cap by dimension
    Exec exec = Exec::parallel;
};

/// -log of int_{[0,1]^d} exp(-n beta risk(u)) prod u_j^{h_j} du by tensor
/// Gauss-Legendre, doubling the grid until two successive values differ by
/// less than the tolerance. Throws DiagnosticError on a nonfinite sample or
/// when the cap is reached first.
PartitionEstimate neg_log_z_quadrature(const Integrand& risk, std::span<const int> h, double beta, double n,
                                       const QuadratureOptions& options = {});

/// u -> prod u_j^{2 k_j}.
Integrand monomial_risk(std::vector<int> k);

// ---------------------------------------------------------------------------
// Lower bound on Z(n) for a normal-crossing integrand

/// (log n)^{m-1} / n^lambda * prod_j 1/(h'_j + 1) * 1/(2^m (m-1)! k_1...k_m)
///   * 1/(lambda e^beta),
/// where (k, h) is the block with (h_i + 1)/(2 k_i) = lambda for all i and
/// (k', h') the remaining coordinates, all with (h'_j + 1)/(2 k'_j) > lambda.
/// The product runs over every primed coordinate.
double state_density_lower_bound(std::span<const int> k, std::span<const int> h, std::span<const int> k_rest,
                                 std::span<const int> h_rest, double beta, double n);

// ---------------------------------------------------------------------------
// Thermodynamic integration

/// s_t = (t/T)^power for t = 0..T.
std::vector<double> power_schedule(std::size_t rungs = 32, double power = 2.0);

/// 0, s_min, s_min q, ..., 1 with `rungs` geometric steps from s_min to 1.
std::vector<double> geometric_schedule(std::size_t rungs, double s_min);

struct ThermoOptions {
    std::vector<double> schedule = power_schedule();
    MetropolisConfig mcmc;
    std::size_t chains = 1;
    std::uint64_t seed = 0;
    /// Starting state for every chain; empty means a prior draw.
    std::vector<double> initial;
    double min_acceptance = 0.05;
    double max_acceptance = 0.95;
    std::size_t batches = 20;
    Exec exec = Exec::parallel;
};

struct ThermoRung {
    double s = 0.0;
    double mean_risk = 0.0;
    double std_err = 0.0;
    double acceptance = 1.0;
    bool scale_saturated = false;
};

struct ThermoResult {
    PartitionEstimate estimate;
    std::vector<ThermoRung> rungs;
};

/// Path-sampling estimate -log Z = int_0^1 E_s[n beta R] ds over the
/// schedule, where E_s is the expectation under exp(-s n beta R) restricted
/// to the prior box. The s = 0 rung is sampled exactly from the prior; other
/// rungs by Metropolis. Rungs run in parallel. A rung whose acceptance lies
/// outside [min_acceptance, max_acceptance] raises DiagnosticError, unless
/// the acceptance is high only because the proposal scale is already capped
/// at the box width.
ThermoResult thermo_integration(const RiskFunction& risk, const Box& prior, double beta, double n,
                                const ThermoOptions& options);

PartitionEstimate thermo_integration_neg_log_z(const RiskFunction& risk, const Box& prior, double beta, double n,
                                               const ThermoOptions& options);

// ---------------------------------------------------------------------------
// Regression

struct RlctFit {
    double lambda_hat = 0.0;
    /// Coefficient of the regressor -log log n, i.e. an estimate of m - 1.
    double loglog_coef = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;

    nlohmann::json to_json() const;
};

/// Least squares of neg_log_z on [log n, -log log n (if include_loglog), 1],
/// weighted by 1/std_err^2 when every std_err is positive.
RlctFit fit_rlct_from_partition(std::span<const PartitionEstimate> estimates, bool include_loglog);

}  // namespace sb
