#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "singular_bound/bernstein.hpp"
#include "singular_bound/config.hpp"
#include "singular_bound/gibbs_pacbayes.hpp"
#include "singular_bound/kernels.hpp"
#include "singular_bound/metropolis.hpp"
#include "singular_bound/model_losses.hpp"
#include "singular_bound/partition.hpp"
#include "singular_bound/rational.hpp"

namespace sb {

/// Every key accepted in an experiment / certify / gibbs-run config.
const std::set<std::string>& config_keys();

/// A learning problem assembled from the `model.*` and `gibbs.prior_*` keys.
struct Problem {
    std::string family;
    std::unique_ptr<LossModel> model;
    BernsteinConstants constants;
    double B0 = 0.0;
    Box prior;
    std::optional<MatrixCompletionTruth> completion;
    std::vector<int> true_widths;
};

Problem build_problem(const Config& config);

struct RlctChoice {
    Rational lambda;
    int m = 1;
    std::string source;
};

/// `certificate.rlct_source`: discrete | closed_form | relu | bic | user.
RlctChoice resolve_rlct(const Config& config, const Problem& problem);

/// `gibbs.omega` if present, else `gibbs.omega_fraction` (default 1/2) of
/// omega_bar.
double resolve_omega(const Config& config, const Problem& problem);

GibbsConfig gibbs_config(const Config& config, const Problem& problem, std::uint64_t seed);

/// For completion, C1 - log phi0 with phi0 = 1/(box volume); other
/// families read `certificate.c0`.
double resolve_c0(const Config& config, const Problem& problem, double omega);

/// Certificate at sample size n; throws ConstraintError when omega is not
/// below omega_bar or any input is out of range.
BoundCertificate certify(const Config& config, const Problem& problem, std::int64_t n);

ThermoOptions thermo_options(const Config& config, const Problem& problem, std::uint64_t seed);

struct ExperimentRow {
    std::int64_t n = 0;
    int replicate = 0;
    double post_risk = NAN;
    double post_risk_se = NAN;
    double bound = NAN;
    double neg_log_z = NAN;
    double neg_log_z_se = NAN;
    std::string failure;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<PartitionEstimate> partition;
    std::optional<RlctFit> fit;
    std::optional<double> risk_slope;
    double omega = 0.0;
    bool certified = false;
    RlctChoice rlct;

    std::string csv() const;
    std::string svg() const;
    nlohmann::json summary() const;
};

/// For every n in `grid.n` and replicate: draw data, sample the Gibbs
/// posterior, record posterior-mean excess risk and the certificate.
/// With `thermo.enabled`, also estimates -log Z(n) and fits lambda over
/// the points with n > e^2. A DiagnosticError inside one replicate is
/// recorded in that row and does not stop the others.
ExperimentResult run_experiment(const Config& config, std::uint64_t seed, Exec exec = Exec::parallel);

/// Writes resolved.conf, results.csv, scaling.svg, summary.json and (if
/// fitted) fit.json into `dir`.
void write_experiment(const ExperimentResult& result, const Config& resolved, const std::string& dir);

}  // namespace sb
