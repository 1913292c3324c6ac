#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "singular_bound/kernels.hpp"
#include "singular_bound/model_losses.hpp"

namespace sb {

/// Constants (L, b) of the Bernstein-type MGF condition
///   E exp{w (l - R)} <= exp{w^2 L R / 2}   for |w| <= 1/(2b),
/// and the learning-rate cap omega_bar = min(2/L, 1/(2b)).
struct BernsteinConstants {
    double L = 0.0;
    double b = 0.0;  // may be 0 when 1/(2b) is unbounded (bounded-noise limit)
    double omega_bar = 0.0;

    /// 1/(2b), +inf when b == 0.
    double omega_band() const;
    nlohmann::json to_json() const;
};

BernsteinConstants make_constants(double L, double b);

/// Squared loss with |f| <= B0 and sigma^2-sub-Gaussian noise:
/// L = 32 B0^2 + 4 sigma^2, 1/(2b) = min(3/(16 B0^2), 1/(2 sigma^2)).
BernsteinConstants squared_loss_constants(double B0, double sigma);

/// Logistic loss with |f| <= B3 and margin tau: b = log(1 + e^B3),
/// L = 8 / (tau (1 - tau)).
BernsteinConstants logistic_loss_constants(double B3, double tau);

struct MgfRow {
    double omega = 0.0;
    double empirical = 0.0;  // log of the sample mean of exp(w (l - R))
    double cap = 0.0;        // w^2 L R / 2
    double std_err = 0.0;    // bootstrap standard error of `empirical`
    bool pass = false;
};

struct MgfReport {
    double risk = 0.0;
    std::vector<MgfRow> rows;
    bool pass = true;

    nlohmann::json to_json() const;
};

struct MgfOptions {
    std::size_t bootstrap = 200;
    double se_multiplier = 3.0;
    /// Local-neighborhood radius (sup-norm) inside which the constants are
    /// claimed to hold; rejected if the parameter lies outside.
    std::optional<double> neighborhood_radius;
};

/// Monte Carlo check of the MGF condition at `theta` for each omega.
MgfReport empirical_mgf_check(const LossModel& model, std::span<const double> theta,
                              const BernsteinConstants& constants, std::span<const double> omegas,
                              std::size_t samples, std::uint64_t seed, const MgfOptions& options = {},
                              Exec exec = Exec::parallel);

/// One-sided exponential moment bounds implied by the MGF condition for
/// 0 < omega < omega_bar:
///   E exp(-w l) <= exp(-(1 - wL/2) w R),   E exp(w l) <= exp((1 + wL/2) w R),
/// each accepted when the sample mean is at most bound * (1 + k * stderr).
struct SubExponentialCheck {
    double risk = 0.0;
    double minus_mean = 0.0, minus_se = 0.0, minus_bound = 0.0;
    double plus_mean = 0.0, plus_se = 0.0, plus_bound = 0.0;
    bool pass = false;
};

SubExponentialCheck sub_exponential_check(const LossModel& model, std::span<const double> theta, double omega,
                                          double L, std::size_t samples, std::uint64_t seed,
                                          double se_multiplier = 3.0, Exec exec = Exec::parallel);

/// Draws `samples` excess losses l(theta, theta*; Z) in fixed chunks, each
/// chunk with its own RNG stream.
std::vector<double> sample_excess_losses(const LossModel& model, std::span<const double> theta,
                                         std::size_t samples, std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace sb
