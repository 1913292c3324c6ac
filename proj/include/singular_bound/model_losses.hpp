#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "singular_bound/kernels.hpp"
#include "singular_bound/rng.hpp"

namespace sb {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Data

enum class DataKind { completion, regression, classification, none };

/// One observation. Completion records use (i, j, y); regression and
/// classification records use (x, y), with y in {-1, +1} for classification.
struct Observation {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::vector<double> x;
    double y = 0.0;
};

struct Dataset {
    DataKind kind = DataKind::none;
    std::vector<Observation> observations;
    std::uint64_t seed = 0;

    std::size_t n() const { return observations.size(); }
};

/// CSV with header `i,j,y` (completion) or `x0,..,xk,y` (regression /
/// classification). Values are written with round-trip precision.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text, DataKind kind);

// ---------------------------------------------------------------------------
// Matrix completion truth

struct MatrixCompletionTruth {
    int d1 = 0;
    int d2 = 0;
    int r = 0;
    int H = 0;
    Matrix M_star;
    Matrix P0;
    Matrix Q0;
    double sigma1 = 0.0;
    double B1 = 1.0;

    /// Throws ConstraintError if an invariant fails: rank(M_star) = r, P0/Q0
    /// invertible, P0 diag(I_r, 0) Q0 = M_star, |M_star| <= B1, r <= H <=
    /// min(d1, d2), H + r <= d1 + d2.
    void validate() const;

    /// Builds the truth M_star = U_star V_star and completes U_star's columns
    /// and V_star's rows to the invertible P0, Q0 of the rank-normal form.
    static MatrixCompletionTruth from_factors(const Matrix& U_star, const Matrix& V_star, int H,
                                              double sigma1, double B1);

    /// Random rank-r truth whose factors have entries in [-scale, scale].
    static MatrixCompletionTruth random(int d1, int d2, int r, int H, double sigma1, double B1,
                                        double scale, std::uint64_t seed);
};

Dataset generate_completion_data(const MatrixCompletionTruth& truth, std::size_t n, std::uint64_t seed);

/// ||M - M_star||_F^2 / (d1 d2).
double population_excess_risk_completion(const Matrix& M, const MatrixCompletionTruth& truth);

// ---------------------------------------------------------------------------
// ReLU networks

struct ReluNetwork {
    std::vector<int> widths;        // H1 .. HN
    std::vector<Matrix> weights;    // W(k), shape H_k x H_{k-1}, k = 2..N
    std::vector<Vector> biases;     // b(k), length H_k
    double B2 = 1.0;

    void validate() const;
    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    static ReluNetwork unflatten(const std::vector<int>& widths, std::span<const double> theta);
};

/// f^(N)(W, b, x): affine map followed by ReLU at every layer k = 2..N.
Vector relu_forward(const ReluNetwork& net, const Vector& x);

/// All layer outputs f^(1) = x, f^(2), ..., f^(N).
std::vector<Vector> relu_activations(const ReluNetwork& net, const Vector& x);

/// Number of free parameters for the given widths.
std::size_t relu_parameter_count(std::span<const int> widths);

/// Realizes a smaller network inside wider/deeper widths: hidden layers are
/// zero-padded, extra depth passes the last hidden layer through identity
/// blocks (exact because those activations are nonnegative).
ReluNetwork embed_network(const ReluNetwork& truth, const std::vector<int>& widths);

/// Upper bound on |f^(N)| over parameters in [-param_bound, param_bound] and
/// inputs in [input_lo, input_hi]^H1, by interval propagation.
double relu_output_bound(std::span<const int> widths, double param_bound, double input_lo, double input_hi);

// ---------------------------------------------------------------------------
// Logistic excess risk

struct LogisticMargin {
    double B3 = 1.0;
    double tau = 0.25;
};

/// Mean over sample points of the conditional excess logistic risk
/// E_{Y|X}[l(f(X),Y) - l(f*(X),Y)] where P(Y=1|X) = eta.
double logistic_excess_risk(std::span<const double> f_values, std::span<const double> fstar_values,
                            std::span<const double> eta, const LogisticMargin& margin);

// ---------------------------------------------------------------------------
// Loss models

using EmpiricalRisk = std::function<double(std::span<const double>)>;

/// A learning problem: parameter space, data distribution and excess loss
/// l(theta, theta*; Z) relative to a fixed population minimizer theta*.
class LossModel {
public:
    virtual ~LossModel() = default;

    virtual std::string family() const = 0;
    virtual DataKind data_kind() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> truth_parameters() const = 0;

    virtual double population_excess_risk(std::span<const double> theta) const = 0;
    virtual double excess_loss(std::span<const double> theta, const Observation& z) const = 0;
    virtual Observation draw(Rng& rng) const = 0;

    /// Returns theta -> R_n(theta). The default averages excess_loss; models
    /// override it with cheaper sufficient-statistic or parallel versions.
    virtual EmpiricalRisk bind(const Dataset& data) const;

    /// sup_x |f_theta(x) - f*(x)| where the model has a function-space
    /// meaning, used to enforce local-neighborhood checks.
    virtual std::optional<double> sup_deviation(std::span<const double> /*theta*/) const {
        return std::nullopt;
    }

    Dataset generate(std::size_t n, std::uint64_t seed) const;
};

/// (1/n) sum_k l(theta, theta*; Z_k). Throws on an empty dataset.
double empirical_excess_risk(std::span<const double> theta, const Dataset& data, const LossModel& model);

/// Low-rank factorization M = U V with U: d1 x H, V: H x d2. Parameters are
/// U row-major followed by V row-major.
class CompletionModel final : public LossModel {
public:
    explicit CompletionModel(MatrixCompletionTruth truth);

    std::string family() const override { return "completion"; }
    DataKind data_kind() const override { return DataKind::completion; }
    std::size_t dimension() const override;
    std::vector<double> truth_parameters() const override;
    double population_excess_risk(std::span<const double> theta) const override;
    double excess_loss(std::span<const double> theta, const Observation& z) const override;
    Observation draw(Rng& rng) const override;
    EmpiricalRisk bind(const Dataset& data) const override;

    Matrix product(std::span<const double> theta) const;
    /// theta with U = M and V = I (requires H == d2).
    std::vector<double> parameters_for(const Matrix& M) const;
    const MatrixCompletionTruth& truth() const { return truth_; }

private:
    MatrixCompletionTruth truth_;
};

/// Squared-loss regression with a ReLU network of `widths`; inputs uniform
/// on [input_lo, input_hi]^H1, y = f*(x) + N(0, sigma2^2). The population
/// risk E_X||f_theta - f*||^2 is evaluated on a fixed seeded design of
/// `eval_points` inputs.
class ReluRegressionModel final : public LossModel {
public:
    ReluRegressionModel(ReluNetwork truth, std::vector<int> widths, double sigma2, double input_lo,
                        double input_hi, std::size_t eval_points = 2048, std::uint64_t eval_seed = 7);

    std::string family() const override { return "relu"; }
    DataKind data_kind() const override { return DataKind::regression; }
    std::size_t dimension() const override { return parameter_count_; }
    std::vector<double> truth_parameters() const override { return truth_embedded_; }
    double population_excess_risk(std::span<const double> theta) const override;
    double excess_loss(std::span<const double> theta, const Observation& z) const override;
    Observation draw(Rng& rng) const override;
    EmpiricalRisk bind(const Dataset& data) const override;

    /// R_n over a dataset; kernel exposed for the serial/parallel comparison.
    double empirical_risk(std::span<const double> theta, const Dataset& data, Exec exec) const;

    const std::vector<int>& widths() const { return widths_; }
    const ReluNetwork& truth_network() const { return truth_; }
    double sigma2() const { return sigma2_; }

    /// Scalar network output on flat parameters.
    double forward(std::span<const double> theta, std::span<const double> x, std::vector<double>& scratch) const;

private:
    ReluNetwork truth_;
    std::vector<int> widths_;
    double sigma2_;
    double input_lo_;
    double input_hi_;
    std::size_t parameter_count_;
    std::vector<double> truth_embedded_;
    std::vector<double> eval_x_;      // eval_points x H1, row-major
    std::vector<double> eval_fstar_;  // f*(x) on the design
};

/// Logistic classification with linear logit f_theta(x) = theta0 + theta1 x,
/// x uniform on [-1, 1], labels Y = +1 with probability sigmoid(f*(x)).
class LogisticModel final : public LossModel {
public:
    LogisticModel(double intercept, double slope, LogisticMargin margin);

    std::string family() const override { return "logistic"; }
    DataKind data_kind() const override { return DataKind::classification; }
    std::size_t dimension() const override { return 2; }
    std::vector<double> truth_parameters() const override { return {intercept_, slope_}; }
    double population_excess_risk(std::span<const double> theta) const override;
    double excess_loss(std::span<const double> theta, const Observation& z) const override;
    Observation draw(Rng& rng) const override;
    std::optional<double> sup_deviation(std::span<const double> theta) const override;

    const LogisticMargin& margin() const { return margin_; }

private:
    double intercept_;
    double slope_;
    LogisticMargin margin_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Data-free model whose excess loss equals a deterministic risk function,
/// so R_n = R. Used for toy problems (R = 0, R = theta^2) and oracles.
class DeterministicRiskModel final : public LossModel {
public:
    DeterministicRiskModel(std::size_t dim, std::function<double(std::span<const double>)> risk,
                           std::vector<double> truth, std::string name = "deterministic");

    std::string family() const override { return name_; }
    DataKind data_kind() const override { return DataKind::none; }
    std::size_t dimension() const override { return dim_; }
    std::vector<double> truth_parameters() const override { return truth_; }
    double population_excess_risk(std::span<const double> theta) const override { return risk_(theta); }
    double excess_loss(std::span<const double> theta, const Observation&) const override { return risk_(theta); }
    Observation draw(Rng&) const override { return {}; }

private:
    std::size_t dim_;
    std::function<double(std::span<const double>)> risk_;
    std::vector<double> truth_;
    std::string name_;
};

}  // namespace sb
