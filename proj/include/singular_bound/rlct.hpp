#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "singular_bound/model_losses.hpp"
#include "singular_bound/rational.hpp"

namespace sb {

/// Leading pole lambda of the zeta function and its order m.
struct RlctPair {
    Rational lambda;
    int m = 1;

    /// lambda <= d/2 and m >= 1.
    bool admissible(std::int64_t ambient_dimension) const;
    nlohmann::json to_json() const;
    friend bool operator==(const RlctPair&, const RlctPair&) = default;
};

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Matrix completion

enum class CompletionRegime { case1, case2, interior_even, interior_odd };

std::string_view regime_name(CompletionRegime regime);

/// Throws ConstraintError unless 1 <= r < H <= min(d1, d2) and H + r <= d1 + d2.
void check_completion_dimensions(int d1, int d2, int H, int r);

/// h(t) = r(d1 + d2 - r) + t(d1 - r) + (H - r - t)(d2 - r - t), 0 <= t <= H - r.
std::int64_t h_of_t(int d1, int d2, int H, int r, int t);

CompletionRegime completion_regime(int d1, int d2, int H, int r);

/// lambda = min_t h(t) / 2, m = number of minimizing t.
RlctPair completion_rlct(int d1, int d2, int H, int r);

/// Piecewise four-regime formula, evaluated as printed (including the odd
/// interior term ((H - d1 + d2 - r)^2 + 1)/8).
RlctPair completion_rlct_closed_form(int d1, int d2, int H, int r);

struct CompletionRlctComparison {
    RlctPair discrete;
    RlctPair closed_form;
    CompletionRegime regime = CompletionRegime::case1;
    Rational difference;  // discrete.lambda - closed_form.lambda
    bool agree = false;

    nlohmann::json to_json() const;
};

CompletionRlctComparison compare_completion_rlct(int d1, int d2, int H, int r);

// ---------------------------------------------------------------------------
// Other models

/// One half of the free parameters of the minimal network realizing the
/// truth: (1/2) sum_{k>=2} H_k (H_{k-1} + 1).
Rational relu_rlct_upper_bound(std::span<const int> true_widths);

/// Regular-model value d/2.
Rational regular_bic_lambda(std::int64_t d);

/// Local normal-crossing data of one chart: R ~ prod u_j^{2 k_j},
/// |Jacobian| ~ prod u_j^{h_j}.
struct NormalCrossingChart {
    std::vector<int> k;
    std::vector<int> h;
};

/// lambda = min over charts and coordinates of (h_j + 1)/(2 k_j) (k_j = 0
/// contributes +inf); m = max over charts of the number of coordinates
/// attaining lambda.
RlctPair normal_crossing_rlct(std::span<const NormalCrossingChart> charts);

/// Charts from a JSON array [{"k": [...], "h": [...]}, ...].
std::vector<NormalCrossingChart> charts_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Constants used by the completion resolution

struct FrobeniusBounds {
    double lower = 0.0;  // sigma_min(P0)^2 sigma_min(Q0)^2
    double upper = 0.0;  // sigma_max(P0)^2 sigma_max(Q0)^2
};

/// Bounds for ||P0 X Q0||_F^2 / ||X||_F^2, from the spectra of P0^T P0 and
/// Q0^T Q0.
FrobeniusBounds frobenius_conjugation_bounds(const Matrix& P0, const Matrix& Q0);

/// max(2 ||A||_F^2 + 1, 2).
double finite_operator_constant(const Matrix& A);

}  // namespace sb
