#include "singular_bound/rlct.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>

#include "singular_bound/errors.hpp"

namespace sb {

bool RlctPair::admissible(std::int64_t ambient_dimension) const {
    return m >= 1 && lambda > Rational(0) && lambda <= Rational(ambient_dimension, 2);
}

nlohmann::json rational_to_json(const Rational& r) { return {{"num", r.num()}, {"den", r.den()}}; }

Rational rational_from_json(const nlohmann::json& j) {
    return Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

nlohmann::json RlctPair::to_json() const { return {{"lambda", rational_to_json(lambda)}, {"m", m}}; }

std::string_view regime_name(CompletionRegime regime) {
    switch (regime) {
        case CompletionRegime::case1: return "case1";
        case CompletionRegime::case2: return "case2";
        case CompletionRegime::interior_even: return "interior-even";
        case CompletionRegime::interior_odd: return "interior-odd";
    }
    return "unknown";
}

void check_completion_dimensions(int d1, int d2, int H, int r) {
    if (d1 < 1 || d2 < 1) throw ConstraintError("completion dimensions d1, d2 must be positive");
    if (r < 1 || r >= H) throw ConstraintError("completion RLCT requires the non-trivial case 0 < r < H");
    if (H > std::min(d1, d2)) throw ConstraintError("completion RLCT requires H <= min(d1, d2)");
    if (H + r > d1 + d2) throw ConstraintError("completion RLCT requires H + r <= d1 + d2");
}

std::int64_t h_of_t(int d1, int d2, int H, int r, int t) {
    check_completion_dimensions(d1, d2, H, r);
    if (t < 0 || t > H - r) throw ConstraintError("h(t): t must lie in [0, H - r]");
    const std::int64_t D1 = d1, D2 = d2, HH = H, R = r, T = t;
    return R * (D1 + D2 - R) + T * (D1 - R) + (HH - R - T) * (D2 - R - T);
}

CompletionRegime completion_regime(int d1, int d2, int H, int r) {
    check_completion_dimensions(d1, d2, H, r);
    if (H <= d1 - d2 + r) return CompletionRegime::case1;
    if (H <= d2 - d1 + r) return CompletionRegime::case2;
    return (H + d1 + d2 + r) % 2 == 0 ? CompletionRegime::interior_even : CompletionRegime::interior_odd;
}

RlctPair completion_rlct(int d1, int d2, int H, int r) {
    check_completion_dimensions(d1, d2, H, r);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    int count = 0;
    for (int t = 0; t <= H - r; ++t) {
        const std::int64_t v = h_of_t(d1, d2, H, r, t);
        if (v < best) {
            best = v;
            count = 1;
        } else if (v == best) {
            ++count;
        }
    }
    return {Rational(best, 2), count};
}

RlctPair completion_rlct_closed_form(int d1, int d2, int H, int r) {
    const CompletionRegime regime = completion_regime(d1, d2, H, r);
    const std::int64_t D1 = d1, D2 = d2, HH = H, R = r;
    const Rational base1(HH * D2 - HH * R + D1 * R, 2);
    const std::int64_t shift = HH - D1 + D2 - R;
    switch (regime) {
        case CompletionRegime::case1: return {base1, 1};
        case CompletionRegime::case2: return {Rational(HH * D1 - HH * R + D2 * R, 2), 1};
        case CompletionRegime::interior_even: return {base1 - Rational(shift * shift, 8), 1};
        case CompletionRegime::interior_odd: return {base1 - Rational(shift * shift + 1, 8), 2};
    }
    throw ConstraintError("unreachable regime");
}

nlohmann::json CompletionRlctComparison::to_json() const {
    nlohmann::json j = discrete.to_json();
    j["regime"] = std::string(regime_name(regime));
    j["closed_form"] = closed_form.to_json();
    j["difference"] = rational_to_json(difference);
    j["agree"] = agree;
    return j;
}

CompletionRlctComparison compare_completion_rlct(int d1, int d2, int H, int r) {
    CompletionRlctComparison c;
    c.discrete = completion_rlct(d1, d2, H, r);
    c.closed_form = completion_rlct_closed_form(d1, d2, H, r);
    c.regime = completion_regime(d1, d2, H, r);
    c.difference = c.discrete.lambda - c.closed_form.lambda;
    c.agree = c.discrete == c.closed_form;
    return c;
}

Rational relu_rlct_upper_bound(std::span<const int> true_widths) {
    if (true_widths.size() < 2) throw ConstraintError("relu_rlct_upper_bound: need at least two layers");
    std::int64_t params = 0;
    for (std::size_t k = 1; k < true_widths.size(); ++k) {
        if (true_widths[k] < 1 || true_widths[k - 1] < 1)
            throw ConstraintError("relu_rlct_upper_bound: widths must be positive");
        params += static_cast<std::int64_t>(true_widths[k]) * (true_widths[k - 1] + 1);
    }
    return Rational(params, 2);
}

Rational regular_bic_lambda(std::int64_t d) {
    if (d < 1) throw ConstraintError("regular_bic_lambda: d must be positive");
    return Rational(d, 2);
}

RlctPair normal_crossing_rlct(std::span<const NormalCrossingChart> charts) {
    if (charts.empty()) throw ConstraintError("normal_crossing_rlct: no charts");
    std::optional<Rational> best;
    for (const auto& c : charts) {
        if (c.k.size() != c.h.size()) throw ConstraintError("normal_crossing_rlct: k and h lengths differ");
        for (std::size_t j = 0; j < c.k.size(); ++j) {
            if (c.k[j] < 0 || c.h[j] < 0) throw ConstraintError("normal_crossing_rlct: exponents must be nonnegative");
            if (c.k[j] == 0) continue;
            const Rational cand(c.h[j] + 1, 2 * static_cast<std::int64_t>(c.k[j]));
            if (!best || cand < *best) best = cand;
        }
    }
    if (!best) throw ConstraintError("normal_crossing_rlct: every candidate pole is infinite");
    int m = 0;
    for (const auto& c : charts) {
        int count = 0;
        for (std::size_t j = 0; j < c.k.size(); ++j)
            if (c.k[j] > 0 && Rational(c.h[j] + 1, 2 * static_cast<std::int64_t>(c.k[j])) == *best) ++count;
        m = std::max(m, count);
    }
    return {*best, m};
}

std::vector<NormalCrossingChart> charts_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConstraintError("charts JSON must be an array");
    std::vector<NormalCrossingChart> charts;
    for (const auto& item : j) {
        NormalCrossingChart c;
        c.k = item.at("k").get<std::vector<int>>();
        c.h = item.at("h").get<std::vector<int>>();
        charts.push_back(std::move(c));
    }
    return charts;
}

namespace {

std::pair<double, double> squared_singular_range(const Matrix& A) {
    if (A.rows() != A.cols() || A.rows() == 0) throw ConstraintError("expected a nonempty square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {std::max(ev.minCoeff(), 0.0), ev.maxCoeff()};
}

}  // namespace

FrobeniusBounds frobenius_conjugation_bounds(const Matrix& P0, const Matrix& Q0) {
    const auto [p_lo, p_hi] = squared_singular_range(P0);
    const auto [q_lo, q_hi] = squared_singular_range(Q0);
    if (p_lo <= 1e-24 || q_lo <= 1e-24)
        throw ConstraintError("frobenius_conjugation_bounds: P0 and Q0 must be invertible");
    return {p_lo * q_lo, p_hi * q_hi};
}

double finite_operator_constant(const Matrix& A) { return std::max(2.0 * A.squaredNorm() + 1.0, 2.0); }

}  // namespace sb
