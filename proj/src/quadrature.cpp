#include "singular_bound/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sb {

QuadratureRule gauss_legendre(std::size_t order) {
    if (order == 0) throw std::invalid_argument("gauss_legendre: order must be positive");
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(order) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(order) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= order; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(order) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

QuadratureRule composite_gauss_legendre(double lo, double hi, std::size_t points, std::size_t panel_order) {
    if (points == 0 || points % panel_order != 0)
        throw std::invalid_argument("composite_gauss_legendre: points must be a positive multiple of the panel order");
    const QuadratureRule base = gauss_legendre(panel_order);
    const std::size_t panels = points / panel_order;
    const double width = (hi - lo) / static_cast<double>(panels);
    QuadratureRule rule;
    rule.nodes.reserve(points);
    rule.weights.reserve(points);
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = lo + width * static_cast<double>(p);
        for (std::size_t i = 0; i < panel_order; ++i) {
            rule.nodes.push_back(a + 0.5 * width * (base.nodes[i] + 1.0));
            rule.weights.push_back(0.5 * width * base.weights[i]);
        }
    }
    return rule;
}

double tensor_integral(const Integrand& f, std::size_t dim, const QuadratureRule& rule, Exec exec) {
    if (dim == 0) throw std::invalid_argument("tensor_integral: dimension must be positive");
    const std::size_t m = rule.nodes.size();
    auto slices = map_chunks<KahanSum>(
        m,
        [&](std::size_t i0) {
            KahanSum acc;
            std::vector<double> u(dim);
            std::vector<std::size_t> idx(dim, 0);
            idx[0] = i0;
            while (true) {
                double w = 1.0;
                for (std::size_t a = 0; a < dim; ++a) {
                    u[a] = rule.nodes[idx[a]];
                    w *= rule.weights[idx[a]];
                }
                acc.add(w * f(u));
                // odometer over axes 1..dim-1
                std::size_t a = dim - 1;
                while (a >= 1) {
                    if (++idx[a] < m) break;
                    idx[a] = 0;
                    --a;
                }
                if (a == 0) break;
            }
            return acc;
        },
        exec);
    KahanSum total;
    for (const auto& s : slices) total.merge(s);
    return total.value();
}

}  // namespace sb
