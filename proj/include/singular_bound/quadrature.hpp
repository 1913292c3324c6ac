#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "singular_bound/kernels.hpp"

namespace sb {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` points on [-1, 1] (Newton iteration on
/// the Legendre recurrence).
QuadratureRule gauss_legendre(std::size_t order);

/// Composite Gauss-Legendre rule on [lo, hi]: `points` total nodes split into
/// equal panels of `panel_order` nodes each. `points` must be a multiple of
/// `panel_order`.
QuadratureRule composite_gauss_legendre(double lo, double hi, std::size_t points,
                                        std::size_t panel_order = 8);

using Integrand = std::function<double(std::span<const double>)>;

/// Tensor-product integral of f over [0,1]^dim with the same 1-D rule on
/// every axis. Slices along the first axis are the unit of parallel work;
/// each slice is summed sequentially and slices are merged in order.
double tensor_integral(const Integrand& f, std::size_t dim, const QuadratureRule& rule,
                       Exec exec = Exec::parallel);

}  // namespace sb
