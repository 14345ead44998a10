#pragma once

#include <span>
#include <vector>

namespace nqm {

/// Gauss-Legendre rule mapped onto [a, b].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    GaussLegendre(int n, double a, double b);
};

/// Finite-difference weights for the derivatives 0..max_order at z, on
/// arbitrary stencil points (Fornberg's recursion). Row k holds the weights
/// of the k-th derivative.
std::vector<std::vector<double>> fd_weights(double z, std::span<const double> points, int max_order);

/// exp(-z) * I0(z) for z >= 0, finite for all z.
double scaled_bessel_i0(double z);

}  // namespace nqm
