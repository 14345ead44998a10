#include "nqm/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace nqm {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

GaussLegendre::GaussLegendre(int n, double a, double b) : nodes(n), weights(n) {
    if (n < 1) throw std::invalid_argument("GaussLegendre needs at least one node");
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    if (n == 1) {
        nodes[0] = mid;
        weights[0] = 2.0 * half;
        return;
    }
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(n, x).second;
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = weights[n - 1 - i] = half * 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

std::vector<std::vector<double>> fd_weights(double z, std::span<const double> x, int m) {
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k > 0; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k > 0; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> out(m + 1, std::vector<double>(n + 1));
    for (int k = 0; k <= m; ++k)
        for (int i = 0; i <= n; ++i) out[k][i] = c[i][k];
    return out;
}

double scaled_bessel_i0(double z) {
    if (z < 0.0) z = -z;
    if (z < 500.0) return std::exp(-z) * std::cyl_bessel_i(0.0, z);
    // asymptotic expansion, terms ((2k-1)!!)^2 / (k! (8z)^k)
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 8; ++k) {
        term *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * z);
        sum += term;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace nqm
