#include "nqm/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nqm/error.hpp"
#include "nqm/quadrature.hpp"

namespace nqm {

double RadialFilter::log_value(double x) const {
    const double v = value(x);
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Shipped filter

double AutocorrelationFilter::log_value(double x) const {
    // exponent of the integrand after pulling out exp(-x^2/8):
    // -2t^2 - 2xt + |x|t, times the scaled Bessel factor e^{-|x|t} I0(|x|t)
    const double ax = std::abs(x);
    // t = s / scale keeps the integrand O(1) wide in s for large positive x
    const double scale = x > 0.0 ? 1.0 + x : 1.0;
    const auto integrand = [x, ax, scale](double s) {
        const double t = s / scale;
        return std::exp(-2.0 * t * t - 2.0 * x * t + ax * t) * scaled_bessel_i0(ax * t);
    };
    // beyond `upper` the integrand is below e^-60 of its peak
    const double upper = x >= 0.0 ? (std::sqrt(x * x + 480.0) - x) / 4.0 : 0.75 * ax + 5.5;
    double error = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                integrand, 0.0, upper * scale, 12, 1e-13, &error) /
                            scale;
    error /= scale;
    if (!(integral > 0.0) || error > 1e-10 * integral)
        throw NumericError("filter quadrature did not converge at x = " + std::to_string(x) +
                           " (estimated error " + std::to_string(error) + ")");
    return 0.5 * std::log(8.0 / std::numbers::pi) - x * x / 8.0 + std::log(integral);
}

double AutocorrelationFilter::value(double x) const { return std::exp(log_value(x)); }

double omega(std::complex<double> u) { return FilterModel::shipped().evaluator().value(std::norm(u)); }

double omega_w(std::complex<double> xi, double w) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    return omega(xi / w);
}

// ---------------------------------------------------------------------------
// Coefficient routes

std::vector<double> taylor_coeffs_series(int max_order) {
    if (max_order < 0) throw ValidationError("order", "max order must be >= 0");
    // Expand exp(-|u+beta|^4) with u = eps real, beta = r e^{i phi}:
    //   |u+beta|^2 = s + t,  s = r^2,  t = 2 eps r cos(phi) + eps^2,
    //   exp(-(s+t)^2) = exp(-s^2) sum_k (-1)^k t^k (2s + t)^k / k!.
    // The coefficient of eps^{2i} collects t^{k+b} terms with a = 2(k+b) - 2i
    // powers of (2 r cos phi); angular and radial integrals are closed form.
    using real = long double;
    const real pi = std::numbers::pi_v<real>;
    const auto radial = [](int q) {  // Int_0^inf r^q exp(-2 r^4) dr
        const real e = real(q + 1) / 4;
        return std::tgamma(e) / (4 * std::pow(real(2), e));
    };
    const auto binom = [](int n, int k) {
        return std::exp(std::lgamma(n + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(n - k + 1.0L));
    };
    const real norm = 2 * pi * radial(1);
    std::vector<double> f(max_order + 1);
    for (int i = 0; i <= max_order; ++i) {
        real sum = 0;
        for (int k = 0; k <= 2 * i; ++k) {
            for (int b = 0; b <= k; ++b) {
                const int a = 2 * (k + b) - 2 * i;
                if (a < 0 || a > k + b) continue;
                // Int_0^{2pi} cos^a = 2 pi a! / (2^a ((a/2)!)^2)
                const real angular = 2 * pi * binom(a, a / 2) / std::pow(real(2), a);
                const real sign = (k % 2 == 0) ? 1 : -1;
                sum += sign / std::tgamma(k + 1.0L) * binom(k, b) * std::pow(real(2), k - b) * binom(k + b, a) *
                       std::pow(real(2), a) * angular * radial(2 * (k - b) + a + 1);
            }
        }
        f[i] = static_cast<double>(sum / norm);
    }
    return f;
}

std::vector<double> taylor_coeffs_finite_difference(const RadialFilter& filter, int max_order) {
    if (max_order < 0) throw ValidationError("order", "max order must be >= 0");
    // 17-point central stencils at steps h and h/2; the stencil is exact for
    // polynomials of degree 17, so the leading error is h^(18 - i).
    constexpr int half_width = 8;
    constexpr double h0 = 0.2;
    std::vector<double> f(max_order + 1);
    std::vector<std::vector<double>> estimates;  // [level][order]
    for (double h : {h0, h0 / 2}) {
        std::vector<double> points, values;
        for (int j = -half_width; j <= half_width; ++j) {
            points.push_back(j * h);
            values.push_back(filter.value(j * h));
        }
        const auto w = fd_weights(0.0, points, max_order);
        std::vector<double> d(max_order + 1, 0.0);
        for (int i = 0; i <= max_order; ++i)
            for (size_t s = 0; s < points.size(); ++s) d[i] += w[i][s] * values[s];
        estimates.push_back(d);
    }
    for (int i = 0; i <= max_order; ++i) {
        const double p = std::pow(2.0, 2 * half_width + 2 - i);
        const double derivative = (p * estimates[1][i] - estimates[0][i]) / (p - 1.0);
        f[i] = derivative / std::tgamma(i + 1.0);
    }
    return f;
}

std::vector<double> reciprocal_series(std::span<const double> f) {
    if (f.empty() || f[0] == 0.0) throw ValidationError("f", "series reciprocal needs f_0 != 0");
    std::vector<double> g(f.size());
    g[0] = 1.0 / f[0];
    for (size_t i = 1; i < f.size(); ++i) {
        double acc = 0.0;
        for (size_t p = 1; p <= i; ++p) acc += f[p] * g[i - p];
        g[i] = -acc / f[0];
    }
    return g;
}

// ---------------------------------------------------------------------------
// FilterModel

FilterModel::FilterModel() {
    f_ = taylor_coeffs_series(kMaxOrder);
    g_ = reciprocal_series(f_);
    fd_ = taylor_coeffs_finite_difference(filter_, kMaxOrder);
    for (int i = 0; i <= kMaxOrder; ++i) {
        const double diff = std::abs(f_[i] - fd_[i]);
        if (diff > cross_check_tolerance(i)) {
            std::ostringstream os;
            os.precision(17);
            os << "filter coefficient f_" << i << " disagrees between series (" << f_[i] << ") and finite-difference ("
               << fd_[i] << ") routes by " << diff;
            throw NumericError(os.str());
        }
    }
}

const FilterModel& FilterModel::shipped() {
    static const FilterModel model;
    return model;
}

double FilterModel::normalization() const noexcept {
    return 0.5 * std::numbers::pi * std::sqrt(0.5 * std::numbers::pi);
}

std::vector<double> FilterModel::taylor_coeffs(int max_order) const {
    if (max_order < 0 || max_order > kMaxOrder)
        throw ValidationError("order", "filter coefficients are available up to order " + std::to_string(kMaxOrder));
    return {f_.begin(), f_.begin() + max_order + 1};
}

std::vector<double> FilterModel::reciprocal_coeffs(int max_order) const {
    if (max_order < 0 || max_order > kMaxOrder)
        throw ValidationError("order", "filter coefficients are available up to order " + std::to_string(kMaxOrder));
    return {g_.begin(), g_.begin() + max_order + 1};
}

CoeffTable FilterModel::coeff_table(double w, int max_order) const {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    const auto f = taylor_coeffs(max_order);
    const auto g = reciprocal_coeffs(max_order);
    CoeffTable t{w, max_order, Eigen::MatrixXd::Zero(max_order + 1, max_order + 1),
                 Eigen::MatrixXd::Zero(max_order + 1, max_order + 1)};
    for (int i = 0; i <= max_order; ++i) {
        const double scale = std::pow(std::tgamma(i + 1.0), 2) / std::pow(w, 2 * i);
        t.c(i, i) = scale * f[i];
        t.cbar(i, i) = scale * g[i];
    }
    return t;
}

// ---------------------------------------------------------------------------
// Admissibility

bool AdmissibilityReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> AdmissibilityReport::violations() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (!c.passed) out.push_back(c.condition);
    return out;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Radius beyond which the profile is below exp(-45) on the ray.
double profile_radius(const RadialFilter& filter) {
    double rho = 0.5;
    while (rho < 200.0 && filter.log_value(rho * rho) > -45.0) rho *= 1.1;
    return rho;
}

}  // namespace

AdmissibilityReport check_admissibility(const RadialFilter& filter, const AdmissibilityOptions& opt) {
    AdmissibilityReport report;

    const double f0 = filter.value(0.0);
    report.checks.push_back({"unit value at the origin", std::abs(f0 - 1.0) <= 1e-12, "f(0) = " + fmt(f0)});

    std::vector<double> xs(opt.x_points), values(opt.x_points);
    for (int i = 0; i < opt.x_points; ++i) {
        xs[i] = opt.x_max * i / (opt.x_points - 1);
        values[i] = filter.log_value(xs[i]);
    }
    {
        // log_value is -inf or NaN where the profile is zero or negative
        auto bad = std::find_if(values.begin(), values.end(), [](double v) { return !(v > -1e300); });
        const bool ok = bad == values.end();
        report.checks.push_back({"no zeros", ok,
                                 ok ? "f > 0 on [0, " + fmt(opt.x_max) + "]"
                                    : "f <= 0 at x = " + fmt(xs[bad - values.begin()])});
    }
    {
        int first_rise = -1;
        for (int i = 1; i < opt.x_points && first_rise < 0; ++i)
            if (values[i] > values[i - 1] && values[i - 1] > -1e300) first_rise = i;
        report.checks.push_back({"monotone decreasing", first_rise < 0,
                                 first_rise < 0 ? "on " + std::to_string(opt.x_points) + " grid points"
                                                : "increases at x = " + fmt(xs[first_rise])});
    }

    for (double w : opt.widths) {
        // log of rho |Omega_w(rho) e^{rho^2/2}|^2; integrable iff it falls off
        const auto log_integrand = [&](double rho) {
            return std::log(rho) + 2.0 * filter.log_value(rho * rho / (w * w)) + rho * rho;
        };
        const double rho_max = 50.0 * (1.0 + w);
        double rho_end = -1.0;
        for (double rho = 0.25; rho <= rho_max; rho += 0.25) {
            if (log_integrand(rho) < -100.0 && log_integrand(1.5 * rho) < -100.0 && log_integrand(2.0 * rho) < -100.0) {
                rho_end = rho;
                break;
            }
        }
        const bool ok = rho_end > 0.0;
        report.checks.push_back({"square integrability of Omega_w exp(|xi|^2/2) at w = " + fmt(w), ok,
                                 ok ? "integrand below e^-100 beyond |xi| = " + fmt(rho_end)
                                    : "integrand does not decay up to |xi| = " + fmt(rho_max)});
    }

    {
        // 2-D Fourier transform of a radial function is a Hankel transform.
        const double rho_max = profile_radius(filter);
        const int nodes = 200 + int(4.0 * opt.k_max * rho_max);
        const GaussLegendre rule(nodes, 0.0, rho_max);
        std::vector<double> weights(nodes);
        for (int i = 0; i < nodes; ++i) weights[i] = rule.weights[i] * rule.nodes[i] * filter.value(rule.nodes[i] * rule.nodes[i]);
        const auto transform = [&](double k) {
            double sum = 0.0;
            for (int i = 0; i < nodes; ++i) sum += weights[i] * std::cyl_bessel_j(0.0, k * rule.nodes[i]);
            return 2.0 * std::numbers::pi * sum;
        };
        const double at_zero = transform(0.0);
        double worst = std::numeric_limits<double>::infinity(), worst_k = 0.0;
        for (int i = 0; i < opt.k_points; ++i) {
            const double k = opt.k_max * i / (opt.k_points - 1);
            const double v = transform(k) / at_zero;
            if (v < worst) worst = v, worst_k = k;
        }
        const bool ok = at_zero > 0.0 && worst >= -opt.fourier_tolerance;
        report.checks.push_back({"nonnegative Fourier transform", ok,
                                 "min normalized transform " + fmt(worst) + " at k = " + fmt(worst_k)});
    }
    return report;
}

AdmissibilityReport check_admissibility() { return check_admissibility(FilterModel::shipped().evaluator()); }

}  // namespace nqm
