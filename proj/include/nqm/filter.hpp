#pragma once

// Nonclassicality filter Omega and its coefficient ladders.
//
// Filters here are rotationally symmetric, Omega(u, u*) = f(|u|^2), so
//   C'_{i,i} = (i!)^2 f_i,  C_{i,i}(w) = C'_{i,i} / w^{2i},
// and every mixed coefficient C_{i,j}, i != j, vanishes. The reciprocal
// coefficients g_i are those of 1/f and drive the inverse moment map.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nqm {

/// Radial filter profile f(x), x = |u|^2.
class RadialFilter {
public:
    virtual ~RadialFilter() = default;
    virtual double value(double x) const = 0;
    virtual double log_value(double x) const;
    virtual std::string name() const = 0;
};

/// Normalized autocorrelation of exp(-|beta|^4):
///   Omega(u) = (1/N) Int d^2 beta exp(-|beta|^4) exp(-|u + beta|^4),
///   N = Int d^2 beta exp(-2 |beta|^4).
/// Centering the integral at -u/2 makes the angular part exp(-2 x r^2 cos^2)
/// which integrates to a Bessel I0, leaving
///   f(x) = sqrt(8/pi) exp(-x^2/8) Int_0^inf exp(-2t^2 - x t) e^{-xt} I0(x t) dt.
/// The same integral continues f to x < 0, where it is used by the
/// finite-difference coefficient route.
class AutocorrelationFilter final : public RadialFilter {
public:
    double value(double x) const override;
    double log_value(double x) const override;
    std::string name() const override { return "autocorrelation of exp(-|beta|^4)"; }
};

/// Omega(u) of the shipped filter.
double omega(std::complex<double> u);
/// Omega(xi / w); throws ValidationError for w <= 0.
double omega_w(std::complex<double> xi, double w);

/// Radial Taylor coefficients f_0..f_K from the term-by-term expansion of the
/// autocorrelation integral (Gamma-function moments of exp(-2 r^4)).
std::vector<double> taylor_coeffs_series(int max_order);

/// Radial Taylor coefficients from central finite differences of f on a
/// symmetric x-stencil, Richardson-extrapolated in the step.
std::vector<double> taylor_coeffs_finite_difference(const RadialFilter& filter, int max_order);

/// Formal power-series reciprocal: sum_p f_p g_{i-p} = delta_{i,0}.
std::vector<double> reciprocal_series(std::span<const double> f);

/// Width-scaled coefficients C_{i,j}(w) and Cbar_{i,j}(w), 0 <= i,j <= order.
struct CoeffTable {
    double w;
    int order;
    Eigen::MatrixXd c;
    Eigen::MatrixXd cbar;
};

/// Shipped filter with its coefficients computed once and cross-validated.
class FilterModel {
public:
    static constexpr int kMaxOrder = 8;

    /// Thread-safe lazy initialization. Throws NumericError if the two
    /// coefficient routes disagree beyond cross_check_tolerance().
    static const FilterModel& shipped();

    const RadialFilter& evaluator() const noexcept { return filter_; }
    /// N = Int d^2 beta exp(-2 |beta|^4) = (pi/2) sqrt(pi/2).
    double normalization() const noexcept;

    std::vector<double> taylor_coeffs(int max_order) const;
    std::vector<double> reciprocal_coeffs(int max_order) const;
    /// Coefficients from the finite-difference route (kept for reporting).
    std::span<const double> finite_difference_coeffs() const noexcept { return fd_; }
    static double cross_check_tolerance(int order) noexcept { return order <= 6 ? 1e-8 : 1e-6; }

    CoeffTable coeff_table(double w, int max_order) const;

private:
    FilterModel();
    AutocorrelationFilter filter_;
    std::vector<double> f_;
    std::vector<double> g_;
    std::vector<double> fd_;
};

struct AdmissibilityCheck {
    std::string condition;
    bool passed;
    std::string detail;
};

struct AdmissibilityReport {
    std::vector<AdmissibilityCheck> checks;

    bool ok() const;
    std::vector<std::string> violations() const;
};

struct AdmissibilityOptions {
    std::vector<double> widths{1.0, 2.0, 3.0};
    double x_max = 36.0;
    int x_points = 721;
    double k_max = 12.0;
    int k_points = 241;
    double fourier_tolerance = 1e-8;
};

/// Numerically checks the filter conditions on declared grids: unit value at
/// the origin, no zeros, monotone decay, square integrability of
/// Omega_w(xi) exp(|xi|^2/2) at each width, and a nonnegative 2-D Fourier
/// transform.
AdmissibilityReport check_admissibility(const RadialFilter& filter, const AdmissibilityOptions& options = {});
AdmissibilityReport check_admissibility();

}  // namespace nqm
