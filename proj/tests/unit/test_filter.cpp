#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/quadrature.hpp"

using namespace nqm;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// Omega(u) by brute-force Cartesian quadrature of the defining autocorrelation,
// no radial reduction.
double omega_cartesian(cplx u) {
    const int panels = 16, per_panel = 24;
    const double lo = -4.0, hi = 4.0, width = (hi - lo) / panels;
    std::vector<double> nodes, weights;
    for (int p = 0; p < panels; ++p) {
        const GaussLegendre rule(per_panel, lo + p * width, lo + (p + 1) * width);
        nodes.insert(nodes.end(), rule.nodes.begin(), rule.nodes.end());
        weights.insert(weights.end(), rule.weights.begin(), rule.weights.end());
    }
    // centre the product at -u/2 so both factors are symmetric in the window
    const cplx shift = -0.5 * u;
    double num = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const cplx b = cplx(nodes[i], nodes[j]);
            const double wt = weights[i] * weights[j];
            const double r2 = std::norm(b + shift), s2 = std::norm(b - shift);
            num += wt * std::exp(-r2 * r2 - s2 * s2);
            const double t2 = std::norm(b);
            norm += wt * std::exp(-2.0 * t2 * t2);
        }
    return num / norm;
}

struct ExpFilter : RadialFilter {
    double value(double x) const override { return std::exp(-x / 4.0); }
    double log_value(double x) const override { return -x / 4.0; }
    std::string name() const override { return "exp(-x/4)"; }
};

struct SignChangingFilter : RadialFilter {
    double value(double x) const override { return (1.0 - x) * std::exp(-x * x); }
    std::string name() const override { return "(1-x) exp(-x^2)"; }
};

bool has_violation(const AdmissibilityReport& r, const std::string& prefix) {
    for (const auto& v : r.violations())
        if (v.rfind(prefix, 0) == 0) return true;
    return false;
}

}  // namespace

TEST_CASE("filter value agrees with a Cartesian brute-force integral") {
    CHECK(omega(0.0) == doctest::Approx(1.0).epsilon(1e-13));
    for (cplx u : {cplx(1.0, 0.0), cplx(0.3, 0.4), cplx(-0.9, 1.1), cplx(0.0, 1.7)}) {
        INFO("u = ", u);
        CHECK(std::abs(omega(u) - omega_cartesian(u)) < 1e-8);
    }
    CHECK(omega(1.0) == doctest::Approx(0.47577819080768289).epsilon(1e-13));
}

TEST_CASE("filter is radial and width-scaled") {
    CHECK(omega({0.6, 0.8}) == doctest::Approx(omega({1.0, 0.0})).epsilon(1e-12));
    CHECK(omega_w({2.0, 1.0}, 2.0) == doctest::Approx(omega({1.0, 0.5})).epsilon(1e-14));
    CHECK_THROWS_AS(omega_w(1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(omega_w(1.0, -1.0), ValidationError);
}

TEST_CASE("log_value stays finite far in the tail") {
    const AutocorrelationFilter f;
    for (double x : {10.0, 50.0, 150.0, 400.0}) {
        const double lv = f.log_value(x);
        CHECK(std::isfinite(lv));
        CHECK(lv < -x * x / 8.0 + 5.0);
    }
    CHECK(f.log_value(2.0) == doctest::Approx(std::log(f.value(2.0))).epsilon(1e-12));
}

TEST_CASE("first Taylor coefficients match their closed forms on both routes") {
    const auto series = taylor_coeffs_series(8);
    const auto fd = taylor_coeffs_finite_difference(AutocorrelationFilter{}, 8);
    CHECK(std::abs(series[1] + std::sqrt(2.0 / kPi)) < 1e-12);
    CHECK(std::abs(series[2] - 7.0 / 16.0) < 1e-12);
    CHECK(std::abs(fd[1] + std::sqrt(2.0 / kPi)) < 1e-8);
    CHECK(std::abs(fd[2] - 7.0 / 16.0) < 1e-8);
    for (int i = 0; i <= 8; ++i) {
        INFO("order ", i);
        CHECK(std::abs(series[i] - fd[i]) <= FilterModel::cross_check_tolerance(i));
    }
    // alternating signs of a completely monotone-like profile
    for (int i = 0; i <= 8; ++i) CHECK((i % 2 == 0 ? series[i] > 0 : series[i] < 0));
}

TEST_CASE("reciprocal series") {
    const auto& model = FilterModel::shipped();
    const auto f = model.taylor_coeffs(8);
    const auto g = model.reciprocal_coeffs(8);
    CHECK(g[1] == doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-13));
    CHECK(std::abs(g[2] - (2.0 / kPi - 7.0 / 16.0)) < 1e-13);
    for (int k = 0; k <= 8; ++k) {
        double conv = 0.0;
        for (int i = 0; i <= k; ++i) conv += f[i] * g[k - i];
        CHECK(std::abs(conv - (k == 0 ? 1.0 : 0.0)) < 1e-13);
    }
    CHECK_THROWS_AS(reciprocal_series(std::vector<double>{0.0, 1.0}), ValidationError);
    // 1/(1 - x) = sum x^k
    const auto geo = reciprocal_series(std::vector<double>{1.0, -1.0, 0.0, 0.0});
    for (double v : geo) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("width-scaled coefficient tables") {
    const auto& model = FilterModel::shipped();
    const CoeffTable t1 = model.coeff_table(1.0, 4);
    CHECK(t1.cbar(2, 2) == doctest::Approx(8.0 / kPi - 7.0 / 4.0).epsilon(1e-12));
    CHECK(std::abs(t1.cbar(2, 2) - (8.0 / kPi - 7.0 / 4.0)) < 1e-10);
    CHECK(t1.c(1, 1) == doctest::Approx(-std::sqrt(2.0 / kPi)));
    CHECK(t1.c(2, 2) == doctest::Approx(7.0 / 4.0));
    for (double w : {0.5, 2.0, 7.0}) {
        const CoeffTable t = model.coeff_table(w, 4);
        for (int i = 0; i <= 4; ++i) {
            CHECK(t.c(i, i) == doctest::Approx(t1.c(i, i) / std::pow(w, 2 * i)).epsilon(1e-13));
            CHECK(t.cbar(i, i) == doctest::Approx(t1.cbar(i, i) / std::pow(w, 2 * i)).epsilon(1e-13));
            for (int j = 0; j <= 4; ++j)
                if (i != j) {
                    CHECK(t.c(i, j) == 0.0);
                    CHECK(t.cbar(i, j) == 0.0);
                }
        }
    }
    CHECK_THROWS_AS(model.coeff_table(1.0, FilterModel::kMaxOrder + 1), ValidationError);
    CHECK_THROWS_AS(model.coeff_table(0.0, 2), ValidationError);
    CHECK(model.normalization() == doctest::Approx(0.5 * kPi * std::sqrt(0.5 * kPi)));
}

TEST_CASE("shipped filter is admissible") {
    const auto report = check_admissibility();
    for (const auto& c : report.checks) {
        INFO(c.condition, ": ", c.detail);
        CHECK(c.passed);
    }
    CHECK(report.ok());
}

TEST_CASE("admissibility rejects a filter that decays too slowly") {
    const auto report = check_admissibility(ExpFilter{});
    CHECK_FALSE(report.ok());
    CHECK(has_violation(report, "square integrability"));
    CHECK_FALSE(has_violation(report, "no zeros"));
}

TEST_CASE("admissibility rejects a filter with a zero") {
    const auto report = check_admissibility(SignChangingFilter{});
    CHECK_FALSE(report.ok());
    CHECK(has_violation(report, "no zeros"));
}
