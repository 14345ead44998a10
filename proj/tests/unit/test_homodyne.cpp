#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nqm/criteria.hpp"
#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/homodyne.hpp"
#include "nqm/quadrature.hpp"

using namespace nqm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const double kS = std::sqrt(2.0 / kPi);

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("nqm_test_" + name); }

}  // namespace

TEST_CASE("sampling is deterministic in the seed") {
    const auto s = StateSpec::spats(0.3);
    const auto a = sample(s, 6, 500, 42), b = sample(s, 6, 500, 42), c = sample(s, 6, 500, 43);
    REQUIRE(a.size() == 3000);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same = same && a.samples()[i].x == b.samples()[i].x && a.samples()[i].theta == b.samples()[i].theta;
        differ = differ || a.samples()[i].x != c.samples()[i].x;
    }
    CHECK(same);
    CHECK(differ);
    for (int j = 0; j < 6; ++j) {
        CHECK(a.phase(j) == doctest::Approx(kPi * j / 6));
        CHECK(a.values(j).size() == 500);
        CHECK(a.samples()[j * 500].theta == a.phase(j));
    }
}

TEST_CASE("sample means and variances follow the state") {
    const int n = 40000;
    for (const auto& s : {StateSpec::coherent({0.8, -0.5}), StateSpec::squeezed_vacuum(0.4, 0.3), StateSpec::spats(0.3),
                          StateSpec::fock(2)}) {
        const auto ds = sample(s, 4, n, 7);
        for (int j = 0; j < 4; ++j) {
            const auto x = ds.values(j);
            double m = 0, m2 = 0;
            for (double v : x) m += v;
            m /= n;
            for (double v : x) m2 += (v - m) * (v - m);
            m2 /= n - 1;
            const double var = quadrature_variance(s, ds.phase(j));
            INFO(s.label(), " phase ", j);
            CHECK(std::abs(m - quadrature_mean(s, ds.phase(j))) < 5.0 * std::sqrt(var / n));
            // variance of the sample variance is at most a few var^2 / n here
            CHECK(std::abs(m2 - var) < 5.0 * var * std::sqrt(3.0 / n));
        }
    }
}

TEST_CASE("non-Gaussian samples match the quadrature distribution") {
    const auto s = StateSpec::fock(1);
    const int n = 20000;
    const auto ds = sample(s, 2, n, 11);
    auto x = ds.values(1);
    std::sort(x.begin(), x.end());
    const QuadratureDensity pdf(s);
    // Kolmogorov distance against the integrated density
    double worst = 0.0, cdf = 0.0, prev = -pdf.support_radius();
    for (int i = 0; i < n; i += 50) {
        const GaussLegendre rule(24, prev, x[i]);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) cdf += rule.weights[k] * pdf(ds.phase(1), rule.nodes[k]);
        prev = x[i];
        worst = std::max({worst, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
    }
    CHECK(worst < 1.63 / std::sqrt(double(n)));  // 1% level
}

TEST_CASE("empirical characteristic function") {
    const auto s = StateSpec::thermal(0.4);
    const auto ds = sample(s, 8, 50000, 5);
    for (cplx xi : {cplx(0.0, 0.5), cplx(0.4, 0.4), cplx(-0.7, 0.2)}) {
        const auto e = empirical_char(ds, xi);
        INFO("xi=", xi);
        CHECK(e.std_error > 0.0);
        // nearest phase is exact for this phase-invariant state
        CHECK(std::abs(e.value - char_function(s, xi)) < 4.0 * e.std_error);
    }
}

TEST_CASE("vacuum M11 estimate and its error bars") {
    const auto ds = sample(StateSpec::vacuum(), 8, 12500, 2024);
    const double truth = kS / 4.0;
    const auto prop = estimate_ncl_moments(ds, 2.0, 1);
    CHECK(prop.method == ErrorMethod::Propagated);
    CHECK(std::abs(prop.table(1, 1).real() - truth) < 4.0 * prop.std_error(1, 1));
    MomentEstimateOptions opt;
    opt.bootstrap = 200;
    opt.seed = 9;
    const auto boot = estimate_ncl_moments(ds, 2.0, 1, opt);
    CHECK(boot.method == ErrorMethod::Bootstrap);
    CHECK(boot.resamples == 200);
    CHECK(boot.table(1, 1) == prop.table(1, 1));
    CHECK(boot.std_error(1, 1) == doctest::Approx(prop.std_error(1, 1)).epsilon(0.25));
    // first moments vanish and are flagged as noise-dominated most of the time
    CHECK(std::abs(prop.table(0, 1)) < 4.0 * prop.std_error(0, 1));
}

TEST_CASE("second-order estimates and Q_Omega") {
    const cplx alpha{0.9, 0.3};
    const double w = 1.5, a2 = std::norm(alpha);
    const auto ds = sample(StateSpec::coherent(alpha), 6, 40000, 77);
    const auto est = estimate_ncl_moments(ds, w, 2);
    const auto exact = to_nonclassicality(normal_moments(StateSpec::coherent(alpha), 2), w);
    for (int n = 0; n <= 2; ++n)
        for (int m = 0; m <= 2; ++m) {
            INFO("n=", n, " m=", m);
            CHECK(std::abs(est.table(n, m) - exact(n, m)) < 5.0 * est.std_error(n, m) + 1e-12);
        }
    const auto q = estimate_mandel_q_omega(ds, w, 100, 3);
    const double m11 = a2 + kS / (w * w);
    const double m22 = a2 * a2 + 4.0 * kS * a2 / (w * w) + 7.0 / (4.0 * std::pow(w, 4));
    CHECK(std::abs(q.value.real() - mandel_q_omega(m11, m22)) < 4.0 * q.std_error);
    CHECK(q.method == ErrorMethod::Bootstrap);
}

TEST_CASE("estimation input checks") {
    const auto ds = sample(StateSpec::vacuum(), 4, 200, 1);
    try {
        (void)estimate_ncl_moments(ds, 1.0, 2);
        FAIL("expected a phase-count error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "n_phases");
    }
    CHECK_NOTHROW(estimate_ncl_moments(ds, 1.0, 1));
    CHECK_THROWS_AS(estimate_ncl_moments(ds, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(estimate_ncl_moments(ds, 1.0, 3), ValidationError);
    // noise amplification exp(b^2/2) Omega_w(b) grows too fast at large widths
    try {
        (void)estimate_nqp(ds, 3.0, 3.0, 21, 0);
        FAIL("expected an amplification error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "w");
    }
}

TEST_CASE("NQP estimate of vacuum data") {
    const auto ds = sample(StateSpec::vacuum(), 12, 8334, 31);
    const auto est = estimate_nqp(ds, 1.5, 3.0, 31, 100, 8);
    CHECK(est.amplification > 1.0);
    CHECK(est.amplification < kMaxAmplification);
    CHECK(std::abs(est.grid.normalization() - 1.0) < 4.0 * est.normalization_error + 1e-3);
    const NqpReconstructor exact(StateSpec::vacuum(), 1.5, 3.0);
    int below = 0, total = 0;
    for (int i = 0; i < est.grid.resolution; ++i)
        for (int j = 0; j < est.grid.resolution; ++j) {
            const double z = (est.grid.values(i, j) - exact.value(est.grid.alpha(i, j))) / est.std_error(i, j);
            below += z < -3.0;
            ++total;
        }
    CHECK(double(below) / total <= 0.01);
    const int c = est.grid.resolution / 2;
    CHECK(std::abs(est.grid.values(c, c) - exact.value(0.0)) < 4.0 * est.std_error(c, c));
}

TEST_CASE("vacuum NQP estimate at w = 2 is nonnegative within its error bars") {
    // 10^5 samples; at this width the reconstruction is dominated by noise
    // (amplification ~ 3e2), so the grid is a field of correlated z-scores.
    const auto ds = sample(StateSpec::vacuum(), 10, 10000, 2718);
    const auto est = estimate_nqp(ds, 2.0, 3.0, 21, 200, 5);
    const int c = est.grid.resolution / 2;
    CHECK(est.grid.values(c, c) >= -3.0 * est.std_error(c, c));
    int below = 0, total = 0;
    double worst = 1e300;
    for (int i = 0; i < est.grid.resolution; ++i)
        for (int j = 0; j < est.grid.resolution; ++j) {
            const double z = est.grid.values(i, j) / est.std_error(i, j);
            below += z < -3.0;
            worst = std::min(worst, z);
            ++total;
        }
    INFO("min z ", worst, ", points below -3 sigma: ", below, "/", total);
    // pointwise 3 sigma holds up to the Gaussian tail rate; the family-wise
    // bound over all points uses a Bonferroni-corrected threshold
    CHECK(double(below) / total <= 0.01);
    CHECK(worst >= -4.5);
    CHECK(std::abs(est.grid.normalization() - 1.0) <= 3.0 * est.normalization_error);
}

TEST_CASE("empirical characteristic function of vacuum data is 1") {
    const auto ds = sample(StateSpec::vacuum(), 6, 20000, 12);
    for (cplx xi : {cplx(0.0, 0.3), cplx(0.8, -0.1), cplx(-0.5, -1.0)}) {
        const auto e = empirical_char(ds, xi);
        CHECK(std::abs(e.value - 1.0) <= 3.0 * e.std_error);
    }
}

TEST_CASE("dataset file roundtrip") {
    const auto ds = sample(StateSpec::squeezed_vacuum(0.6, 0.2), 3, 100, 99);
    const auto path = temp_file("roundtrip.bin");
    write_dataset(path, ds);
    const auto back = read_dataset(path);
    CHECK(back.seed() == 99);
    CHECK(back.n_phases() == 3);
    CHECK(back.n_per_phase() == 100);
    CHECK(to_json(back.state()) == to_json(ds.state()));
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples()[i].x == ds.samples()[i].x);
        CHECK(back.samples()[i].theta == ds.samples()[i].theta);
    }
    {
        std::ifstream is(path, std::ios::binary);
        char magic[7] = {};
        is.read(magic, 6);
        CHECK(std::string(magic) == "NQMHD1");
    }
    // truncation and bad magic
    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_AS(read_dataset(path), IoError);
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOTADATASET";
    }
    CHECK_THROWS_AS(read_dataset(path), IoError);
    fs::remove(path);
    CHECK_THROWS_AS(read_dataset(path), IoError);
}

TEST_CASE("dataset layout validation") {
    std::vector<QuadratureSample> samples{{0.0, 0.1}, {0.0, 0.2}, {kPi / 2, 0.3}, {kPi / 2, 0.4}};
    CHECK_NOTHROW(QuadratureDataset(StateSpec::vacuum(), 0, 2, 2, samples));
    CHECK_THROWS_AS(QuadratureDataset(StateSpec::vacuum(), 0, 2, 3, samples), ValidationError);
    samples[2].theta = 1.0;
    CHECK_THROWS_AS(QuadratureDataset(StateSpec::vacuum(), 0, 2, 2, samples), ValidationError);
}
