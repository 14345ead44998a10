#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/moments.hpp"

using namespace nqm;

namespace {

constexpr double kPi = std::numbers::pi;
const double kS = std::sqrt(2.0 / kPi);

// SPATS filtered moments in closed form
double spats_m11(double nbar, double w) { return 2 * nbar + 1 + kS / (w * w); }
double spats_m22(double nbar, double w) {
    return 6 * nbar * nbar + 4 * nbar + 4 * kS * (2 * nbar + 1) / (w * w) + 7.0 / (4 * std::pow(w, 4));
}

Eigen::MatrixXcd random_table(std::mt19937_64& rng, int order) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(order + 1, order + 1);
    for (int n = 0; n <= order; ++n)
        for (int k = n; k <= order; ++k) {
            const double scale = std::pow(2.0, 0.5 * (n + k));
            m(n, k) = n == k ? cplx(std::abs(g(rng)) * scale, 0.0) : cplx(g(rng), g(rng)) * scale;
            m(k, n) = std::conj(m(n, k));
        }
    m(0, 0) = 1.0;
    return m;
}

double rel_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    double worst = 0.0;
    for (int n = 0; n < a.rows(); ++n)
        for (int k = 0; k < a.cols(); ++k)
            worst = std::max(worst, std::abs(a(n, k) - b(n, k)) / std::max(1.0, std::abs(b(n, k))));
    return worst;
}

}  // namespace

TEST_CASE("vacuum anchors of the conversion") {
    for (double w : {1.0, 2.5, 6.0}) {
        const MomentTable ncl = to_nonclassicality(normal_moments(StateSpec::vacuum(), 4), w);
        CHECK(ncl(1, 1).real() == doctest::Approx(kS / (w * w)).epsilon(1e-13));
        CHECK(ncl(2, 2).real() == doctest::Approx(7.0 / (4 * std::pow(w, 4))).epsilon(1e-13));
        CHECK(std::abs(ncl(0, 1)) < 1e-15);
        CHECK(std::abs(ncl(1, 2)) < 1e-15);
        // back to normal order: all vacuum moments vanish
        const MomentTable back = to_normal(ncl);
        for (int n = 0; n <= 4; ++n)
            for (int m = 0; m <= 4; ++m) CHECK(std::abs(back(n, m) - (n + m == 0 ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("inverse conversion carries the reciprocal coefficients") {
    // zero filtered moments: <a^dag a> = -sqrt(2/pi)/w^2, <a^dag^2 a^2> = (8/pi - 7/4)/w^4
    const double w = 1.7;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
    m(0, 0) = 1.0;
    const MomentTable normal = to_normal(MomentTable::nonclassicality(w, m));
    CHECK(normal(1, 1).real() == doctest::Approx(-kS / (w * w)).epsilon(1e-13));
    CHECK(normal(2, 2).real() == doctest::Approx((8.0 / kPi - 7.0 / 4.0) / std::pow(w, 4)).epsilon(1e-12));
}

TEST_CASE("SPATS filtered moments match their closed forms") {
    for (double nbar : {0.0, 0.1, 0.3, 0.6, 1.2})
        for (double w : {0.8, 1.5, 3.0, 7.0, 20.0}) {
            const MomentTable ncl = to_nonclassicality(normal_moments(StateSpec::spats(nbar), 2), w);
            INFO("nbar=", nbar, " w=", w);
            CHECK(std::abs(ncl(1, 1).real() / spats_m11(nbar, w) - 1.0) < 1e-10);
            CHECK(std::abs(ncl(2, 2).real() / spats_m22(nbar, w) - 1.0) < 1e-10);
            CHECK(std::abs(ncl(0, 2)) < 1e-14);
        }
}

TEST_CASE("roundtrip is the identity on random Hermitian tables") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 100; ++trial) {
        const double w = 0.8 + 4.0 * (trial % 10) / 9.0;
        const auto normal = MomentTable::normal(random_table(rng, 6));
        const auto ncl = to_nonclassicality(normal, w);
        const auto back = to_normal(ncl);
        CHECK(rel_diff(back.entries(), normal.entries()) <= 1e-10);
        // the filtered table is itself Hermitian-symmetric
        CHECK((ncl.entries() - ncl.entries().adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * ncl.entries().cwiseAbs().maxCoeff());
        const auto again = to_nonclassicality(to_normal(ncl), w);
        CHECK(rel_diff(again.entries(), ncl.entries()) <= 1e-10);
    }
}

TEST_CASE("conversion matrices are mutually inverse") {
    for (double w : {0.9, 2.0, 5.0})
        for (int order : {2, 5, 8}) {
            const CoeffTable t = FilterModel::shipped().coeff_table(w, order);
            const Eigen::MatrixXd fwd = conversion_matrix(t, ConversionDirection::ToNonclassicality);
            const Eigen::MatrixXd inv = conversion_matrix(t, ConversionDirection::ToNormal);
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(fwd.rows(), fwd.cols());
            const double scale = fwd.cwiseAbs().maxCoeff() * inv.cwiseAbs().maxCoeff();
            CHECK((fwd * inv - id).cwiseAbs().maxCoeff() <= 1e-13 * scale);
        }
}

TEST_CASE("conditioning grows as the width shrinks") {
    const auto narrow = conversion_conditioning(0.8, 6);
    const auto wide = conversion_conditioning(5.0, 6);
    CHECK(narrow.condition_number > wide.condition_number);
    CHECK(wide.condition_number >= 1.0);
    CHECK(narrow.max_cbar > wide.max_cbar);
}

TEST_CASE("filtered moments converge at rate 1/w^2") {
    const auto s = StateSpec::spats(0.5);
    const double g1 = convergence_gap(s, 2, 2, 10.0), g2 = convergence_gap(s, 2, 2, 20.0);
    CHECK(std::log(g2 / g1) / std::log(2.0) == doctest::Approx(-2.0).epsilon(0.02));
    CHECK(convergence_gap(s, 0, 0, 3.0) == 0.0);
}

TEST_CASE("expectation values") {
    const auto s = StateSpec::spats(0.3);
    const auto normal = normal_moments(s, 2);
    const auto ncl = to_nonclassicality(normal, 2.0);
    const ObservablePoly n = ObservablePoly::number();
    CHECK(expectation(n, normal).real() == doctest::Approx(1.6));
    // nonclassicality tables are converted first, so the result does not depend on w
    CHECK(expectation(n, ncl).real() == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(ObservablePoly::number(0.5).is_hermitian());
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(3, 3);
    b(2, 2) = 1.0;
    b(1, 1) = 1.0;
    // <n^2> = <a^dag^2 a^2> + <a^dag a>
    CHECK(expectation(ObservablePoly(b), normal).real() == doctest::Approx(6 * 0.09 + 1.2 + 1.6));
    b(0, 1) = 1.0;
    CHECK_FALSE(ObservablePoly(b).is_hermitian());
    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(4, 4);
    big(3, 3) = 1.0;
    CHECK_THROWS_AS(expectation(ObservablePoly(big), normal), ValidationError);
}

TEST_CASE("table validation") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(3, 3);
    CHECK_NOTHROW(MomentTable::normal(m));
    m(0, 0) = 1.1;
    CHECK_THROWS_AS(MomentTable::normal(m), ValidationError);
    m(0, 0) = 1.0;
    m(0, 1) = cplx(0.2, 0.1);
    CHECK_THROWS_AS(MomentTable::normal(m), ValidationError);
    m(1, 0) = cplx(0.2, -0.1);
    CHECK_NOTHROW(MomentTable::normal(m));
    m(1, 1) = cplx(1.0, 0.3);
    CHECK_THROWS_AS(MomentTable::normal(m), ValidationError);
    CHECK_THROWS_AS(MomentTable::nonclassicality(0.0, Eigen::MatrixXcd::Identity(2, 2)), ValidationError);
    const auto t = MomentTable::normal(Eigen::MatrixXcd::Identity(2, 2));
    CHECK_THROWS_AS(t(2, 0), ValidationError);
    CHECK_THROWS_AS(to_nonclassicality(normal_moments(StateSpec::vacuum(), FilterModel::kMaxOrder + 1), 1.0),
                    ValidationError);
}

TEST_CASE("table JSON roundtrip and conjugate filling") {
    const auto ncl = to_nonclassicality(normal_moments(StateSpec::coherent({0.4, 0.9}), 3), 2.2);
    const auto j = to_json(ncl);
    const auto back = moment_table_from_json(j);
    CHECK(back.kind() == MomentKind::Nonclassicality);
    CHECK(*back.width() == 2.2);
    CHECK((back.entries() - ncl.entries()).cwiseAbs().maxCoeff() == 0.0);

    const auto upper = nlohmann::json::parse(R"({"kind":"normal","K":1,"entries":[[0,0,1,0],[0,1,0.5,0.25],[1,1,0.3125,0]]})");
    const auto t = moment_table_from_json(upper);
    CHECK(t(1, 0) == cplx(0.5, -0.25));
    const auto missing = nlohmann::json::parse(R"({"kind":"normal","K":1,"entries":[[0,0,1,0],[1,1,1,0]]})");
    CHECK_THROWS_AS(moment_table_from_json(missing), ValidationError);
    const auto no_w = nlohmann::json::parse(R"({"kind":"nonclassicality","K":0,"entries":[[0,0,1,0]]})");
    CHECK_THROWS_AS(moment_table_from_json(no_w), ValidationError);
    const auto bad_kind = nlohmann::json::parse(R"({"kind":"wigner","K":0,"entries":[[0,0,1,0]]})");
    CHECK_THROWS_AS(moment_table_from_json(bad_kind), ValidationError);

    const auto obs = observable_from_json(nlohmann::json::parse(R"({"terms":[[1,1,1,0],[0,0,0.5,0]]})"));
    CHECK(obs.order() == 1);
    CHECK(observable_from_json(to_json(obs)).coefficients() == obs.coefficients());
}
