#include "nqm/criteria.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "nqm/error.hpp"
#include "nqm/filter.hpp"

namespace nqm {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);

void require_width(double w) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
}

void require_nbar(double nbar) {
    if (!(nbar >= 0.0)) throw ValidationError("nbar", "nbar must be >= 0");
}

std::string format(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

nlohmann::json to_json(const CriterionResult& r) {
    nlohmann::json j{{"name", r.name},
                     {"value", r.value},
                     {"threshold", r.threshold},
                     {"nonclassical", r.nonclassical},
                     {"w", r.w ? nlohmann::json(*r.w) : nlohmann::json(nullptr)}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

double mandel_q_omega(double m11, double m22) {
    if (!(m11 > 0.0)) throw ValidationError("M11", "Mandel Q needs M11 > 0");
    return (m22 - m11 * m11) / m11;
}

double mandel_q_spats(double nbar, double w) {
    require_nbar(nbar);
    require_width(w);
    const double w2 = w * w;
    const double s = std::sqrt(2.0 * kPi);
    const double num = 7.0 * kPi - 8.0 + 8.0 * (2.0 * nbar + 1.0) * s * w2 + kPi * (8.0 * nbar * nbar - 4.0) * w2 * w2;
    const double den = 4.0 * w2 * (s + (2.0 * nbar + 1.0) * kPi * w2);
    return num / den;
}

double mandel_q_limit(double nbar) {
    require_nbar(nbar);
    return (2.0 * nbar * nbar - 1.0) / (2.0 * nbar + 1.0);
}

std::optional<double> min_width_negative_q(double nbar) {
    require_nbar(nbar);
    // numerator of Q_Omega as a quadratic a y^2 + b y + c in y = w^2
    const double a = kPi * (8.0 * nbar * nbar - 4.0);
    if (a >= 0.0) return std::nullopt;
    const double b = 8.0 * (2.0 * nbar + 1.0) * std::sqrt(2.0 * kPi);
    const double c = 7.0 * kPi - 8.0;
    const double y = (b + std::sqrt(b * b - 4.0 * a * c)) / (-2.0 * a);
    return std::sqrt(y);
}

double filtered_quadrature_variance(double variance, double w) {
    if (!(variance >= 0.0)) throw ValidationError("V", "variance must be >= 0");
    require_width(w);
    return variance + 2.0 * kSqrt2OverPi / (w * w);
}

std::optional<double> min_width_squeezing(double variance) {
    if (!(variance >= 0.0)) throw ValidationError("V", "variance must be >= 0");
    if (variance >= 1.0) return std::nullopt;
    return std::sqrt(2.0 * kSqrt2OverPi / (1.0 - variance));
}

CriterionResult mandel_q_criterion(const MomentTable& table) {
    if (table.order() < 2) throw ValidationError("K", "Mandel Q needs moments up to order 2");
    const double q = mandel_q_omega(table(1, 1).real(), table(2, 2).real());
    const bool filtered = table.kind() == MomentKind::Nonclassicality;
    return {filtered ? "mandel_q_omega" : "mandel_q", q, 0.0, q < 0.0, table.width(), ""};
}

CriterionResult squeezing_from_ncl_moments(const MomentTable& ncl) {
    if (ncl.kind() != MomentKind::Nonclassicality || !ncl.width())
        throw ValidationError("kind", "squeezing test needs a nonclassicality table");
    if (ncl.order() < 2) throw ValidationError("K", "squeezing test needs moments up to order 2");
    const double w = *ncl.width();
    const cplx mean = ncl(0, 1);
    const cplx pair = ncl(0, 2) - mean * mean;
    // Var(x_theta) = 1 + 2 (M11 - |M01|^2) + 2 Re(pair e^{-2i theta}), minimal at 2 theta = arg(pair) + pi
    const double value = 1.0 + 2.0 * (ncl(1, 1).real() - std::norm(mean)) - 2.0 * std::abs(pair);
    const double theta = std::remainder(0.5 * (std::arg(pair) + kPi), kPi);
    const double c11 = FilterModel::shipped().coeff_table(w, 1).c(1, 1);
    const double threshold = 1.0 + 2.0 * (-c11);
    return {"squeezing", value, threshold, value < threshold, w, "theta = " + format(theta)};
}

CriterionResult moment_matrix_test(const MomentTable& table, int size) {
    if (size < 1 || size > 3) throw ValidationError("size", "moment matrix size must be 1, 2 or 3");
    if (table.order() < 2 * (size - 1))
        throw ValidationError("K", "moment matrix of size " + std::to_string(size) + " needs order " +
                                       std::to_string(2 * (size - 1)));
    Eigen::MatrixXd d(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) d(i, j) = table(i + j, i + j).real();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const std::string name = table.kind() == MomentKind::Normal ? "moment_matrix" : "moment_matrix_omega";
    return {name, min_eig, 0.0, min_eig < 0.0, table.width(), "size = " + std::to_string(size)};
}

std::vector<CriterionResult> evaluate_criteria(const MomentTable& table) {
    std::vector<CriterionResult> out;
    if (table.order() >= 2) {
        if (table(1, 1).real() > 0.0) out.push_back(mandel_q_criterion(table));
        if (table.kind() == MomentKind::Nonclassicality) out.push_back(squeezing_from_ncl_moments(table));
    }
    for (int size = 2; size <= 3 && 2 * (size - 1) <= table.order(); ++size) out.push_back(moment_matrix_test(table, size));
    return out;
}

std::vector<CriterionResult> evaluate_criteria(const StateSpec& state, double w) {
    require_width(w);
    const auto normal = normal_moments(state, 4);
    const auto ncl = to_nonclassicality(normal, w);
    std::vector<CriterionResult> out = evaluate_criteria(ncl);
    for (auto& r : evaluate_criteria(normal))
        if (r.name != "squeezing") out.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------------------
// Figures

FigureTable figure1(std::vector<double> nbars) {
    FigureTable t;
    t.columns.push_back("w");
    for (double n : nbars) {
        require_nbar(n);
        std::ostringstream os;
        const bool tenths = std::abs(10.0 * n - std::round(10.0 * n)) < 1e-12;
        os << "Q_" << std::fixed << std::setprecision(tenths ? 1 : 4) << n;
        t.columns.push_back(os.str());
    }
    for (int k = 0; k <= 180; ++k) {
        const double w = 1.0 + 0.05 * k;
        std::vector<double> row{w};
        for (double n : nbars) row.push_back(mandel_q_spats(n, w));
        t.rows.push_back(std::move(row));
    }
    t.metadata = {{"figure", 1},
                  {"quantity", "Q_Omega of the single-photon-added thermal state against the filter width"},
                  {"nbar", nbars},
                  {"w_range", {1.0, 10.0}},
                  {"w_step", 0.05},
                  {"note", "the nbar curve set and the w range are defaults chosen here"}};
    return t;
}

FigureTable figure2() {
    FigureTable t;
    t.columns = {"nbar", "w0"};
    for (int k = 0; k <= 70; ++k) {
        const double n = 0.01 * k;
        t.rows.push_back({n, *min_width_negative_q(n)});
    }
    t.metadata = {{"figure", 2},
                  {"quantity", "minimal width for negative Q_Omega of the single-photon-added thermal state"},
                  {"nbar_range", {0.0, 0.7}},
                  {"nbar_step", 0.01}};
    return t;
}

FigureTable figure3() {
    FigureTable t;
    t.columns = {"V", "w_min"};
    for (int k = 0; k <= 99; ++k) {
        const double v = 0.01 * k;
        t.rows.push_back({v, *min_width_squeezing(v)});
    }
    t.metadata = {{"figure", 3},
                  {"quantity", "minimal width for filtered squeezing against the quadrature variance"},
                  {"V_range", {0.0, 0.99}},
                  {"V_step", 0.01},
                  {"convention", "vacuum quadrature variance 1"}};
    return t;
}

FigureTable figure(int number) {
    switch (number) {
        case 1: return figure1();
        case 2: return figure2();
        case 3: return figure3();
        default: throw ValidationError("figure", "figure must be 1, 2 or 3");
    }
}

}  // namespace nqm
