#include "nqm/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nqm/error.hpp"

namespace nqm {

namespace {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

constexpr double kTableTolerance = 1e-9;

void check_order(int order) {
    if (order < 0) throw ValidationError("K", "moment order must be >= 0");
    if (order > FilterModel::kMaxOrder)
        throw ValidationError("K", "conversions are available up to order " +
                                       std::to_string(FilterModel::kMaxOrder) + ", got " + std::to_string(order));
}

Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& m) {
    const int k = static_cast<int>(m.rows());
    Eigen::VectorXcd v(k * k);
    for (int n = 0; n < k; ++n)
        for (int j = 0; j < k; ++j) v(n * k + j) = m(n, j);
    return v;
}

Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& v, int k) {
    Eigen::MatrixXcd m(k, k);
    for (int n = 0; n < k; ++n)
        for (int j = 0; j < k; ++j) m(n, j) = v(n * k + j);
    return m;
}

// Compensated dot product (TwoSum / FMA TwoProduct): the conversions add
// terms of order Cbar_kk ~ 10^3 that cancel down to O(1) moments.
double dot2(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::VectorXd& b) {
    double sum = 0.0, carry = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double p = a(i) * b(i);
        const double perr = std::fma(a(i), b(i), -p);
        const double t = sum + p;
        const double z = t - sum;
        carry += (sum - (t - z)) + (p - z) + perr;
        sum = t;
    }
    return sum + carry;
}

Eigen::MatrixXcd apply_map(const Eigen::MatrixXd& map, const Eigen::MatrixXcd& table) {
    const Eigen::VectorXcd v = vectorize(table);
    const Eigen::VectorXd re = v.real(), im = v.imag();
    Eigen::VectorXcd out(map.rows());
    for (Eigen::Index r = 0; r < map.rows(); ++r) out(r) = {dot2(map.row(r), re), dot2(map.row(r), im)};
    return unvectorize(out, static_cast<int>(table.rows()));
}

}  // namespace

// ---------------------------------------------------------------------------
// MomentTable

MomentTable::MomentTable(MomentKind kind, std::optional<double> w, Eigen::MatrixXcd entries)
    : kind_(kind), w_(w), m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) throw ValidationError("entries", "moment table must be square and non-empty");
    if (std::abs(m_(0, 0) - 1.0) > kTableTolerance)
        throw ValidationError("entries", "M_00 must be 1, got " + std::to_string(m_(0, 0).real()));
    for (int n = 0; n < m_.rows(); ++n) {
        for (int m = 0; m < n; ++m) {
            const double scale = std::max({1.0, std::abs(m_(n, m)), std::abs(m_(m, n))});
            if (!std::isfinite(std::abs(m_(n, m))) || std::abs(m_(n, m) - std::conj(m_(m, n))) > kTableTolerance * scale)
                throw ValidationError("entries", "M_" + std::to_string(n) + std::to_string(m) + " is not conj(M_" +
                                                     std::to_string(m) + std::to_string(n) + ")");
        }
        if (std::abs(m_(n, n).imag()) > kTableTolerance * std::max(1.0, std::abs(m_(n, n))))
            throw ValidationError("entries", "diagonal moment M_" + std::to_string(n) + std::to_string(n) + " is not real");
    }
    m_(0, 0) = 1.0;
}

MomentTable MomentTable::normal(Eigen::MatrixXcd entries) {
    return MomentTable(MomentKind::Normal, std::nullopt, std::move(entries));
}

MomentTable MomentTable::nonclassicality(double w, Eigen::MatrixXcd entries) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    return MomentTable(MomentKind::Nonclassicality, w, std::move(entries));
}

cplx MomentTable::operator()(int n, int m) const {
    if (n < 0 || m < 0 || n > order() || m > order())
        throw ValidationError("order", "moment (" + std::to_string(n) + "," + std::to_string(m) +
                                           ") exceeds table order " + std::to_string(order()));
    return m_(n, m);
}

// ---------------------------------------------------------------------------
// ObservablePoly

ObservablePoly::ObservablePoly(Eigen::MatrixXcd coefficients) : b_(std::move(coefficients)) {
    if (b_.rows() == 0 || b_.rows() != b_.cols())
        throw ValidationError("terms", "observable coefficients must be square and non-empty");
}

ObservablePoly ObservablePoly::number(double shift) {
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2, 2);
    b(0, 0) = shift;
    b(1, 1) = 1.0;
    return ObservablePoly(b);
}

bool ObservablePoly::is_hermitian(double tolerance) const {
    return (b_ - b_.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
}

// ---------------------------------------------------------------------------
// Conversions

MomentTable normal_moments(const StateSpec& state, int order) {
    if (order < 0) throw ValidationError("K", "moment order must be >= 0");
    Eigen::MatrixXcd m(order + 1, order + 1);
    for (int n = 0; n <= order; ++n)
        for (int j = 0; j <= n; ++j) {
            m(n, j) = normal_moment(state, n, j);
            m(j, n) = std::conj(m(n, j));
        }
    m(0, 0) = 1.0;
    return MomentTable::normal(std::move(m));
}

Eigen::MatrixXd conversion_matrix(const CoeffTable& coeffs, ConversionDirection direction) {
    const int k = coeffs.order + 1;
    const Eigen::MatrixXd& c = direction == ConversionDirection::ToNonclassicality ? coeffs.c : coeffs.cbar;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k * k, k * k);
    for (int n = 0; n < k; ++n)
        for (int m = 0; m < k; ++m)
            for (int i = 0; i <= n; ++i)
                for (int j = 0; j <= m; ++j) {
                    if (c(i, j) == 0.0) continue;
                    const double sign = j % 2 == 0 ? 1.0 : -1.0;
                    a(n * k + m, (n - i) * k + (m - j)) += sign * c(i, j) * binomial(n, i) * binomial(m, j);
                }
    return a;
}

MomentTable to_nonclassicality(const MomentTable& normal, double w) {
    if (normal.kind() != MomentKind::Normal)
        throw ValidationError("kind", "forward conversion needs a normally-ordered table");
    check_order(normal.order());
    const auto coeffs = FilterModel::shipped().coeff_table(w, normal.order());
    return MomentTable::nonclassicality(
        w, apply_map(conversion_matrix(coeffs, ConversionDirection::ToNonclassicality), normal.entries()));
}

MomentTable to_normal(const MomentTable& ncl) {
    if (ncl.kind() != MomentKind::Nonclassicality || !ncl.width())
        throw ValidationError("w", "inverse conversion needs a nonclassicality table with its width");
    check_order(ncl.order());
    const auto coeffs = FilterModel::shipped().coeff_table(*ncl.width(), ncl.order());
    return MomentTable::normal(apply_map(conversion_matrix(coeffs, ConversionDirection::ToNormal), ncl.entries()));
}

ConversionConditioning conversion_conditioning(double w, int order) {
    check_order(order);
    const auto coeffs = FilterModel::shipped().coeff_table(w, order);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(conversion_matrix(coeffs, ConversionDirection::ToNormal));
    const auto& s = svd.singularValues();
    return {s(0) / s(s.size() - 1), coeffs.cbar.diagonal().cwiseAbs().maxCoeff()};
}

cplx expectation(const ObservablePoly& obs, const MomentTable& table) {
    if (obs.order() > table.order())
        throw ValidationError("K", "observable needs moments up to order " + std::to_string(obs.order()) +
                                       ", table has " + std::to_string(table.order()));
    const MomentTable normal = table.kind() == MomentKind::Normal ? table : to_normal(table);
    cplx sum = 0.0;
    const auto& b = obs.coefficients();
    for (int n = 0; n <= obs.order(); ++n)
        for (int m = 0; m <= obs.order(); ++m)
            if (b(n, m) != 0.0) sum += b(n, m) * normal(n, m);
    return sum;
}

double convergence_gap(const StateSpec& state, int n, int m, double w) {
    if (n < 0 || m < 0) throw ValidationError("order", "moment orders must be >= 0");
    const int order = std::max(n, m);
    const auto normal = normal_moments(state, order);
    return std::abs(to_nonclassicality(normal, w)(n, m) - normal(n, m));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Eigen::MatrixXcd entries_from_json(const nlohmann::json& list, int order, const std::string& field, bool fill_conjugates) {
    if (!list.is_array()) throw ValidationError(field, "field '" + field + "' must be an array of [n, m, re, im]");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(order + 1, order + 1);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(order + 1, order + 1);
    for (const auto& e : list) {
        if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            !e[2].is_number() || !e[3].is_number())
            throw ValidationError(field, "each entry must be [n, m, re, im]");
        const int n = e[0].get<int>(), k = e[1].get<int>();
        if (n < 0 || k < 0 || n > order || k > order)
            throw ValidationError(field, "entry (" + std::to_string(n) + "," + std::to_string(k) + ") exceeds K");
        m(n, k) = {e[2].get<double>(), e[3].get<double>()};
        seen(n, k) = 1;
    }
    if (fill_conjugates) {
        for (int n = 0; n <= order; ++n)
            for (int k = 0; k <= order; ++k) {
                if (seen(n, k)) continue;
                if (!seen(k, n))
                    throw ValidationError(field, "missing entry (" + std::to_string(n) + "," + std::to_string(k) + ")");
                m(n, k) = std::conj(m(k, n));
            }
    }
    return m;
}

nlohmann::json entries_to_json(const Eigen::MatrixXcd& m) {
    auto list = nlohmann::json::array();
    for (int n = 0; n < m.rows(); ++n)
        for (int k = 0; k < m.cols(); ++k) list.push_back({n, k, m(n, k).real(), m(n, k).imag()});
    return list;
}

int order_of(const nlohmann::json& j) {
    if (!j.contains("K") || !j.at("K").is_number_integer()) throw ValidationError("K", "field 'K' must be an integer");
    const int order = j.at("K").get<int>();
    if (order < 0) throw ValidationError("K", "field 'K' must be >= 0");
    return order;
}

}  // namespace

nlohmann::json to_json(const MomentTable& table) {
    nlohmann::json j;
    j["kind"] = table.kind() == MomentKind::Normal ? "normal" : "nonclassicality";
    if (table.width()) j["w"] = *table.width();
    j["K"] = table.order();
    j["entries"] = entries_to_json(table.entries());
    return j;
}

MomentTable moment_table_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("table", "moment table must be a JSON object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ValidationError("kind", "field 'kind' must be \"normal\" or \"nonclassicality\"");
    const std::string kind = j.at("kind").get<std::string>();
    const int order = order_of(j);
    if (!j.contains("entries")) throw ValidationError("entries", "missing field 'entries'");
    auto m = entries_from_json(j.at("entries"), order, "entries", true);
    if (kind == "normal") return MomentTable::normal(std::move(m));
    if (kind == "nonclassicality") {
        if (!j.contains("w") || !j.at("w").is_number())
            throw ValidationError("w", "nonclassicality tables need a numeric 'w'");
        return MomentTable::nonclassicality(j.at("w").get<double>(), std::move(m));
    }
    throw ValidationError("kind", "unknown table kind '" + kind + "'");
}

nlohmann::json to_json(const ObservablePoly& obs) {
    nlohmann::json j;
    j["K"] = obs.order();
    auto terms = nlohmann::json::array();
    const auto& b = obs.coefficients();
    for (int n = 0; n < b.rows(); ++n)
        for (int k = 0; k < b.cols(); ++k)
            if (b(n, k) != 0.0) terms.push_back({n, k, b(n, k).real(), b(n, k).imag()});
    j["terms"] = terms;
    return j;
}

ObservablePoly observable_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("observable", "observable must be a JSON object");
    if (!j.contains("terms")) throw ValidationError("terms", "missing field 'terms'");
    int order = 0;
    if (j.contains("K")) {
        order = order_of(j);
    } else if (j.at("terms").is_array()) {
        for (const auto& t : j.at("terms"))
            if (t.is_array() && t.size() >= 2 && t[0].is_number_integer() && t[1].is_number_integer())
                order = std::max({order, t[0].get<int>(), t[1].get<int>()});
    }
    return ObservablePoly(entries_from_json(j.at("terms"), order, "terms", false));
}

}  // namespace nqm
