#pragma once

// Moment tables and the linear maps between normally-ordered moments
// <a^dag^n a^m> and nonclassicality moments M_{Omega,nm}:
//   M_{Omega,nm} = sum_{i,j} (-1)^j C_{i,j} binom(n,i) binom(m,j) <a^dag^{n-i} a^{m-j}>
// and the same form with Cbar for the inverse direction.

#include <optional>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nqm/filter.hpp"
#include "nqm/states.hpp"

namespace nqm {

enum class MomentKind { Normal, Nonclassicality };

/// Square table M_{nm}, 0 <= n,m <= order, with M_00 = 1 and M_nm = conj(M_mn).
class MomentTable {
public:
    static MomentTable normal(Eigen::MatrixXcd entries);
    static MomentTable nonclassicality(double w, Eigen::MatrixXcd entries);

    MomentKind kind() const noexcept { return kind_; }
    /// Filter width; empty for normally-ordered tables.
    std::optional<double> width() const noexcept { return w_; }
    int order() const noexcept { return static_cast<int>(m_.rows()) - 1; }
    cplx operator()(int n, int m) const;
    const Eigen::MatrixXcd& entries() const noexcept { return m_; }

private:
    MomentTable(MomentKind kind, std::optional<double> w, Eigen::MatrixXcd entries);
    MomentKind kind_;
    std::optional<double> w_;
    Eigen::MatrixXcd m_;
};

/// B = sum b_nm a^dag^n a^m.
class ObservablePoly {
public:
    explicit ObservablePoly(Eigen::MatrixXcd coefficients);
    /// a^dag a + shift
    static ObservablePoly number(double shift = 0.0);

    int order() const noexcept { return static_cast<int>(b_.rows()) - 1; }
    const Eigen::MatrixXcd& coefficients() const noexcept { return b_; }
    bool is_hermitian(double tolerance = 1e-12) const;

private:
    Eigen::MatrixXcd b_;
};

/// Table of <a^dag^n a^m> for n,m <= order.
MomentTable normal_moments(const StateSpec& state, int order);

MomentTable to_nonclassicality(const MomentTable& normal, double w);
MomentTable to_normal(const MomentTable& ncl);

enum class ConversionDirection { ToNonclassicality, ToNormal };

/// The conversion as a matrix on the vectorized table, index n*(order+1)+m.
/// It is lower triangular with respect to the total order n+m.
Eigen::MatrixXd conversion_matrix(const CoeffTable& coeffs, ConversionDirection direction);

struct ConversionConditioning {
    double condition_number;  // 2-norm, of the inverse map
    double max_cbar;          // max_i |Cbar_ii(w)|
};
ConversionConditioning conversion_conditioning(double w, int order);

/// Tr[rho B]. Nonclassicality tables are converted back first.
cplx expectation(const ObservablePoly& obs, const MomentTable& table);

/// |M_{Omega,nm}(w) - <a^dag^n a^m>|
double convergence_gap(const StateSpec& state, int n, int m, double w);

nlohmann::json to_json(const MomentTable& table);
MomentTable moment_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ObservablePoly& obs);
ObservablePoly observable_from_json(const nlohmann::json& j);

}  // namespace nqm
