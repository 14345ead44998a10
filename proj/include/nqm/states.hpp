#pragma once

// Single-mode states: analytic normally-ordered moments, the normally-ordered
// characteristic function, homodyne quadrature statistics, and a truncated
// Fock-basis oracle.
//
// Conventions used throughout the library:
//   Phi(xi) = Tr[rho exp(xi a^dag) exp(-xi^* a)]
//   x_theta = a exp(-i theta) + a^dag exp(i theta), vacuum variance 1.

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace nqm {

using cplx = std::complex<double>;

struct Coherent {
    cplx alpha;
};
struct Thermal {
    double nbar;
};
struct Fock {
    int photons;
};
/// Single-photon-added thermal state, rho ~ a^dag rho_th a.
struct Spats {
    double nbar;
};
/// Squeezed vacuum with quadrature variance `variance` along x_phase.
struct SqueezedVacuum {
    double variance;
    double phase;
};
struct FockVector {
    std::vector<cplx> amplitudes;
};

class StateSpec {
public:
    using Kind = std::variant<Coherent, Thermal, Fock, Spats, SqueezedVacuum, FockVector>;

    static StateSpec coherent(cplx alpha);
    static StateSpec vacuum() { return coherent(0.0); }
    static StateSpec thermal(double nbar);
    static StateSpec fock(int photons);
    static StateSpec spats(double nbar);
    static StateSpec squeezed_vacuum(double variance, double phase = 0.0);
    /// Amplitudes must be normalized to 1e-12.
    static StateSpec fock_vector(std::vector<cplx> amplitudes);

    const Kind& kind() const noexcept { return kind_; }
    /// Short text form, e.g. "spats:0.3".
    std::string label() const;
    bool is_gaussian() const noexcept;
    /// True when every quadrature has the same distribution.
    bool is_phase_invariant() const noexcept;

private:
    explicit StateSpec(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

/// Truncated density matrix rho_{jk} = <j|rho|k>, 0 <= j,k <= cutoff.
class FockMatrix {
public:
    /// Checks Hermiticity, trace <= 1 and positive semidefiniteness.
    explicit FockMatrix(Eigen::MatrixXcd rho);
    static FockMatrix pure(const Eigen::VectorXcd& amplitudes);
    static FockMatrix diagonal(const Eigen::VectorXd& populations);

    int cutoff() const noexcept { return static_cast<int>(rho_.rows()) - 1; }
    const Eigen::MatrixXcd& rho() const noexcept { return rho_; }
    double trace() const { return rho_.trace().real(); }
    double trace_deficit() const { return 1.0 - trace(); }
    double min_eigenvalue() const;

private:
    struct Unchecked {};
    FockMatrix(Eigen::MatrixXcd rho, Unchecked) : rho_(std::move(rho)) {}
    Eigen::MatrixXcd rho_;
};

/// Closed-form <a^dag^n a^m>; empty for kinds without one (FockVector).
std::optional<cplx> analytic_normal_moment(const StateSpec& state, int n, int m);

/// <a^dag^n a^m>, falling back to the Fock oracle where no closed form exists.
cplx normal_moment(const StateSpec& state, int n, int m);

/// Tr[rho a^dag^n a^m] on a truncated matrix.
cplx fock_moment(const FockMatrix& rho, int n, int m);

/// Builds the truncated density matrix. Throws when the discarded
/// probability exceeds `tolerance`.
FockMatrix to_fock(const StateSpec& state, int cutoff, double tolerance = 1e-12);

/// Smallest cutoff whose neglected weight sum_{k>K} p_k (1+k)^order is below
/// `tolerance`.
int fock_cutoff(const StateSpec& state, int order = 0, double tolerance = 1e-12);

/// Normally-ordered characteristic function with any per-state setup done once.
class CharacteristicFunction {
public:
    explicit CharacteristicFunction(const StateSpec& state);

    /// Throws NumericError where the value would overflow.
    cplx operator()(cplx xi) const;
    /// Upper bound of |Phi| on the circle |xi| = radius.
    double envelope(double radius) const;

private:
    StateSpec state_;
    Eigen::MatrixXcd scaled_moments_;  // <a^dag^n a^m>/(n! m!), FockVector only
};

cplx char_function(const StateSpec& state, cplx xi);

double quadrature_mean(const StateSpec& state, double theta);
double quadrature_variance(const StateSpec& state, double theta);
/// Converts a variance from the vacuum-1 convention to the vacuum-1/4 one.
constexpr double to_quarter_vacuum_variance(double variance) { return variance / 4.0; }

/// Homodyne density p(x | theta): Gaussian closed form for Gaussian states,
/// Hermite-function expansion of the truncated density matrix otherwise.
class QuadratureDensity {
public:
    explicit QuadratureDensity(const StateSpec& state, double tolerance = 1e-12);

    double operator()(double theta, double x) const;
    bool gaussian() const noexcept { return !rho_.has_value(); }
    /// |x| beyond which the density is negligible for every phase.
    double support_radius() const noexcept { return support_; }

private:
    StateSpec state_;
    std::optional<FockMatrix> rho_;
    bool diagonal_ = false;
    double support_ = 0.0;
};

double quadrature_pdf(const StateSpec& state, double theta, double x);

nlohmann::json to_json(const StateSpec& state);
StateSpec state_from_json(const nlohmann::json& j);

}  // namespace nqm
