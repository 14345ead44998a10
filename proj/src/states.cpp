#include "nqm/states.hpp"

#include <charconv>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nqm/error.hpp"

namespace nqm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double factorial(int n) { return std::tgamma(n + 1.0); }

// Squeezing parameters: <a^dag a> = N, <a^2> = M.
struct GaussianMoments {
    double n;
    cplx m;
};

GaussianMoments squeezed_moments(const SqueezedVacuum& s) {
    const double r = -0.5 * std::log(s.variance);
    return {std::sinh(r) * std::sinh(r), -std::polar(std::sinh(r) * std::cosh(r), 2.0 * s.phase)};
}

// Coefficient of xi^n xi*^m in exp(-N xi xi* + M* xi^2/2 + M xi*^2/2).
cplx gaussian_taylor(const GaussianMoments& g, int n, int m) {
    cplx sum = 0.0;
    for (int k = 0; k <= std::min(n, m); ++k) {
        if ((n - k) % 2 != 0 || (m - k) % 2 != 0) continue;
        const int p = (n - k) / 2;
        const int q = (m - k) / 2;
        sum += std::pow(-g.n, k) / factorial(k) * std::pow(std::conj(g.m) / 2.0, p) / factorial(p) *
               std::pow(g.m / 2.0, q) / factorial(q);
    }
    return sum;
}

// Pure-state amplitudes or mixed-state populations in the Fock basis.
struct FockData {
    std::vector<cplx> amplitudes;
    std::vector<double> populations;
    bool pure;
};

FockData fock_data(const StateSpec& state, int cutoff) {
    FockData d;
    std::visit(overloaded{
                   [&](const Coherent& c) {
                       d.pure = true;
                       cplx amp = std::exp(-0.5 * std::norm(c.alpha));
                       for (int k = 0; k <= cutoff; ++k) {
                           if (k > 0) amp *= c.alpha / std::sqrt(double(k));
                           d.amplitudes.push_back(amp);
                       }
                   },
                   [&](const Thermal& t) {
                       d.pure = false;
                       const double q = t.nbar / (1.0 + t.nbar);
                       for (int k = 0; k <= cutoff; ++k) d.populations.push_back((1.0 - q) * std::pow(q, k));
                   },
                   [&](const Fock& f) {
                       d.pure = false;
                       for (int k = 0; k <= cutoff; ++k) d.populations.push_back(k == f.photons ? 1.0 : 0.0);
                   },
                   [&](const Spats& s) {
                       d.pure = false;
                       const double q = s.nbar / (1.0 + s.nbar);
                       for (int k = 0; k <= cutoff; ++k)
                           d.populations.push_back(k == 0 ? 0.0 : k * std::pow(q, k - 1) * (1.0 - q) * (1.0 - q));
                   },
                   [&](const SqueezedVacuum& s) {
                       d.pure = true;
                       const double r = -0.5 * std::log(s.variance);
                       const cplx t = -std::polar(std::tanh(r), 2.0 * s.phase);
                       cplx amp = 1.0 / std::sqrt(std::cosh(r));
                       for (int k = 0; k <= cutoff; ++k) {
                           if (k % 2 == 1) {
                               d.amplitudes.push_back(0.0);
                               continue;
                           }
                           if (k > 0) amp *= t * std::sqrt((k - 1.0) / k);
                           d.amplitudes.push_back(amp);
                       }
                   },
                   [&](const FockVector& v) {
                       d.pure = true;
                       for (int k = 0; k <= cutoff; ++k)
                           d.amplitudes.push_back(k < int(v.amplitudes.size()) ? v.amplitudes[k] : cplx{});
                   },
               },
               state.kind());
    if (d.pure)
        for (const auto& a : d.amplitudes) d.populations.push_back(std::norm(a));
    return d;
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ValidationError(field, message);
}

// shortest text that reads back to the same double
std::string format_double(double v) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, result.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSpec

StateSpec StateSpec::coherent(cplx alpha) {
    require(std::isfinite(alpha.real()) && std::isfinite(alpha.imag()), "alpha", "coherent amplitude must be finite");
    return StateSpec(Coherent{alpha});
}

StateSpec StateSpec::thermal(double nbar) {
    require(std::isfinite(nbar) && nbar >= 0.0, "nbar", "thermal state requires nbar >= 0");
    return StateSpec(Thermal{nbar});
}

StateSpec StateSpec::fock(int photons) {
    require(photons >= 0, "photons", "Fock state requires a photon number >= 0");
    return StateSpec(Fock{photons});
}

StateSpec StateSpec::spats(double nbar) {
    require(std::isfinite(nbar) && nbar >= 0.0, "nbar", "SPATS requires nbar >= 0");
    return StateSpec(Spats{nbar});
}

StateSpec StateSpec::squeezed_vacuum(double variance, double phase) {
    require(std::isfinite(variance) && variance > 0.0, "variance", "squeezed vacuum requires variance > 0");
    require(std::isfinite(phase), "phase", "squeezing phase must be finite");
    return StateSpec(SqueezedVacuum{variance, phase});
}

StateSpec StateSpec::fock_vector(std::vector<cplx> amplitudes) {
    require(!amplitudes.empty(), "amplitudes", "Fock vector needs at least one amplitude");
    double norm = 0.0;
    for (const auto& a : amplitudes) norm += std::norm(a);
    require(std::abs(norm - 1.0) <= 1e-12, "amplitudes",
            "Fock vector amplitudes must satisfy sum |c_k|^2 = 1 (got " + format_double(norm) + ")");
    return StateSpec(FockVector{std::move(amplitudes)});
}

std::string StateSpec::label() const {
    return std::visit(overloaded{
                          [](const Coherent& c) {
                              return "coherent:" + format_double(c.alpha.real()) +
                                     (c.alpha.imag() < 0 ? "" : "+") + format_double(c.alpha.imag()) + "i";
                          },
                          [](const Thermal& t) { return "thermal:" + format_double(t.nbar); },
                          [](const Fock& f) { return "fock:" + std::to_string(f.photons); },
                          [](const Spats& s) { return "spats:" + format_double(s.nbar); },
                          [](const SqueezedVacuum& s) {
                              return "squeezed:" + format_double(s.variance) + "," + format_double(s.phase);
                          },
                          [](const FockVector& v) { return "fock_vector[" + std::to_string(v.amplitudes.size()) + "]"; },
                      },
                      kind_);
}

bool StateSpec::is_gaussian() const noexcept {
    return std::holds_alternative<Coherent>(kind_) || std::holds_alternative<Thermal>(kind_) ||
           std::holds_alternative<SqueezedVacuum>(kind_);
}

bool StateSpec::is_phase_invariant() const noexcept {
    if (const auto* c = std::get_if<Coherent>(&kind_)) return c->alpha == 0.0;
    if (const auto* s = std::get_if<SqueezedVacuum>(&kind_)) return s->variance == 1.0;
    if (const auto* v = std::get_if<FockVector>(&kind_)) {
        int nonzero = 0;
        for (const auto& a : v->amplitudes) nonzero += (a != 0.0);
        return nonzero <= 1;
    }
    return true;
}

// ---------------------------------------------------------------------------
// FockMatrix

FockMatrix::FockMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
    require(rho_.rows() == rho_.cols() && rho_.rows() > 0, "rho", "density matrix must be square and non-empty");
    require((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() <= 1e-12, "rho", "density matrix must be Hermitian");
    require(trace() <= 1.0 + 1e-10, "rho", "density matrix trace exceeds 1");
    require(min_eigenvalue() >= -1e-10, "rho", "density matrix must be positive semidefinite");
}

FockMatrix FockMatrix::pure(const Eigen::VectorXcd& amplitudes) {
    return FockMatrix(amplitudes * amplitudes.adjoint(), Unchecked{});
}

FockMatrix FockMatrix::diagonal(const Eigen::VectorXd& populations) {
    require(populations.minCoeff() >= 0.0, "populations", "populations must be nonnegative");
    return FockMatrix(populations.cast<cplx>().asDiagonal().toDenseMatrix(), Unchecked{});
}

double FockMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Moments

std::optional<cplx> analytic_normal_moment(const StateSpec& state, int n, int m) {
    if (n < 0 || m < 0) throw ValidationError("order", "moment orders must be nonnegative");
    return std::visit(
        overloaded{
            [&](const Coherent& c) -> std::optional<cplx> {
                return std::pow(std::conj(c.alpha), n) * std::pow(c.alpha, m);
            },
            [&](const Thermal& t) -> std::optional<cplx> {
                return n == m ? factorial(n) * std::pow(t.nbar, n) : 0.0;
            },
            [&](const Fock& f) -> std::optional<cplx> {
                if (n != m || n > f.photons) return cplx{0.0};
                return factorial(f.photons) / factorial(f.photons - n);
            },
            [&](const Spats& s) -> std::optional<cplx> {
                // From Phi = (1 - (1+nbar)|xi|^2) exp(-nbar |xi|^2).
                if (n != m) return cplx{0.0};
                if (n == 0) return cplx{1.0};
                return factorial(n) * std::pow(s.nbar, n - 1) * (s.nbar + n * (1.0 + s.nbar));
            },
            [&](const SqueezedVacuum& s) -> std::optional<cplx> {
                const double sign = (m % 2 == 0) ? 1.0 : -1.0;
                return sign * factorial(n) * factorial(m) * gaussian_taylor(squeezed_moments(s), n, m);
            },
            [&](const FockVector&) -> std::optional<cplx> { return std::nullopt; },
        },
        state.kind());
}

cplx fock_moment(const FockMatrix& rho, int n, int m) {
    const int cutoff = rho.cutoff();
    cplx sum = 0.0;
    for (int j = m; j <= cutoff; ++j) {
        const int k = j - m + n;
        if (k > cutoff) break;
        const double coef = std::exp(0.5 * (std::lgamma(j + 1.0) + std::lgamma(k + 1.0)) - std::lgamma(j - m + 1.0));
        sum += rho.rho()(j, k) * coef;
    }
    return sum;
}

cplx normal_moment(const StateSpec& state, int n, int m) {
    if (auto value = analytic_normal_moment(state, n, m)) return *value;
    const int cutoff = fock_cutoff(state, std::max(n, m), 1e-14);
    return fock_moment(to_fock(state, cutoff, 1e-12), n, m);
}

FockMatrix to_fock(const StateSpec& state, int cutoff, double tolerance) {
    if (cutoff < 0) throw ValidationError("cutoff", "Fock cutoff must be >= 0");
    const FockData d = fock_data(state, cutoff);
    double kept = 0.0;
    for (double p : d.populations) kept += p;
    if (1.0 - kept > tolerance)
        throw ValidationError("cutoff", "cutoff " + std::to_string(cutoff) + " discards probability " +
                                            format_double(1.0 - kept) + " > tolerance " + format_double(tolerance) +
                                            " for " + state.label());
    if (d.pure) return FockMatrix::pure(Eigen::Map<const Eigen::VectorXcd>(d.amplitudes.data(), d.amplitudes.size()));
    return FockMatrix::diagonal(Eigen::Map<const Eigen::VectorXd>(d.populations.data(), d.populations.size()));
}

int fock_cutoff(const StateSpec& state, int order, double tolerance) {
    if (const auto* f = std::get_if<Fock>(&state.kind())) return f->photons;
    if (const auto* v = std::get_if<FockVector>(&state.kind())) return int(v->amplitudes.size()) - 1;

    constexpr int max_cutoff = 4000;
    int probe = 64;
    while (true) {
        const FockData d = fock_data(state, probe);
        std::vector<double> weighted(d.populations.size());
        for (size_t k = 0; k < weighted.size(); ++k) weighted[k] = d.populations[k] * std::pow(1.0 + k, order);
        // the last few terms must be negligible before the suffix sums can be trusted
        const double last = weighted.back() + weighted[weighted.size() - 2];
        if (last < tolerance * 1e-6) {
            double tail = 0.0;
            for (int k = probe; k >= 0; --k) {
                if (tail + weighted[k] >= tolerance) return k;
                tail += weighted[k];
            }
            return 0;
        }
        if (probe >= max_cutoff)
            throw NumericError("no Fock cutoff below " + std::to_string(max_cutoff) + " reaches tolerance for " +
                               state.label());
        probe = std::min(2 * probe, max_cutoff);
    }
}

// ---------------------------------------------------------------------------
// Characteristic function

CharacteristicFunction::CharacteristicFunction(const StateSpec& state) : state_(state) {
    if (const auto* v = std::get_if<FockVector>(&state.kind())) {
        const int k = int(v->amplitudes.size()) - 1;
        const FockMatrix rho = to_fock(state, k);
        scaled_moments_.resize(k + 1, k + 1);
        for (int n = 0; n <= k; ++n)
            for (int m = 0; m <= k; ++m) scaled_moments_(n, m) = fock_moment(rho, n, m) / (factorial(n) * factorial(m));
    }
}

cplx CharacteristicFunction::operator()(cplx xi) const {
    const double x = std::norm(xi);
    const cplx value = std::visit(
        overloaded{
            [&](const Coherent& c) { return std::exp(xi * std::conj(c.alpha) - std::conj(xi) * c.alpha); },
            [&](const Thermal& t) { return cplx{std::exp(-t.nbar * x)}; },
            [&](const Fock& f) { return cplx{std::laguerre(unsigned(f.photons), x)}; },
            [&](const Spats& s) { return cplx{(1.0 - (1.0 + s.nbar) * x) * std::exp(-s.nbar * x)}; },
            [&](const SqueezedVacuum& s) {
                const auto g = squeezed_moments(s);
                const cplx exponent = -g.n * x + 0.5 * (std::conj(g.m) * xi * xi + g.m * std::conj(xi * xi));
                if (exponent.real() > 700.0)
                    throw NumericError("characteristic function overflows at |xi| = " + format_double(std::sqrt(x)) +
                                       "; valid radius is sqrt(1400/(1-V))");
                return std::exp(exponent);
            },
            [&](const FockVector&) {
                // sum_{n,m} xi^n (-xi*)^m <a^dag^n a^m> / (n! m!)
                const int k = int(scaled_moments_.rows()) - 1;
                cplx sum = 0.0;
                cplx xn = 1.0;
                for (int n = 0; n <= k; ++n, xn *= xi) {
                    cplx xm = 1.0;
                    for (int m = 0; m <= k; ++m, xm *= -std::conj(xi)) sum += scaled_moments_(n, m) * xn * xm;
                }
                return sum;
            },
        },
        state_.kind());
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
        throw NumericError("characteristic function is not finite at |xi| = " + format_double(std::sqrt(x)));
    return value;
}

double CharacteristicFunction::envelope(double radius) const {
    const double x = radius * radius;
    return std::visit(overloaded{
                          [](const Coherent&) { return 1.0; },
                          [&](const Thermal& t) { return std::exp(-t.nbar * x); },
                          [&](const Fock& f) {
                              // |L_k(x)| <= sum_j binom(k,j) x^j / j!
                              double sum = 0.0, term = 1.0;
                              for (int j = 0; j <= f.photons; ++j) {
                                  sum += term;
                                  term *= double(f.photons - j) / ((j + 1.0) * (j + 1.0)) * x;
                              }
                              return sum;
                          },
                          [&](const Spats& s) { return (1.0 + (1.0 + s.nbar) * x) * std::exp(-s.nbar * x); },
                          [&](const SqueezedVacuum& s) {
                              const auto g = squeezed_moments(s);
                              return std::exp(std::min(700.0, (std::abs(g.m) - g.n) * x));
                          },
                          [&](const FockVector&) {
                              const int k = int(scaled_moments_.rows()) - 1;
                              double sum = 0.0;
                              for (int n = 0; n <= k; ++n)
                                  for (int m = 0; m <= k; ++m)
                                      sum += std::abs(scaled_moments_(n, m)) * std::pow(radius, n + m);
                              return sum;
                          },
                      },
                      state_.kind());
}

cplx char_function(const StateSpec& state, cplx xi) { return CharacteristicFunction(state)(xi); }

// ---------------------------------------------------------------------------
// Quadratures

double quadrature_mean(const StateSpec& state, double theta) {
    return 2.0 * (normal_moment(state, 0, 1) * std::polar(1.0, -theta)).real();
}

double quadrature_variance(const StateSpec& state, double theta) {
    const cplx a = normal_moment(state, 0, 1);
    const cplx a2 = normal_moment(state, 0, 2);
    const double n = normal_moment(state, 1, 1).real();
    return 1.0 + 2.0 * (n - std::norm(a)) + 2.0 * ((a2 - a * a) * std::polar(1.0, -2.0 * theta)).real();
}

QuadratureDensity::QuadratureDensity(const StateSpec& state, double tolerance) : state_(state) {
    if (state.is_gaussian()) {
        double widest = 0.0;
        for (double th : {0.0, 0.25 * std::numbers::pi, 0.5 * std::numbers::pi, 0.75 * std::numbers::pi})
            widest = std::max(widest, quadrature_variance(state, th));
        support_ = 2.0 * std::abs(normal_moment(state, 0, 1)) + 9.0 * std::sqrt(widest);
        return;
    }
    const int cutoff = fock_cutoff(state, 0, tolerance);
    if (cutoff > 1000) throw NumericError("quadrature density needs Fock cutoff " + std::to_string(cutoff));
    rho_ = to_fock(state, cutoff, tolerance);
    diagonal_ = rho_->rho().isDiagonal(0.0);
    // classical turning point of the highest retained level plus a Gaussian margin
    support_ = std::sqrt(2.0) * (std::sqrt(2.0 * cutoff + 1.0) + 6.5);
}

double QuadratureDensity::operator()(double theta, double x) const {
    if (!rho_) {
        const double mu = quadrature_mean(state_, theta);
        const double var = quadrature_variance(state_, theta);
        return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    // Hermite functions of X = x / sqrt(2), the vacuum-1/2 quadrature.
    const int cutoff = rho_->cutoff();
    const double X = x / std::sqrt(2.0);
    Eigen::VectorXd u(cutoff + 1);
    u(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * X * X);
    if (cutoff >= 1) u(1) = std::sqrt(2.0) * X * u(0);
    for (int k = 1; k < cutoff; ++k)
        u(k + 1) = std::sqrt(2.0 / (k + 1.0)) * X * u(k) - std::sqrt(double(k) / (k + 1.0)) * u(k - 1);

    double density;
    if (diagonal_) {
        density = (rho_->rho().diagonal().real().array() * u.array().square()).sum();
    } else {
        Eigen::VectorXcd z(cutoff + 1);
        for (int k = 0; k <= cutoff; ++k) z(k) = u(k) * std::polar(1.0, -k * theta);
        density = (z.transpose() * rho_->rho() * z.conjugate()).value().real();
    }
    return std::max(0.0, density) / std::sqrt(2.0);
}

double quadrature_pdf(const StateSpec& state, double theta, double x) {
    return QuadratureDensity(state)(theta, x);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const StateSpec& state) {
    using nlohmann::json;
    return std::visit(overloaded{
                          [](const Coherent& c) {
                              return json{{"kind", "coherent"}, {"alpha", {c.alpha.real(), c.alpha.imag()}}};
                          },
                          [](const Thermal& t) { return json{{"kind", "thermal"}, {"nbar", t.nbar}}; },
                          [](const Fock& f) { return json{{"kind", "fock"}, {"n", f.photons}}; },
                          [](const Spats& s) { return json{{"kind", "spats"}, {"nbar", s.nbar}}; },
                          [](const SqueezedVacuum& s) {
                              return json{{"kind", "squeezed_vacuum"}, {"variance", s.variance}, {"phase", s.phase}};
                          },
                          [](const FockVector& v) {
                              json amps = json::array();
                              for (const auto& a : v.amplitudes) amps.push_back({a.real(), a.imag()});
                              return json{{"kind", "fock_vector"}, {"amplitudes", amps}};
                          },
                      },
                      state.kind());
}

namespace {

cplx complex_from_json(const nlohmann::json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ValidationError(field, "expected a number or a [re, im] pair");
}

const nlohmann::json& field_of(const nlohmann::json& j, const std::string& name) {
    if (!j.contains(name)) throw ValidationError(name, "missing field '" + name + "'");
    return j.at(name);
}

double number_of(const nlohmann::json& j, const std::string& name) {
    const auto& v = field_of(j, name);
    if (!v.is_number()) throw ValidationError(name, "field '" + name + "' must be a number");
    return v.get<double>();
}

}  // namespace

StateSpec state_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("state", "state must be a JSON object");
    const auto& kind_field = field_of(j, "kind");
    if (!kind_field.is_string()) throw ValidationError("kind", "field 'kind' must be a string");
    const std::string kind = kind_field.get<std::string>();
    if (kind == "coherent") return StateSpec::coherent(complex_from_json(field_of(j, "alpha"), "alpha"));
    if (kind == "thermal") return StateSpec::thermal(number_of(j, "nbar"));
    if (kind == "fock") {
        const auto& n = field_of(j, "n");
        if (!n.is_number_integer()) throw ValidationError("n", "field 'n' must be an integer");
        return StateSpec::fock(n.get<int>());
    }
    if (kind == "spats") return StateSpec::spats(number_of(j, "nbar"));
    if (kind == "squeezed_vacuum")
        return StateSpec::squeezed_vacuum(number_of(j, "variance"), j.contains("phase") ? number_of(j, "phase") : 0.0);
    if (kind == "fock_vector") {
        const auto& amps = field_of(j, "amplitudes");
        if (!amps.is_array()) throw ValidationError("amplitudes", "field 'amplitudes' must be an array");
        std::vector<cplx> c;
        for (const auto& a : amps) c.push_back(complex_from_json(a, "amplitudes"));
        return StateSpec::fock_vector(std::move(c));
    }
    throw ValidationError("kind", "unknown state kind '" + kind + "'");
}

}  // namespace nqm
