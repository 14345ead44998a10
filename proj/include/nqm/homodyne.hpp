#pragma once

// Simulated balanced-homodyne data and estimators built on the empirical
// characteristic function
//   Phi^(xi) = exp(b^2/2) mean_k exp(i b x_k),  xi = i b exp(i theta),
// where x_k are the samples recorded at phase theta.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nqm/moments.hpp"
#include "nqm/nqp.hpp"
#include "nqm/states.hpp"

namespace nqm {

struct QuadratureSample {
    double theta;
    double x;
};

/// Samples grouped by phase, theta_j = pi j / n_phases, phase-major order.
class QuadratureDataset {
public:
    QuadratureDataset(StateSpec state, std::uint64_t seed, int n_phases, int n_per_phase,
                      std::vector<QuadratureSample> samples);

    const StateSpec& state() const noexcept { return state_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int n_phases() const noexcept { return n_phases_; }
    int n_per_phase() const noexcept { return n_per_phase_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double phase(int j) const;
    const std::vector<QuadratureSample>& samples() const noexcept { return samples_; }
    /// Quadrature values recorded at phase j.
    std::vector<double> values(int j) const;

private:
    StateSpec state_;
    std::uint64_t seed_;
    int n_phases_;
    int n_per_phase_;
    std::vector<QuadratureSample> samples_;
};

/// Draws n_per_phase samples at each of n_phases phases. Each phase has its
/// own generator seeded from (seed, phase index), so the output depends only
/// on the arguments.
QuadratureDataset sample(const StateSpec& state, int n_phases, int n_per_phase, std::uint64_t seed);

enum class ErrorMethod { Propagated, Bootstrap };

struct EstimateWithError {
    cplx value;
    double std_error;
    ErrorMethod method = ErrorMethod::Propagated;
    int resamples = 0;
};

/// Largest tolerated exp(b^2/2) (times the filter, where one applies).
constexpr double kMaxAmplification = 1e3;

/// Phi^(xi) from the phase nearest to arg(xi) - pi/2; the standard error
/// is exp(b^2/2) sqrt((1 - |mean|^2) / (n - 1)).
EstimateWithError empirical_char(const QuadratureDataset& ds, cplx xi);

struct MomentEstimateOptions {
    int bootstrap = 0;  // 0: propagated errors; otherwise the resample count
    std::uint64_t seed = 0;
    double step = 0.02;  // stencil spacing in b
};

struct MomentEstimate {
    MomentTable table;           // nonclassicality kind
    Eigen::MatrixXd std_error;   // real part for n = m, |complex| otherwise
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;  // std_error >= |value|
    ErrorMethod method;
    int resamples;
};

/// M_{Omega,nm}, n,m <= order <= 2, by a 13-point stencil in b applied to
/// exp(b^2/2) Omega_w(b) exp(i b x) per sample, then Fourier projection over
/// the phases. Needs n_phases > 2 order.
MomentEstimate estimate_ncl_moments(const QuadratureDataset& ds, double w, int order,
                                    const MomentEstimateOptions& options = {});

/// Q_Omega from estimated M11, M22 with a bootstrap error.
EstimateWithError estimate_mandel_q_omega(const QuadratureDataset& ds, double w, int resamples = 200,
                                          std::uint64_t seed = 0);

struct NqpEstimate {
    NqpGrid grid;
    Eigen::MatrixXd std_error;  // pointwise bootstrap standard error
    double normalization_error;
    int resamples;
    double amplification;  // max_b exp(b^2/2) Omega_w(b) on the quadrature nodes
};

/// Plug-in P_Omega from Phi^ on the phases times Gauss-Legendre nodes in b.
NqpEstimate estimate_nqp(const QuadratureDataset& ds, double w, double extent, int resolution, int resamples = 200,
                         std::uint64_t seed = 0);

void write_dataset(const std::filesystem::path& path, const QuadratureDataset& ds);
QuadratureDataset read_dataset(const std::filesystem::path& path);

}  // namespace nqm
