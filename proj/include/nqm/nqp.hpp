#pragma once

// Nonclassicality quasiprobability
//   P_Omega(alpha) = pi^-2 Int d^2xi Phi(xi) Omega_w(xi) exp(alpha xi^* - alpha^* xi)
// evaluated by quadrature over a truncated xi-disk.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "nqm/states.hpp"

namespace nqm {

/// P_Omega sampled on the square grid alpha = x + iy, x,y in [-extent, extent].
struct NqpGrid {
    double w = 0.0;
    double extent = 0.0;
    int resolution = 0;
    double truncation_radius = 0.0;  // R_xi
    Eigen::MatrixXd values;          // values(ix, iy)
    double imaginary_residue = 0.0;  // max |Im| before it was dropped
    /// Pointwise evaluation for refinement and tail estimates; may be empty.
    std::function<double(cplx)> evaluator;

    double spacing() const { return 2.0 * extent / (resolution - 1); }
    double coordinate(int i) const { return -extent + i * spacing(); }
    cplx alpha(int ix, int iy) const { return {coordinate(ix), coordinate(iy)}; }
    /// Riemann sum of the values, ideally 1.
    double normalization() const;
};

/// Weighted sum of plane waves
///   S(x, y) = sum_k c_k exp(2i (y p_k - x q_k)),  xi_k = p_k + i q_k,
/// the discrete form of the xi-integral with weights already folded in.
class FourierSynthesis {
public:
    FourierSynthesis(std::vector<cplx> nodes, Eigen::VectorXcd weights);

    cplx value(cplx alpha) const;
    /// Values on the axis^2 grid, result(ix, iy).
    Eigen::MatrixXcd grid(const Eigen::VectorXd& axis) const;
    /// Same grid for several weight vectors (one per column) sharing the nodes.
    std::vector<Eigen::MatrixXcd> grids(const Eigen::VectorXd& axis, const Eigen::MatrixXcd& weights) const;

    const std::vector<cplx>& nodes() const noexcept { return nodes_; }

private:
    std::vector<cplx> nodes_;
    Eigen::VectorXcd weights_;
};

/// Radius beyond which the xi-integrand tail, Int_R^inf envelope(r) Omega_w(r) r dr
/// times 2 pi^-1, is below `tolerance`. Throws NumericError if that needs R > max_radius.
double truncation_radius(const std::function<double(double)>& log_envelope, double w, double tolerance = 1e-12,
                         double max_radius = 60.0);

class NqpReconstructor {
public:
    /// `extent` bounds |Re alpha|, |Im alpha| of later evaluations; it sets the
    /// node count needed to resolve the kernel oscillation.
    NqpReconstructor(const StateSpec& state, double w, double extent);

    double value(cplx alpha) const;
    NqpGrid grid(int resolution) const;

    double w() const noexcept { return w_; }
    double extent() const noexcept { return extent_; }
    double truncation_radius() const noexcept { return radius_; }
    int node_count() const noexcept { return static_cast<int>(synthesis_.nodes().size()); }

private:
    double w_;
    double extent_;
    double radius_;
    FourierSynthesis synthesis_;
};

/// Checks Nyquist (spacing <= pi / R_xi, odd resolution), the imaginary
/// residue (< 1e-8) and the normalization (1 +- 1e-4).
NqpGrid reconstruct(const StateSpec& state, double w, double extent, int resolution);

struct GridMoment {
    cplx value;
    double tail_estimate;  // |alpha|^{n+m} |P_Omega| integrated outside the grid
};

/// Riemann-sum moment Int P_Omega alpha*^n alpha^m; throws when the tail
/// estimate exceeds `max_tail`.
GridMoment grid_moment(const NqpGrid& grid, int n, int m, double max_tail = 1e-3);

struct NqpMinimum {
    cplx alpha;
    double value;
};

/// Grid minimum, refined by repeated local subdivision when the grid has an evaluator.
NqpMinimum min_value(const NqpGrid& grid);

}  // namespace nqm
