#include "nqm/nqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/quadrature.hpp"

namespace nqm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBlock = 2048;  // nodes per GEMM block, bounds the scratch size

double log_filter(double rho, double w) {
    return FilterModel::shipped().evaluator().log_value(rho * rho / (w * w));
}

int round_up_even(double x) {
    const int n = static_cast<int>(std::ceil(x));
    return n + (n % 2);
}

}  // namespace

double NqpGrid::normalization() const { return values.sum() * spacing() * spacing(); }

// ---------------------------------------------------------------------------
// FourierSynthesis

FourierSynthesis::FourierSynthesis(std::vector<cplx> nodes, Eigen::VectorXcd weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (static_cast<Eigen::Index>(nodes_.size()) != weights_.size())
        throw ValidationError("weights", "node and weight counts differ");
}

cplx FourierSynthesis::value(cplx alpha) const {
    cplx sum = 0.0;
    for (size_t k = 0; k < nodes_.size(); ++k) {
        const double phase = 2.0 * (alpha.imag() * nodes_[k].real() - alpha.real() * nodes_[k].imag());
        sum += weights_(k) * cplx(std::cos(phase), std::sin(phase));
    }
    return sum;
}

Eigen::MatrixXcd FourierSynthesis::grid(const Eigen::VectorXd& axis) const {
    Eigen::MatrixXcd w(weights_.size(), 1);
    w.col(0) = weights_;
    return grids(axis, w).front();
}

std::vector<Eigen::MatrixXcd> FourierSynthesis::grids(const Eigen::VectorXd& axis, const Eigen::MatrixXcd& weights) const {
    const int r = static_cast<int>(axis.size());
    const int n = static_cast<int>(nodes_.size());
    if (weights.rows() != n) throw ValidationError("weights", "weight rows must match the node count");
    std::vector<Eigen::MatrixXcd> out(weights.cols(), Eigen::MatrixXcd::Zero(r, r));
    for (int start = 0; start < n; start += kBlock) {
        const int len = std::min(kBlock, n - start);
        Eigen::MatrixXcd ex(r, len), ey(len, r);
        for (int k = 0; k < len; ++k) {
            const cplx xi = nodes_[start + k];
            for (int i = 0; i < r; ++i) {
                ex(i, k) = std::polar(1.0, -2.0 * axis(i) * xi.imag());
                ey(k, i) = std::polar(1.0, 2.0 * axis(i) * xi.real());
            }
        }
        for (Eigen::Index b = 0; b < weights.cols(); ++b)
            out[b].noalias() += ex * (weights.col(b).segment(start, len).asDiagonal() * ey);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Truncation

double truncation_radius(const std::function<double(double)>& log_envelope, double w, double tolerance,
                         double max_radius) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    const double step = std::min(0.05, w / 50.0);
    std::vector<double> radii, log_g;
    // (2/pi) r envelope(r) Omega_w(r): the xi-integrand magnitude after the angular integral
    for (double r = 0.0;; r += step) {
        if (r > max_radius)
            throw NumericError("xi-integrand tail does not fall below " + std::to_string(tolerance) + " within |xi| <= " +
                                   std::to_string(max_radius) + " at w = " + std::to_string(w),
                               "w");
        const double lg = r == 0.0 ? -std::numeric_limits<double>::infinity()
                                   : std::log(2.0 / kPi * r) + log_envelope(r) + log_filter(r, w);
        radii.push_back(r);
        log_g.push_back(lg);
        const size_t k = log_g.size();
        if (k > 3 && lg < -80.0 && lg < log_g[k - 2] && log_g[k - 2] < log_g[k - 3]) break;
    }
    double tail = 0.0;
    for (size_t k = radii.size() - 1; k > 0; --k) {
        const double piece = 0.5 * step * (std::exp(log_g[k]) + std::exp(log_g[k - 1]));
        if (tail + piece > tolerance) return radii[k];
        tail += piece;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// NqpReconstructor

namespace {

// Angular bandwidth of Phi on the circle |xi| = r, in harmonics of the angle.
double state_bandwidth(const StateSpec& state, double r) {
    const double mean = std::abs(normal_moment(state, 0, 1));
    const double pair = state.is_gaussian() ? std::abs(normal_moment(state, 0, 2)) : 0.0;
    double extra = 2.0 * mean * r;
    if (pair > 0.0) extra += 4.0 * std::sqrt(60.0 * pair * r * r) + 2.0 * pair * r * r;
    if (std::holds_alternative<FockVector>(state.kind()))
        extra += 2.0 * std::get<FockVector>(state.kind()).amplitudes.size();
    return extra;
}

FourierSynthesis polar_synthesis(const StateSpec& state, double w, double radius, double extent) {
    const double theta = 2.0 * std::sqrt(2.0) * extent * radius;
    const int n_radial = static_cast<int>(std::ceil(0.6 * theta + 48.0));
    const int n_angle = round_up_even(1.1 * theta + state_bandwidth(state, radius) + 40.0);
    const GaussLegendre rule(n_radial, 0.0, radius);
    const CharacteristicFunction phi(state);
    std::vector<cplx> nodes;
    nodes.reserve(size_t(n_radial) * n_angle);
    Eigen::VectorXcd weights(n_radial * n_angle);
    const double dpsi = 2.0 * kPi / n_angle;
    int k = 0;
    for (int i = 0; i < n_radial; ++i) {
        const double rho = rule.nodes[i];
        const double radial = rule.weights[i] * rho * dpsi * std::exp(log_filter(rho, w)) / (kPi * kPi);
        for (int j = 0; j < n_angle; ++j) {
            const cplx xi = std::polar(rho, j * dpsi);
            nodes.push_back(xi);
            weights(k++) = radial * phi(xi);
        }
    }
    return FourierSynthesis(std::move(nodes), std::move(weights));
}

}  // namespace

NqpReconstructor::NqpReconstructor(const StateSpec& state, double w, double extent)
    : w_(w),
      extent_(extent),
      radius_([&] {
          if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
          if (!(extent > 0.0)) throw ValidationError("extent", "grid extent must be > 0");
          const CharacteristicFunction phi(state);
          return nqm::truncation_radius([&](double r) { return std::log(phi.envelope(r)); }, w);
      }()),
      synthesis_(polar_synthesis(state, w, radius_, extent)) {}

double NqpReconstructor::value(cplx alpha) const { return synthesis_.value(alpha).real(); }

NqpGrid NqpReconstructor::grid(int resolution) const {
    if (resolution < 3 || resolution % 2 == 0)
        throw ValidationError("resolution", "resolution must be odd and >= 3");
    NqpGrid g;
    g.w = w_;
    g.extent = extent_;
    g.resolution = resolution;
    g.truncation_radius = radius_;
    if (g.spacing() > kPi / radius_)
        throw ValidationError("resolution", "grid spacing " + std::to_string(g.spacing()) + " exceeds the Nyquist bound pi/R = " +
                                                std::to_string(kPi / radius_) + "; use resolution >= " +
                                                std::to_string(int(std::ceil(2.0 * extent_ * radius_ / kPi)) + 2));
    Eigen::VectorXd axis(resolution);
    for (int i = 0; i < resolution; ++i) axis(i) = g.coordinate(i);
    const Eigen::MatrixXcd p = synthesis_.grid(axis);
    g.values = p.real();
    g.imaginary_residue = p.imag().cwiseAbs().maxCoeff();
    return g;
}

namespace {

// Evaluation at arbitrary alpha: node sets are built for growing extents on demand.
class WideEvaluator {
public:
    WideEvaluator(StateSpec state, double w, double radius, double extent)
        : state_(std::move(state)), w_(w), radius_(radius), extent_(extent) {}

    double operator()(cplx alpha) {
        const double reach = std::max(std::abs(alpha.real()), std::abs(alpha.imag()));
        int level = 0;
        while (extent_ * (1 << level) < reach) ++level;
        std::lock_guard lock(mutex_);
        while (int(levels_.size()) <= level)
            levels_.push_back(std::make_unique<FourierSynthesis>(
                polar_synthesis(state_, w_, radius_, extent_ * (1 << levels_.size()))));
        return levels_[level]->value(alpha).real();
    }

private:
    StateSpec state_;
    double w_, radius_, extent_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<FourierSynthesis>> levels_;
};

}  // namespace

NqpGrid reconstruct(const StateSpec& state, double w, double extent, int resolution) {
    const NqpReconstructor rec(state, w, extent);
    NqpGrid g = rec.grid(resolution);
    if (g.imaginary_residue > 1e-8)
        throw NumericError("imaginary residue " + std::to_string(g.imaginary_residue) + " exceeds 1e-8");
    const double norm = g.normalization();
    if (std::abs(norm - 1.0) > 1e-4)
        throw NumericError("grid normalization " + std::to_string(norm) + " differs from 1 by more than 1e-4; enlarge the extent",
                           "extent");
    auto wide = std::make_shared<WideEvaluator>(state, w, rec.truncation_radius(), extent);
    g.evaluator = [wide](cplx alpha) { return (*wide)(alpha); };
    return g;
}

// ---------------------------------------------------------------------------
// Moments and minimum

namespace {

// Int_{|alpha| > extent} |alpha|^{order} |P| d^2alpha from ring maxima on 16
// rays. Values below the reconstruction accuracy (the xi-tail tolerance) are
// indistinguishable from zero and end the scan.
double tail_from_evaluator(const NqpGrid& g, int order) {
    constexpr int rays = 16;
    constexpr double floor = 1e-12;
    const double a = g.extent;
    const double dr = a / 4.0;
    double tail = 0.0, previous = 0.0;
    for (int k = 0; k <= 12; ++k) {
        const double r = a + k * dr;
        double h = 0.0;
        for (int j = 0; j < rays; ++j) h = std::max(h, std::abs(g.evaluator(std::polar(r, 2.0 * kPi * j / rays))));
        const double f = 2.0 * kPi * std::pow(r, order + 1) * h;
        if (k > 0) tail += 0.5 * dr * (f + previous);
        if (h < floor) return tail;
        previous = f;
    }
    // still above the floor at four extents: the outer part is unresolved
    return std::numeric_limits<double>::infinity();
}

// Outer two cell rows as a proxy when only sampled values exist.
double tail_from_border(const NqpGrid& g, int order) {
    const int r = g.resolution;
    const double d2 = g.spacing() * g.spacing();
    double tail = 0.0;
    for (int ix = 0; ix < r; ++ix)
        for (int iy = 0; iy < r; ++iy) {
            const int edge = std::min({ix, iy, r - 1 - ix, r - 1 - iy});
            if (edge < 2) tail += std::pow(std::abs(g.alpha(ix, iy)), order) * std::abs(g.values(ix, iy)) * d2;
        }
    return tail;
}

}  // namespace

GridMoment grid_moment(const NqpGrid& grid, int n, int m, double max_tail) {
    if (n < 0 || m < 0) throw ValidationError("order", "moment orders must be >= 0");
    if (grid.values.rows() != grid.resolution) throw ValidationError("grid", "grid has no values");
    cplx sum = 0.0;
    for (int ix = 0; ix < grid.resolution; ++ix)
        for (int iy = 0; iy < grid.resolution; ++iy) {
            const cplx a = grid.alpha(ix, iy);
            sum += grid.values(ix, iy) * std::pow(std::conj(a), n) * std::pow(a, m);
        }
    const double tail = grid.evaluator ? tail_from_evaluator(grid, n + m) : tail_from_border(grid, n + m);
    if (!(tail <= max_tail))
        throw ValidationError("extent", "grid extent " + std::to_string(grid.extent) + " leaves a tail estimate " +
                                            std::to_string(tail) + " for moment (" + std::to_string(n) + "," +
                                            std::to_string(m) + ")");
    return {sum * grid.spacing() * grid.spacing(), tail};
}

NqpMinimum min_value(const NqpGrid& grid) {
    Eigen::Index ix = 0, iy = 0;
    double best = grid.values.minCoeff(&ix, &iy);
    cplx where = grid.alpha(int(ix), int(iy));
    if (!grid.evaluator) return {where, best};
    double half = grid.spacing();
    for (int level = 0; level < 5; ++level) {
        const cplx center = where;
        for (int i = -4; i <= 4; ++i)
            for (int j = -4; j <= 4; ++j) {
                const cplx a = center + cplx(i, j) * (half / 4.0);
                if (std::max(std::abs(a.real()), std::abs(a.imag())) > grid.extent) continue;
                const double v = grid.evaluator(a);
                if (v < best) best = v, where = a;
            }
        half /= 4.0;
    }
    return {where, best};
}

}  // namespace nqm
