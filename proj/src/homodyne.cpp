#include "nqm/homodyne.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <nlohmann/json.hpp>

#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/quadrature.hpp"

namespace nqm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr char kMagic[] = "NQMHD1";
constexpr int kStencilHalfWidth = 6;
constexpr std::uint32_t kBootstrapTag = 0x626f6f74;

std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint32_t> stream) {
    std::vector<std::uint32_t> words{std::uint32_t(seed), std::uint32_t(seed >> 32)};
    words.insert(words.end(), stream);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

// Uniform on the open interval (0, 1) from the top 53 bits.
double uniform(std::mt19937_64& rng) { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; }

// Unbiased integer in [0, n) by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return r % n;
}

double filter_w(double b, double w) { return omega_w(b, w); }

// Tabulated inverse CDF with a piecewise-linear density.
class SamplingTable {
public:
    SamplingTable(const QuadratureDensity& density, double theta) {
        constexpr int cells = 8192;
        const double l = density.support_radius();
        h_ = 2.0 * l / cells;
        x0_ = -l;
        pdf_.resize(cells + 1);
        for (int i = 0; i <= cells; ++i) pdf_[i] = density(theta, x0_ + i * h_);
        cdf_.assign(cells + 1, 0.0);
        for (int i = 1; i <= cells; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * h_ * (pdf_[i - 1] + pdf_[i]);
        const double mass = cdf_.back();
        if (std::abs(mass - 1.0) > 1e-8)
            throw NumericError("quadrature density holds mass " + std::to_string(mass) + " on |x| <= " + std::to_string(l) +
                               "; tail truncation exceeds 1e-8");
        for (auto& c : cdf_) c /= mass;
        for (auto& p : pdf_) p /= mass;
    }

    double invert(double u) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cdf_.begin() - 1, 0), cdf_.size() - 2);
        const double r = u - cdf_[k];
        const double p0 = pdf_[k];
        const double slope = (pdf_[k + 1] - p0) / h_;
        // solve p0 t + slope t^2 / 2 = r on the cell
        const double disc = std::max(0.0, p0 * p0 + 2.0 * slope * r);
        const double denom = p0 + std::sqrt(disc);
        const double t = denom > 0.0 ? 2.0 * r / denom : 0.0;
        return x0_ + k * h_ + std::clamp(t, 0.0, h_);
    }

private:
    double x0_ = 0.0, h_ = 0.0;
    std::vector<double> pdf_, cdf_;
};

// Resampled column means of `features` (n x F): one column per bootstrap
// draw, F x resamples. Draw b uses its own stream derived from (seed, b, stream).
Eigen::MatrixXd bootstrap_means(const Eigen::MatrixXd& features, int resamples, std::uint64_t seed, std::uint32_t stream) {
    constexpr int chunk = 25;  // bounds the count matrix to n x chunk
    const Eigen::Index n = features.rows();
    Eigen::MatrixXd out(features.cols(), resamples);
    Eigen::MatrixXd counts(n, chunk);
    for (int start = 0; start < resamples; start += chunk) {
        const int len = std::min(chunk, resamples - start);
        counts.setZero();
        for (int c = 0; c < len; ++c) {
            auto rng = make_rng(seed, {kBootstrapTag, std::uint32_t(start + c), stream});
            for (Eigen::Index i = 0; i < n; ++i) counts(Eigen::Index(bounded(rng, std::uint64_t(n))), c) += 1.0;
        }
        out.middleCols(start, len).noalias() = features.transpose() * counts.leftCols(len) / double(n);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

QuadratureDataset::QuadratureDataset(StateSpec state, std::uint64_t seed, int n_phases, int n_per_phase,
                                     std::vector<QuadratureSample> samples)
    : state_(std::move(state)), seed_(seed), n_phases_(n_phases), n_per_phase_(n_per_phase), samples_(std::move(samples)) {
    if (n_phases <= 0) throw ValidationError("n_phases", "n_phases must be > 0");
    if (n_per_phase <= 0) throw ValidationError("n_per_phase", "n_per_phase must be > 0");
    if (samples_.size() != std::size_t(n_phases) * std::size_t(n_per_phase))
        throw ValidationError("samples", "sample count must equal n_phases * n_per_phase");
    for (int j = 0; j < n_phases; ++j)
        for (int k = 0; k < n_per_phase; ++k)
            if (std::abs(samples_[std::size_t(j) * n_per_phase + k].theta - phase(j)) > 1e-12)
                throw ValidationError("samples", "samples must be phase-major on theta_j = pi j / n_phases");
}

double QuadratureDataset::phase(int j) const { return kPi * j / n_phases_; }

std::vector<double> QuadratureDataset::values(int j) const {
    if (j < 0 || j >= n_phases_) throw ValidationError("phase", "phase index out of range");
    std::vector<double> x(n_per_phase_);
    for (int k = 0; k < n_per_phase_; ++k) x[k] = samples_[std::size_t(j) * n_per_phase_ + k].x;
    return x;
}

QuadratureDataset sample(const StateSpec& state, int n_phases, int n_per_phase, std::uint64_t seed) {
    if (n_phases <= 0) throw ValidationError("n_phases", "n_phases must be > 0");
    if (n_per_phase <= 0) throw ValidationError("n_per_phase", "n_per_phase must be > 0");
    std::vector<QuadratureSample> samples;
    samples.reserve(std::size_t(n_phases) * n_per_phase);
    std::optional<QuadratureDensity> density;
    std::optional<SamplingTable> shared_table;
    if (!state.is_gaussian()) {
        density.emplace(state);
        if (state.is_phase_invariant()) shared_table.emplace(*density, 0.0);
    }
    for (int j = 0; j < n_phases; ++j) {
        const double theta = kPi * j / n_phases;
        auto rng = make_rng(seed, {std::uint32_t(j)});
        if (state.is_gaussian()) {
            const double mu = quadrature_mean(state, theta);
            const double sigma = std::sqrt(quadrature_variance(state, theta));
            for (int k = 0; k < n_per_phase; ++k) {
                const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform(rng));
                samples.push_back({theta, mu + sigma * z});
            }
        } else {
            std::optional<SamplingTable> own;
            if (!shared_table) own.emplace(*density, theta);
            const SamplingTable& table = shared_table ? *shared_table : *own;
            for (int k = 0; k < n_per_phase; ++k) samples.push_back({theta, table.invert(uniform(rng))});
        }
    }
    return QuadratureDataset(state, seed, n_phases, n_per_phase, std::move(samples));
}

// ---------------------------------------------------------------------------
// Empirical characteristic function

EstimateWithError empirical_char(const QuadratureDataset& ds, cplx xi) {
    double b = std::abs(xi);
    if (b == 0.0) return {1.0, 0.0};
    const double amplification = std::exp(0.5 * b * b);
    if (amplification > kMaxAmplification)
        throw ValidationError("xi", "exp(|xi|^2/2) = " + std::to_string(amplification) + " exceeds the amplification limit " +
                                        std::to_string(kMaxAmplification));
    // xi = i b e^{i theta}; theta + pi maps to theta with b -> -b
    double theta = std::fmod(std::arg(xi) - 0.5 * kPi, 2.0 * kPi);
    if (theta < 0.0) theta += 2.0 * kPi;
    if (theta >= kPi) theta -= kPi, b = -b;
    const double spacing = kPi / ds.n_phases();
    int j = static_cast<int>(std::lround(theta / spacing));
    if (j == ds.n_phases()) j = 0, b = -b;
    const auto x = ds.values(j);
    cplx mean = 0.0;
    for (double v : x) mean += std::polar(1.0, b * v);
    mean /= double(x.size());
    const double n = double(x.size());
    const double var = n > 1 ? std::max(0.0, 1.0 - std::norm(mean)) / (n - 1.0) : 1.0;
    return {amplification * mean, amplification * std::sqrt(var), ErrorMethod::Propagated, 0};
}

// ---------------------------------------------------------------------------
// Moments

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Per-sample values y_k(x) = i^-k d^k/db^k [exp(b^2/2) Omega_w(b) exp(i b x)] at b = 0
// from the symmetric stencil; real for every k because the filter is even.
struct StencilFeatures {
    int max_k;
    std::vector<Eigen::MatrixXd> per_phase;  // [phase](sample, k)
};

StencilFeatures stencil_features(const QuadratureDataset& ds, double w, int max_k, double step) {
    if (!(step > 0.0)) throw ValidationError("step", "stencil step must be > 0");
    std::vector<double> points;
    for (int s = -kStencilHalfWidth; s <= kStencilHalfWidth; ++s) points.push_back(s * step);
    const auto weights = fd_weights(0.0, points, max_k);
    std::vector<double> g(kStencilHalfWidth + 1);
    for (int s = 0; s <= kStencilHalfWidth; ++s) g[s] = std::exp(0.5 * s * s * step * step) * filter_w(s * step, w);
    // folded weights: even k pair with cos, odd k with sin
    Eigen::MatrixXd folded = Eigen::MatrixXd::Zero(max_k + 1, kStencilHalfWidth + 1);
    for (int k = 0; k <= max_k; ++k) {
        const double sign = (k % 4 == 0 || k % 4 == 1) ? 1.0 : -1.0;
        folded(k, 0) = k % 2 == 0 ? sign * weights[k][kStencilHalfWidth] * g[0] : 0.0;
        for (int s = 1; s <= kStencilHalfWidth; ++s) folded(k, s) = 2.0 * sign * weights[k][kStencilHalfWidth + s] * g[s];
    }
    StencilFeatures f{max_k, {}};
    Eigen::VectorXd trig(kStencilHalfWidth + 1);
    for (int j = 0; j < ds.n_phases(); ++j) {
        const auto x = ds.values(j);
        Eigen::MatrixXd y(x.size(), max_k + 1);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const cplx step_phase = std::polar(1.0, step * x[i]);
            cplx e = 1.0;
            Eigen::VectorXd c(kStencilHalfWidth + 1), s(kStencilHalfWidth + 1);
            for (int t = 0; t <= kStencilHalfWidth; ++t, e *= step_phase) c(t) = e.real(), s(t) = e.imag();
            for (int k = 0; k <= max_k; ++k) y(i, k) = folded.row(k).dot(k % 2 == 0 ? c : s);
        }
        f.per_phase.push_back(std::move(y));
    }
    return f;
}

// Column means of each phase block: D(j, k).
Eigen::MatrixXd phase_means(const StencilFeatures& f) {
    Eigen::MatrixXd d(f.per_phase.size(), f.max_k + 1);
    for (std::size_t j = 0; j < f.per_phase.size(); ++j) d.row(j) = f.per_phase[j].colwise().mean();
    return d;
}

// Phase means D(j, k) for each of `resamples` bootstrap draws within the phases.
std::vector<Eigen::MatrixXd> bootstrap_phase_means(const StencilFeatures& f, int resamples, std::uint64_t seed) {
    std::vector<Eigen::MatrixXd> out(resamples, Eigen::MatrixXd(f.per_phase.size(), f.max_k + 1));
    for (std::size_t j = 0; j < f.per_phase.size(); ++j) {
        const Eigen::MatrixXd means = bootstrap_means(f.per_phase[j], resamples, seed, std::uint32_t(j));
        for (int b = 0; b < resamples; ++b) out[b].row(j) = means.col(b).transpose();
    }
    return out;
}

// M_nm from phase means D(j, k): Fourier projection on the harmonic n - m.
Eigen::MatrixXcd project(const Eigen::MatrixXd& d, int order) {
    const int phases = static_cast<int>(d.rows());
    Eigen::MatrixXcd m(order + 1, order + 1);
    for (int n = 0; n <= order; ++n)
        for (int k = 0; k <= n; ++k) {
            const int total = n + k;
            cplx sum = 0.0;
            for (int j = 0; j < phases; ++j) sum += d(j, total) * std::polar(1.0, -(n - k) * kPi * j / phases);
            m(n, k) = sum / (binomial(total, n) * phases);
            if (n == k) m(n, k) = m(n, k).real();
            m(k, n) = std::conj(m(n, k));
        }
    m(0, 0) = 1.0;
    return m;
}

void check_estimation_inputs(const QuadratureDataset& ds, double w, int order) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    if (order < 0 || order > 2) throw ValidationError("K", "moment estimation supports orders 0..2 (stencil noise limit)");
    if (ds.n_phases() <= 2 * order)
        throw ValidationError("n_phases", "estimating order " + std::to_string(order) + " needs more than " +
                                              std::to_string(2 * order) + " phases");
}

}  // namespace

MomentEstimate estimate_ncl_moments(const QuadratureDataset& ds, double w, int order, const MomentEstimateOptions& options) {
    check_estimation_inputs(ds, w, order);
    if (options.bootstrap < 0) throw ValidationError("bootstrap", "resample count must be >= 0");
    const auto features = stencil_features(ds, w, 2 * order, options.step);
    const Eigen::MatrixXcd m = project(phase_means(features), order);
    Eigen::MatrixXd err = Eigen::MatrixXd::Zero(order + 1, order + 1);
    const int phases = ds.n_phases();

    if (options.bootstrap == 0) {
        // linear in the phase means: propagate the per-phase sample variances
        Eigen::MatrixXd var(phases, 2 * order + 1);
        for (int j = 0; j < phases; ++j) {
            const auto& y = features.per_phase[j];
            const Eigen::RowVectorXd mean = y.colwise().mean();
            var.row(j) = (y.rowwise() - mean).array().square().colwise().sum() / double(std::max<Eigen::Index>(1, y.rows() - 1)) /
                         double(y.rows());
        }
        for (int n = 0; n <= order; ++n)
            for (int k = 0; k <= n; ++k) {
                const int total = n + k;
                if (total == 0) continue;
                double v = 0.0;
                for (int j = 0; j < phases; ++j) {
                    const cplx a = std::polar(1.0, -(n - k) * kPi * j / phases) / (binomial(total, n) * phases);
                    v += (n == k ? a.real() * a.real() : std::norm(a)) * var(j, total);
                }
                err(n, k) = err(k, n) = std::sqrt(v);
            }
    } else {
        const auto draws = bootstrap_phase_means(features, options.bootstrap, options.seed);
        Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(order + 1, order + 1);
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(order + 1, order + 1);
        for (const auto& d : draws) {
            const Eigen::MatrixXcd mb = project(d, order);
            sum += mb;
            sum_sq += mb.cwiseAbs2();
        }
        const double b = options.bootstrap;
        for (int n = 0; n <= order; ++n)
            for (int k = 0; k <= order; ++k) {
                const cplx mean = sum(n, k) / b;
                err(n, k) = std::sqrt(std::max(0.0, (sum_sq(n, k) / b - std::norm(mean)) * b / std::max(1.0, b - 1.0)));
            }
        err(0, 0) = 0.0;
    }
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged(order + 1, order + 1);
    for (int n = 0; n <= order; ++n)
        for (int k = 0; k <= order; ++k) flagged(n, k) = (n + k > 0) && err(n, k) >= std::abs(m(n, k));
    return {MomentTable::nonclassicality(w, m), err, flagged,
            options.bootstrap == 0 ? ErrorMethod::Propagated : ErrorMethod::Bootstrap, options.bootstrap};
}

EstimateWithError estimate_mandel_q_omega(const QuadratureDataset& ds, double w, int resamples, std::uint64_t seed) {
    check_estimation_inputs(ds, w, 2);
    if (resamples < 2) throw ValidationError("bootstrap", "Q_Omega needs at least 2 bootstrap resamples");
    const auto features = stencil_features(ds, w, 4, MomentEstimateOptions{}.step);
    const auto q_of = [](const Eigen::MatrixXd& d) {
        const double m11 = d.col(2).mean() / 2.0;
        const double m22 = d.col(4).mean() / 6.0;
        return (m22 - m11 * m11) / m11;
    };
    const double q = q_of(phase_means(features));
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& d : bootstrap_phase_means(features, resamples, seed)) {
        const double v = q_of(d);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / resamples;
    const double var = std::max(0.0, sum_sq / resamples - mean * mean) * resamples / (resamples - 1.0);
    return {q, std::sqrt(var), ErrorMethod::Bootstrap, resamples};
}

// ---------------------------------------------------------------------------
// NQP estimate

NqpEstimate estimate_nqp(const QuadratureDataset& ds, double w, double extent, int resolution, int resamples,
                         std::uint64_t seed) {
    if (!(w > 0.0)) throw ValidationError("w", "filter width must be > 0");
    if (!(extent > 0.0)) throw ValidationError("extent", "grid extent must be > 0");
    if (resolution < 3 || resolution % 2 == 0) throw ValidationError("resolution", "resolution must be odd and >= 3");
    if (resamples < 0 || resamples == 1) throw ValidationError("bootstrap", "resample count must be 0 or >= 2");

    // |Phi^(b)| <= exp(b^2/2): truncate where exp(b^2/2) Omega_w(b) b is negligible
    const double radius = truncation_radius([](double b) { return 0.5 * b * b; }, w);
    double amplification = 1.0;
    for (double b = 0.0; b <= radius; b += radius / 2000.0)
        amplification = std::max(amplification, std::exp(0.5 * b * b) * filter_w(b, w));
    if (amplification > kMaxAmplification)
        throw ValidationError("w", "noise amplification max exp(b^2/2) Omega_w(b) = " + std::to_string(amplification) +
                                       " exceeds " + std::to_string(kMaxAmplification) + "; use a smaller width");

    NqpGrid grid;
    grid.w = w;
    grid.extent = extent;
    grid.resolution = resolution;
    grid.truncation_radius = radius;
    if (grid.spacing() > kPi / radius)
        throw ValidationError("resolution", "grid spacing " + std::to_string(grid.spacing()) +
                                                " exceeds the Nyquist bound pi/R = " + std::to_string(kPi / radius));

    double x_max = 0.0;
    for (const auto& s : ds.samples()) x_max = std::max(x_max, std::abs(s.x));
    const double theta_r = radius * (2.0 * std::sqrt(2.0) * extent + x_max);
    const int n_radial = static_cast<int>(std::ceil(0.6 * theta_r + 32.0));
    const GaussLegendre rule(n_radial, 0.0, radius);
    const int phases = ds.n_phases();

    // node (j, r): xi = i b_r e^{i theta_j}; weight 2 pi^-2 (pi/N) w_r b_r exp(b^2/2) Omega_w(b_r) E_j(b_r)
    std::vector<cplx> nodes;
    Eigen::VectorXd radial(n_radial);
    for (int r = 0; r < n_radial; ++r) {
        const double b = rule.nodes[r];
        radial(r) = 2.0 / (kPi * kPi) * (kPi / phases) * rule.weights[r] * b * std::exp(0.5 * b * b) * filter_w(b, w);
    }
    for (int j = 0; j < phases; ++j)
        for (int r = 0; r < n_radial; ++r) nodes.push_back(cplx(0.0, rule.nodes[r]) * std::polar(1.0, ds.phase(j)));

    const int cols = 1 + resamples;
    Eigen::MatrixXcd weights(phases * n_radial, cols);
    for (int j = 0; j < phases; ++j) {
        const auto x = ds.values(j);
        Eigen::MatrixXd z(x.size(), 2 * n_radial);  // cos block, sin block
        for (std::size_t i = 0; i < x.size(); ++i)
            for (int r = 0; r < n_radial; ++r) {
                const double phase = rule.nodes[r] * x[i];
                z(i, r) = std::cos(phase);
                z(i, n_radial + r) = std::sin(phase);
            }
        const auto to_complex = [&](const Eigen::VectorXd& m) {
            return Eigen::VectorXcd((m.head(n_radial).cast<cplx>() + cplx(0.0, 1.0) * m.tail(n_radial).cast<cplx>())
                                        .cwiseProduct(radial.cast<cplx>()));
        };
        weights.block(j * n_radial, 0, n_radial, 1) = to_complex(z.colwise().mean().transpose());
        if (resamples > 0) {
            const Eigen::MatrixXd means = bootstrap_means(z, resamples, seed, std::uint32_t(j));
            for (int b = 0; b < resamples; ++b) weights.block(j * n_radial, 1 + b, n_radial, 1) = to_complex(means.col(b));
        }
    }

    Eigen::VectorXd axis(resolution);
    for (int i = 0; i < resolution; ++i) axis(i) = grid.coordinate(i);
    auto synthesis = std::make_shared<FourierSynthesis>(nodes, weights.col(0));
    const auto grids = synthesis->grids(axis, weights);
    grid.values = grids[0].real();
    grid.imaginary_residue = 0.0;  // real part of the doubled half-plane sum by construction
    grid.evaluator = [synthesis](cplx alpha) { return synthesis->value(alpha).real(); };

    Eigen::MatrixXd err = Eigen::MatrixXd::Zero(resolution, resolution);
    double norm_err = 0.0;
    if (resamples >= 2) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(resolution, resolution);
        Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(resolution, resolution);
        double nsum = 0.0, nsum_sq = 0.0;
        const double cell = grid.spacing() * grid.spacing();
        for (int b = 1; b <= resamples; ++b) {
            const Eigen::MatrixXd v = grids[b].real();
            sum += v;
            sum_sq += v.cwiseAbs2();
            const double nv = v.sum() * cell;
            nsum += nv;
            nsum_sq += nv * nv;
        }
        const double bcount = resamples;
        const Eigen::MatrixXd mean = sum / bcount;
        err = ((sum_sq / bcount - mean.cwiseAbs2()).cwiseMax(0.0) * (bcount / (bcount - 1.0))).cwiseSqrt();
        const double nmean = nsum / bcount;
        norm_err = std::sqrt(std::max(0.0, nsum_sq / bcount - nmean * nmean) * bcount / (bcount - 1.0));
    }
    return {std::move(grid), std::move(err), norm_err, resamples, amplification};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = char((v >> (8 * i)) & 0xff);
    os.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char bytes[8];
    is.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const QuadratureDataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path.string(), "cannot open for writing");
    const nlohmann::json header{{"magic", kMagic},
                                {"seed", ds.seed()},
                                {"state", to_json(ds.state())},
                                {"n_phases", ds.n_phases()},
                                {"n_per_phase", ds.n_per_phase()},
                                {"count", ds.size()},
                                {"layout", "little-endian f64 (theta, x) pairs, phase-major"}};
    const std::string text = header.dump();
    os.write(kMagic, 6);
    put_u64(os, text.size());
    os.write(text.data(), std::streamsize(text.size()));
    for (const auto& s : ds.samples()) {
        put_u64(os, std::bit_cast<std::uint64_t>(s.theta));
        put_u64(os, std::bit_cast<std::uint64_t>(s.x));
    }
    if (!os) throw IoError(path.string(), "write failed");
}

QuadratureDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path.string(), "cannot open for reading");
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, kMagic, 6) != 0) throw IoError(path.string(), "not a quadrature dataset (bad magic)");
    const std::uint64_t length = get_u64(is);
    if (!is || length > (1u << 26)) throw IoError(path.string(), "corrupt header length");
    std::string text(length, '\0');
    is.read(text.data(), std::streamsize(length));
    if (!is) throw IoError(path.string(), "truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string(), std::string("header is not valid JSON: ") + e.what());
    }
    try {
        if (header.at("magic") != kMagic) throw IoError(path.string(), "header magic mismatch");
        const auto count = header.at("count").get<std::uint64_t>();
        const int n_phases = header.at("n_phases").get<int>();
        const int n_per_phase = header.at("n_per_phase").get<int>();
        std::vector<QuadratureSample> samples(count);
        for (auto& s : samples) {
            s.theta = std::bit_cast<double>(get_u64(is));
            s.x = std::bit_cast<double>(get_u64(is));
        }
        if (!is) throw IoError(path.string(), "truncated sample block");
        return QuadratureDataset(state_from_json(header.at("state")), header.at("seed").get<std::uint64_t>(), n_phases,
                                 n_per_phase, std::move(samples));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string(), std::string("malformed header: ") + e.what());
    } catch (const ValidationError& e) {
        throw IoError(path.string(), std::string("inconsistent dataset: ") + e.what());
    }
}

}  // namespace nqm
