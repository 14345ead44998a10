#pragma once

// Nonclassicality criteria built on moments: filtered and unfiltered Mandel Q,
// quadrature squeezing, and the photon-number moment matrix.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqm/moments.hpp"
#include "nqm/states.hpp"

namespace nqm {

/// A verdict: nonclassical iff value < threshold.
struct CriterionResult {
    std::string name;
    double value;
    double threshold;
    bool nonclassical;
    std::optional<double> w;
    std::string detail;
};

nlohmann::json to_json(const CriterionResult& result);

/// Q_Omega = (M22 - M11^2) / M11; throws for M11 <= 0.
double mandel_q_omega(double m11, double m22);
/// Closed form of Q_Omega for the single-photon-added thermal state.
double mandel_q_spats(double nbar, double w);
/// Unfiltered Q of the same state, (2 nbar^2 - 1)/(2 nbar + 1).
double mandel_q_limit(double nbar);
/// Width above which Q_Omega of the photon-added thermal state is negative;
/// empty for nbar >= sqrt(2)/2.
std::optional<double> min_width_negative_q(double nbar);

/// V + 2 sqrt(2/pi) / w^2
double filtered_quadrature_variance(double variance, double w);
/// Smallest width at which a variance V < 1 shows up as filtered squeezing.
std::optional<double> min_width_squeezing(double variance);

/// Mandel Q of the table's operator (rho for normal tables, rho~ otherwise).
CriterionResult mandel_q_criterion(const MomentTable& table);

/// Minimal quadrature variance of rho~ against 1 + 2 sqrt(2/pi)/w^2; the
/// minimizing phase is reported in `detail`.
CriterionResult squeezing_from_ncl_moments(const MomentTable& ncl);

/// Smallest eigenvalue of D_ij = <a^dag^{i+j} a^{i+j}>, 0 <= i,j < size <= 3.
/// Normal tables test P; nonclassicality tables test P_Omega.
CriterionResult moment_matrix_test(const MomentTable& table, int size);

/// All applicable criteria for a state at width w.
std::vector<CriterionResult> evaluate_criteria(const StateSpec& state, double w);
/// All applicable criteria for a given table.
std::vector<CriterionResult> evaluate_criteria(const MomentTable& table);

struct FigureTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    nlohmann::json metadata;
};

/// Q_Omega against w in [1, 10] for each nbar (default 0, 0.2, ..., 0.8).
FigureTable figure1(std::vector<double> nbars = {0.0, 0.2, 0.4, 0.6, 0.8});
/// w0 against nbar in [0, 0.7], step 0.01.
FigureTable figure2();
/// w_min against V in [0, 0.99], step 0.01.
FigureTable figure3();
FigureTable figure(int number);

}  // namespace nqm
