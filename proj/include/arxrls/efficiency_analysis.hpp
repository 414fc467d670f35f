#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "arxrls/arx_model.hpp"
#include "arxrls/types.hpp"

namespace arxrls {

inline constexpr std::size_t kMinCrlbRuns = 30;
inline constexpr std::size_t kMinCovarianceRuns = 100;
inline constexpr std::size_t kMinNormalityRuns = 500;
inline constexpr std::size_t kMinDeviationRuns = 500;
inline constexpr std::size_t kMinDeviationRunsGamma2 = 2000;
inline constexpr std::size_t kMinTailRuns = 1000;
inline constexpr std::size_t kMinRateGridPoints = 5;
/// Asymptotic Kolmogorov-Smirnov critical value at alpha = 0.01, times sqrt(R).
inline constexpr double kKsCritical01 = 1.63;

/// sigma_CR(k) = noise_var * (sum_{l<=k} E[phi_l phi_l'])^{-1}, expectations
/// replaced by cross-run averages.
struct CrlbEstimate
{
    Matrix sigma_cr;
    std::size_t k = 0;
    std::size_t runs_used = 0;
};

CrlbEstimate crlb(std::span<const Trajectory> runs, ModelOrders orders, std::size_t k, double noise_var);

/// Same bound from per-run information matrices sum_{l<=k} phi_l phi_l'.
CrlbEstimate crlb_from_information(std::span<const Matrix> information, std::size_t k, double noise_var);

/// (1/R) sum_r v_r v_r' (no centring). Requires R >= kMinCovarianceRuns.
Matrix empirical_covariance(std::span<const Vector> scaled_errors);

/// Same estimator without the minimum-run precondition; used by tests and
/// small diagnostic runs.
Matrix second_moment_matrix(std::span<const Vector> vectors);

/// sup_x |F_R(x) - Phi(x)| for the empirical CDF of the samples.
double ks_statistic_standard_normal(std::vector<double> samples);

double standard_normal_cdf(double x);

struct NormalityResult
{
    double ks_stat = 0.0;
    double critical = 0.0;
    bool pass = false;
};

/// Projects each scaled error on `direction`, standardizes by
/// sqrt(direction' model_cov direction) and runs a one-sample KS test against
/// N(0, 1) at alpha = 0.01. `direction` must have unit norm; R >= kMinNormalityRuns.
NormalityResult normality_test(std::span<const Vector> scaled_errors, const Vector& direction,
                               const Matrix& model_cov);

struct NamedDirection
{
    std::string name;
    Vector direction;
};

/// Coordinate axes followed by the dominant eigenvector of model_cov.
std::vector<NamedDirection> normality_directions(const Matrix& model_cov);

struct RateFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
};

/// OLS of log(values) on log(k). All values must be positive.
RateFit fit_power_law(std::span<const double> k, std::span<const double> values);

/// errors[g][r] = theta_tilde at k_grid[g] for run r.
struct McErrorPanel
{
    std::vector<std::size_t> k_grid;
    std::vector<std::vector<Vector>> errors;

    std::size_t runs() const { return errors.empty() ? 0 : errors.front().size(); }

    /// sqrt(k) * theta_tilde at grid index g.
    std::vector<Vector> scaled(std::size_t g) const;

    /// Strictly increasing grid and consistent runs x grid x dim shape.
    void validate() const;
};

/// Cross-run mean of ||theta_tilde||^exponent at each grid point.
std::vector<double> error_moments(const McErrorPanel& panel, double exponent);

/// Log-log fit of error_moments(panel, exponent) against k. Requires at least
/// kMinRateGridPoints grid points and no vanishing moment.
RateFit moment_rate(const McErrorPanel& panel, double exponent);

/// lag_sums[g][r] = sum_{l=1}^{k_g} y_l y_{l-tau} for run r.
struct LagSumPanel
{
    std::vector<std::size_t> k_grid;
    std::vector<std::vector<double>> lag_sums;

    std::size_t runs() const { return lag_sums.empty() ? 0 : lag_sums.front().size(); }
};

LagSumPanel lag_sum_panel(std::span<const Trajectory> runs, int tau, std::span<const std::size_t> k_grid);

/// Y_k for each run, with E[y_l y_{l-tau}] replaced by its cross-run mean;
/// since the centring is linear this is the lag sum minus its cross-run mean.
std::vector<double> centred_deviations(std::span<const double> lag_sums);

/// Cross-run mean of Y_k^{2 gamma} at each grid point.
std::vector<double> deviation_moments(const LagSumPanel& panel, int gamma);

std::size_t min_runs_for_deviation_gamma(int gamma);

/// Log-log slope of E[Y_k^{2 gamma}] against k; gamma in {1, 2}.
RateFit deviation_moment_rate(std::span<const Trajectory> runs, int tau, int gamma,
                              std::span<const std::size_t> k_grid);
RateFit deviation_moment_rate(const LagSumPanel& panel, int gamma);

struct TailProbabilities
{
    std::vector<std::size_t> k_grid;
    /// Fraction of runs with |Y_k| / k > eps.
    std::vector<double> probability;
    /// E[Y_k^{2 gamma}] / (eps k)^{2 gamma}.
    std::vector<double> markov_envelope;
};

TailProbabilities tail_probability(std::span<const Trajectory> runs, int tau, double eps,
                                   std::span<const std::size_t> k_grid, int gamma = 1);
TailProbabilities tail_probability(const LagSumPanel& panel, double eps, int gamma = 1);

/// ||a - b||_F / ||b||_F
double relative_frobenius(const Matrix& a, const Matrix& b);

} // namespace arxrls
