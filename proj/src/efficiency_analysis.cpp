#include "arxrls/efficiency_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "arxrls/numeric.hpp"
#include "arxrls/rls_estimator.hpp"

namespace arxrls {

namespace {

void require_runs(std::size_t have, std::size_t need, const char* what)
{
    if (have < need)
    {
        throw InvalidInput(std::string(what) + ": needs at least " + std::to_string(need) + " runs, got " +
                           std::to_string(have));
    }
}

void require_grid(std::span<const std::size_t> k_grid)
{
    if (k_grid.empty())
    {
        throw InvalidInput("k_grid must not be empty");
    }
    for (std::size_t g = 0; g < k_grid.size(); ++g)
    {
        if (k_grid[g] == 0 || (g > 0 && k_grid[g] <= k_grid[g - 1]))
        {
            throw InvalidInput("k_grid must be positive and strictly increasing");
        }
    }
}

double mean_power(std::span<const double> values, int power)
{
    return pairwise_mean<double>(values.size(), [&](std::size_t r) { return std::pow(values[r], power); });
}

} // namespace

CrlbEstimate crlb_from_information(std::span<const Matrix> information, std::size_t k, double noise_var)
{
    if (information.empty())
    {
        throw InvalidInput("crlb: no runs");
    }
    if (!(noise_var > 0.0))
    {
        throw InvalidInput("crlb: noise variance must be positive");
    }
    const Matrix mean_info =
        pairwise_mean<Matrix>(information.size(), [&](std::size_t r) -> const Matrix& { return information[r]; });
    const Eigen::LLT<Matrix> llt(mean_info);
    if (llt.info() != Eigen::Success || mean_info.size() == 0)
    {
        throw DegenerateData("crlb: accumulated information matrix is singular (degenerate excitation)");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(mean_info, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 1e-14 * eig.eigenvalues().maxCoeff())
    {
        throw DegenerateData("crlb: accumulated information matrix is singular (degenerate excitation)");
    }
    const Eigen::Index d = mean_info.rows();
    CrlbEstimate out;
    out.sigma_cr = noise_var * llt.solve(Matrix::Identity(d, d));
    out.sigma_cr = 0.5 * (out.sigma_cr + out.sigma_cr.transpose()).eval();
    out.k = k;
    out.runs_used = information.size();
    return out;
}

CrlbEstimate crlb(std::span<const Trajectory> runs, ModelOrders orders, std::size_t k, double noise_var)
{
    require_runs(runs.size(), kMinCrlbRuns, "crlb");
    std::vector<Matrix> information;
    information.reserve(runs.size());
    for (const auto& traj : runs)
    {
        information.push_back(accumulate_normal_equations(traj, orders, k).information());
    }
    return crlb_from_information(information, k, noise_var);
}

Matrix second_moment_matrix(std::span<const Vector> vectors)
{
    if (vectors.empty())
    {
        throw InvalidInput("second_moment_matrix: no samples");
    }
    return pairwise_mean<Matrix>(vectors.size(),
                                 [&](std::size_t r) -> Matrix { return vectors[r] * vectors[r].transpose(); });
}

Matrix empirical_covariance(std::span<const Vector> scaled_errors)
{
    require_runs(scaled_errors.size(), kMinCovarianceRuns, "empirical_covariance");
    return second_moment_matrix(scaled_errors);
}

double standard_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double ks_statistic_standard_normal(std::vector<double> samples)
{
    if (samples.empty())
    {
        throw InvalidInput("ks_statistic: no samples");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const double f = standard_normal_cdf(samples[i]);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

NormalityResult normality_test(std::span<const Vector> scaled_errors, const Vector& direction,
                               const Matrix& model_cov)
{
    require_runs(scaled_errors.size(), kMinNormalityRuns, "normality_test");
    if (std::abs(direction.norm() - 1.0) > 1e-9)
    {
        throw InvalidInput("normality_test: direction must be a unit vector");
    }
    const double variance = direction.dot(model_cov * direction);
    if (!(variance > 0.0))
    {
        throw InvalidInput("normality_test: zero model variance along direction");
    }
    const double sd = std::sqrt(variance);
    std::vector<double> standardized;
    standardized.reserve(scaled_errors.size());
    for (const auto& v : scaled_errors)
    {
        standardized.push_back(direction.dot(v) / sd);
    }
    NormalityResult out;
    out.ks_stat = ks_statistic_standard_normal(std::move(standardized));
    out.critical = kKsCritical01 / std::sqrt(static_cast<double>(scaled_errors.size()));
    out.pass = out.ks_stat < out.critical;
    return out;
}

std::vector<NamedDirection> normality_directions(const Matrix& model_cov)
{
    const Eigen::Index d = model_cov.rows();
    std::vector<NamedDirection> out;
    for (Eigen::Index i = 0; i < d; ++i)
    {
        out.push_back({"axis_" + std::to_string(i + 1), Vector::Unit(d, i)});
    }
    if (d > 0)
    {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(model_cov);
        Vector dominant = eig.eigenvectors().col(d - 1).normalized();
        Eigen::Index arg = 0;
        dominant.cwiseAbs().maxCoeff(&arg);
        if (dominant[arg] < 0.0)
        {
            dominant = -dominant;
        }
        out.push_back({"dominant_eigvec", dominant});
    }
    return out;
}

RateFit fit_power_law(std::span<const double> k, std::span<const double> values)
{
    if (k.size() != values.size() || k.size() < 2)
    {
        throw InvalidInput("fit_power_law: need at least two matching points");
    }
    const std::size_t n = k.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (!(k[i] > 0.0) || !(values[i] > 0.0))
        {
            throw DegenerateData("fit_power_law: non-positive value at point " + std::to_string(i));
        }
        x[i] = std::log(k[i]);
        y[i] = std::log(values[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0))
    {
        throw InvalidInput("fit_power_law: k values must not all coincide");
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.slope_stderr = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

std::vector<Vector> McErrorPanel::scaled(std::size_t g) const
{
    const double s = std::sqrt(static_cast<double>(k_grid.at(g)));
    std::vector<Vector> out;
    out.reserve(errors.at(g).size());
    for (const auto& e : errors[g])
    {
        out.push_back(s * e);
    }
    return out;
}

void McErrorPanel::validate() const
{
    require_grid(k_grid);
    if (errors.size() != k_grid.size())
    {
        throw InvalidInput("McErrorPanel: one error set per grid point required");
    }
    const std::size_t r = runs();
    if (r == 0)
    {
        throw InvalidInput("McErrorPanel: no runs");
    }
    const Eigen::Index d = errors.front().front().size();
    for (const auto& row : errors)
    {
        if (row.size() != r)
        {
            throw InvalidInput("McErrorPanel: ragged run dimension");
        }
        for (const auto& e : row)
        {
            if (e.size() != d)
            {
                throw InvalidInput("McErrorPanel: inconsistent parameter dimension");
            }
        }
    }
}

std::vector<double> error_moments(const McErrorPanel& panel, double exponent)
{
    panel.validate();
    std::vector<double> out;
    out.reserve(panel.k_grid.size());
    for (const auto& row : panel.errors)
    {
        out.push_back(
            pairwise_mean<double>(row.size(), [&](std::size_t r) { return std::pow(row[r].norm(), exponent); }));
    }
    return out;
}

RateFit moment_rate(const McErrorPanel& panel, double exponent)
{
    if (!(exponent > 0.0))
    {
        throw InvalidInput("moment_rate: exponent must be positive");
    }
    if (panel.k_grid.size() < kMinRateGridPoints)
    {
        throw InvalidInput("moment_rate: needs at least " + std::to_string(kMinRateGridPoints) + " grid points");
    }
    const std::vector<double> moments = error_moments(panel, exponent);
    for (double v : moments)
    {
        if (!(v > 0.0))
        {
            throw DegenerateData("moment_rate: vanishing error moment (noiseless data?)");
        }
    }
    std::vector<double> k(panel.k_grid.begin(), panel.k_grid.end());
    return fit_power_law(k, moments);
}

LagSumPanel lag_sum_panel(std::span<const Trajectory> runs, int tau, std::span<const std::size_t> k_grid)
{
    require_grid(k_grid);
    LagSumPanel panel;
    panel.k_grid.assign(k_grid.begin(), k_grid.end());
    panel.lag_sums.assign(k_grid.size(), std::vector<double>(runs.size(), 0.0));
    for (std::size_t r = 0; r < runs.size(); ++r)
    {
        const Trajectory& traj = runs[r];
        if (k_grid.back() > traj.horizon())
        {
            throw InvalidInput("lag_sum_panel: k_grid exceeds trajectory horizon");
        }
        double acc = 0.0;
        std::size_t g = 0;
        for (std::size_t l = 1; l <= k_grid.back(); ++l)
        {
            const long ll = static_cast<long>(l);
            acc += traj.output(ll) * traj.output(ll - tau);
            if (l == k_grid[g])
            {
                panel.lag_sums[g++][r] = acc;
            }
        }
    }
    return panel;
}

std::vector<double> centred_deviations(std::span<const double> lag_sums)
{
    if (lag_sums.empty())
    {
        throw InvalidInput("centred_deviations: no runs");
    }
    const double mean = pairwise_mean<double>(lag_sums.size(), [&](std::size_t r) { return lag_sums[r]; });
    std::vector<double> out(lag_sums.begin(), lag_sums.end());
    for (double& v : out)
    {
        v -= mean;
    }
    return out;
}

std::size_t min_runs_for_deviation_gamma(int gamma)
{
    if (gamma != 1 && gamma != 2)
    {
        throw InvalidInput("deviation moments support gamma in {1, 2}");
    }
    return gamma == 1 ? kMinDeviationRuns : kMinDeviationRunsGamma2;
}

std::vector<double> deviation_moments(const LagSumPanel& panel, int gamma)
{
    require_runs(panel.runs(), min_runs_for_deviation_gamma(gamma), "deviation moments");
    std::vector<double> out;
    for (const auto& sums : panel.lag_sums)
    {
        out.push_back(mean_power(centred_deviations(sums), 2 * gamma));
    }
    return out;
}

RateFit deviation_moment_rate(const LagSumPanel& panel, int gamma)
{
    const std::vector<double> moments = deviation_moments(panel, gamma);
    for (double v : moments)
    {
        if (!(v > 0.0))
        {
            throw DegenerateData("deviation_moment_rate: Y_k vanishes identically (deterministic output?)");
        }
    }
    std::vector<double> k(panel.k_grid.begin(), panel.k_grid.end());
    return fit_power_law(k, moments);
}

RateFit deviation_moment_rate(std::span<const Trajectory> runs, int tau, int gamma,
                              std::span<const std::size_t> k_grid)
{
    require_runs(runs.size(), min_runs_for_deviation_gamma(gamma), "deviation_moment_rate");
    return deviation_moment_rate(lag_sum_panel(runs, tau, k_grid), gamma);
}

TailProbabilities tail_probability(const LagSumPanel& panel, double eps, int gamma)
{
    if (!(eps > 0.0))
    {
        throw InvalidInput("tail_probability: eps must be positive");
    }
    if (gamma < 1)
    {
        throw InvalidInput("tail_probability: gamma must be positive");
    }
    require_runs(panel.runs(), kMinTailRuns, "tail_probability");
    TailProbabilities out;
    out.k_grid = panel.k_grid;
    for (std::size_t g = 0; g < panel.k_grid.size(); ++g)
    {
        const double k = static_cast<double>(panel.k_grid[g]);
        const std::vector<double> dev = centred_deviations(panel.lag_sums[g]);
        std::size_t exceed = 0;
        for (double y : dev)
        {
            if (std::abs(y) / k > eps)
            {
                ++exceed;
            }
        }
        out.probability.push_back(static_cast<double>(exceed) / static_cast<double>(dev.size()));
        out.markov_envelope.push_back(mean_power(dev, 2 * gamma) / std::pow(eps * k, 2 * gamma));
    }
    return out;
}

TailProbabilities tail_probability(std::span<const Trajectory> runs, int tau, double eps,
                                   std::span<const std::size_t> k_grid, int gamma)
{
    require_runs(runs.size(), kMinTailRuns, "tail_probability");
    return tail_probability(lag_sum_panel(runs, tau, k_grid), eps, gamma);
}

double relative_frobenius(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / b.norm();
}

} // namespace arxrls
