#include "arxrls/quasi_stationary_stats.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Eigenvalues>

namespace arxrls {

namespace {

/// (1/K) sum_{l=1}^{K} a(l) b(l - tau); callers' accessors return 0 off range.
template <class A, class B>
double lagged_mean(std::size_t horizon, int tau, A&& a, B&& b)
{
    double acc = 0.0;
    for (long l = 1; l <= static_cast<long>(horizon); ++l)
    {
        acc += a(l) * b(l - tau);
    }
    return acc / static_cast<double>(horizon);
}

} // namespace

CovarianceTable estimate_covariances(const Trajectory& traj, int tau_max)
{
    const std::size_t horizon = traj.horizon();
    if (tau_max < 0)
    {
        throw InvalidInput("estimate_covariances: tau_max must be non-negative");
    }
    if (horizon == 0 || horizon < 10 * static_cast<std::size_t>(tau_max))
    {
        throw InvalidInput("estimate_covariances: need K >= 10 * tau_max (K = " + std::to_string(horizon) +
                           ", tau_max = " + std::to_string(tau_max) + ")");
    }
    CovarianceTable table;
    table.tau_max = tau_max;
    table.samples = horizon;
    const std::size_t width = 2 * static_cast<std::size_t>(tau_max) + 1;
    table.ryy.resize(width);
    table.ruu.resize(width);
    table.ryu.resize(width);

    const auto y = [&](long k) { return traj.output(k); };
    const auto u = [&](long k) { return traj.input(k); };
    for (int tau = -tau_max; tau <= tau_max; ++tau)
    {
        const auto i = static_cast<std::size_t>(tau + tau_max);
        table.ryy[i] = lagged_mean(horizon, tau, y, y);
        table.ruu[i] = lagged_mean(horizon, tau, u, u);
        table.ryu[i] = lagged_mean(horizon, tau, y, u);
    }
    return table;
}

ExcitationMatrix build_excitation_matrix(const CovarianceTable& table, ModelOrders orders)
{
    const int needed = static_cast<int>(std::max(orders.m, orders.n)) - 1;
    if (table.tau_max < needed)
    {
        throw InvalidInput("build_excitation_matrix: tau_max " + std::to_string(table.tau_max) +
                           " is below max(m, n) - 1 = " + std::to_string(needed));
    }
    const auto m = static_cast<Eigen::Index>(orders.m);
    const auto n = static_cast<Eigen::Index>(orders.n);
    ExcitationMatrix out;
    out.M = Matrix::Zero(m + n, m + n);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        for (Eigen::Index j = 0; j < m; ++j)
        {
            out.M(i, j) = table.Ryy(static_cast<int>(std::abs(i - j)));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
    {
        for (Eigen::Index j = 0; j < n; ++j)
        {
            out.M(m + i, m + j) = table.Ruu(static_cast<int>(std::abs(i - j)));
        }
    }
    // E[-y_{k-i} u_{k-j}] = -R^{yu}_{j-i}
    for (Eigen::Index i = 0; i < m; ++i)
    {
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const double v = -table.Ryu(static_cast<int>(j - i));
            out.M(i, m + j) = v;
            out.M(m + j, i) = v;
        }
    }
    if (out.M.size() > 0)
    {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(out.M, Eigen::EigenvaluesOnly);
        out.min_eig = eig.eigenvalues().minCoeff();
    }
    return out;
}

double default_excitation_threshold(const ExcitationMatrix& excitation)
{
    const auto dim = excitation.M.rows();
    return dim > 0 ? 1e-6 * excitation.M.trace() / static_cast<double>(dim) : 0.0;
}

ExcitationCheck check_persistent_excitation(const ExcitationMatrix& excitation, std::optional<double> eps_pd)
{
    ExcitationCheck out;
    out.min_eig = excitation.min_eig;
    out.threshold = eps_pd.value_or(default_excitation_threshold(excitation));
    out.excited = excitation.M.size() > 0 && excitation.min_eig > out.threshold;
    return out;
}

} // namespace arxrls
