#include "arxrls/invariant_check.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

namespace arxrls {

void InvariantReport::merge(const InvariantReport& other)
{
    trajectories += other.trajectories;
    steps += other.steps;
    max_oracle_gap = std::max(max_oracle_gap, other.max_oracle_gap);
    max_oracle_gap_relative = std::max(max_oracle_gap_relative, other.max_oracle_gap_relative);
    max_woodbury_residual = std::max(max_woodbury_residual, other.max_woodbury_residual);
    max_error_decomposition_residual = std::max(max_error_decomposition_residual, other.max_error_decomposition_residual);
    min_p_decrease_eig = std::min(min_p_decrease_eig, other.min_p_decrease_eig);
    min_gain = std::min(min_gain, other.min_gain);
    max_gain = std::max(max_gain, other.max_gain);
    ill_conditioned_steps += other.ill_conditioned_steps;
}

bool InvariantReport::passed(double tolerance) const
{
    return max_oracle_gap <= tolerance && max_woodbury_residual <= tolerance &&
           max_error_decomposition_residual <= tolerance && min_p_decrease_eig >= -1e-10 && min_gain > 0.0 &&
           max_gain <= 1.0;
}

InvariantReport check_trajectory_invariants(const ArxSystem& system, const Trajectory& traj, const RlsConfig& config,
                                            std::size_t k_end)
{
    if (k_end > traj.horizon())
    {
        throw InvalidInput("check_trajectory_invariants: k_end beyond horizon");
    }
    if (!traj.has_noise_record())
    {
        throw DegenerateData("check_trajectory_invariants: trajectory carries no noise record");
    }
    const ModelOrders orders = system.orders();
    const Vector theta = system.theta();
    const auto d = static_cast<Eigen::Index>(orders.dim());

    InvariantReport report;
    report.trajectories = 1;
    RlsEstimator estimator(config);
    NormalEquations eqs(orders.dim());
    Vector noise_sum = Vector::Zero(d);
    Vector phi(d);
    for (std::size_t k = 1; k <= k_end; ++k)
    {
        fill_regressor(traj, k, orders, phi);
        const double y = traj.output(static_cast<long>(k));
        const Matrix p_prev = estimator.state().P;
        estimator.update(phi, y);
        eqs.add(phi, y);
        noise_sum += traj.d[k - 1] * phi;
        const RlsState& state = estimator.state();

        const BatchEstimate batch = solve_regularized(eqs, config);
        const double gap = (state.theta_hat - batch.theta_hat).cwiseAbs().maxCoeff();
        report.max_oracle_gap = std::max(report.max_oracle_gap, gap);
        report.max_oracle_gap_relative =
            std::max(report.max_oracle_gap_relative, gap / (1.0 + batch.theta_hat.cwiseAbs().maxCoeff()));
        report.ill_conditioned_steps += batch.ill_conditioned ? 1 : 0;

        report.max_woodbury_residual = std::max(report.max_woodbury_residual, woodbury_residual(state, eqs, config));
        report.max_error_decomposition_residual = std::max(
            report.max_error_decomposition_residual, error_decomposition(state, noise_sum, theta, config).residual);

        const Matrix decrease = p_prev - state.P;
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (decrease + decrease.transpose()),
                                                        Eigen::EigenvaluesOnly);
        report.min_p_decrease_eig = std::min(report.min_p_decrease_eig, eig.eigenvalues().minCoeff());
        report.min_gain = std::min(report.min_gain, state.gain);
        report.max_gain = std::max(report.max_gain, state.gain);
        ++report.steps;
    }
    return report;
}

} // namespace arxrls
