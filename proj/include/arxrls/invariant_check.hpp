#pragma once

#include <cstddef>
#include <limits>

#include "arxrls/arx_model.hpp"
#include "arxrls/rls_estimator.hpp"

namespace arxrls {

inline constexpr double kIdentityTolerance = 1e-8;

/// Worst-case algebraic residuals observed while running the recursion,
/// evaluated at every step.
struct InvariantReport
{
    std::size_t trajectories = 0;
    std::size_t steps = 0;
    /// max_k ||theta_rls - theta_batch||_inf
    double max_oracle_gap = 0.0;
    /// max_k ||theta_rls - theta_batch||_inf / (1 + ||theta_batch||_inf)
    double max_oracle_gap_relative = 0.0;
    double max_woodbury_residual = 0.0;
    double max_error_decomposition_residual = 0.0;
    /// Smallest eigenvalue of P_{k-1} - P_k seen (should be >= -1e-10).
    double min_p_decrease_eig = std::numeric_limits<double>::infinity();
    double min_gain = std::numeric_limits<double>::infinity();
    double max_gain = 0.0;
    std::size_t ill_conditioned_steps = 0;

    void merge(const InvariantReport& other);

    bool passed(double tolerance = kIdentityTolerance) const;
};

/// Runs steps 1..k_end of the recursion on traj (system supplies theta and
/// orders) and checks oracle equivalence, the Woodbury form of P_k, the error
/// representation theta_tilde = P L, monotonicity of P and the gain range.
InvariantReport check_trajectory_invariants(const ArxSystem& system, const Trajectory& traj,
                                            const RlsConfig& config, std::size_t k_end);

} // namespace arxrls
