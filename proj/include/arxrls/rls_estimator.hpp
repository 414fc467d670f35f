#pragma once

#include <cstddef>
#include <optional>

#include "arxrls/arx_model.hpp"
#include "arxrls/types.hpp"

namespace arxrls {

inline constexpr double kDefaultP0Scale = 100.0;
inline constexpr double kIllConditionedThreshold = 1e12;

/// Euclidean ball of the given radius centred at the origin.
struct Projection
{
    double radius = 1.0;
};

struct RlsConfig
{
    Matrix P0;
    Vector theta0;
    std::optional<Projection> projection;

    /// theta0 = 0, P0 = p0_scale * I.
    static RlsConfig defaults(std::size_t dim, double p0_scale = kDefaultP0Scale);

    std::size_t dim() const { return static_cast<std::size_t>(theta0.size()); }

    /// P0 symmetric positive definite, dimensions agree, radius > 0.
    void validate() const;
};

struct RlsState
{
    Vector theta_hat;
    Matrix P;
    std::size_t k = 0;
    /// a_k of the most recent update; 1 before the first step.
    double gain = 1.0;
};

RlsState initial_state(const RlsConfig& config);

Matrix p0_inverse(const RlsConfig& config);

/// Returns theta unchanged if ||theta||_2 <= radius, else theta scaled onto the sphere.
Vector project(const Vector& theta_hat, double radius);

/// One step of
///   a_k     = 1 / (1 + phi' P_{k-1} phi)
///   theta_k = theta_{k-1} + a_k P_{k-1} phi (y - phi' theta_{k-1})
///   P_k     = P_{k-1} - a_k P_{k-1} phi phi' P_{k-1}
/// followed by resymmetrization of P_k and, if given, projection of theta_k.
/// Throws InvalidInput on non-finite phi or y; the input state is untouched.
RlsState rls_step(const RlsState& state, const Vector& phi, double y,
                  const std::optional<Projection>& projection = std::nullopt);

/// In-place recursion with a reusable workspace; same arithmetic as rls_step.
class RlsEstimator
{
public:
    explicit RlsEstimator(const RlsConfig& config);
    explicit RlsEstimator(RlsState state, std::optional<Projection> projection = std::nullopt);

    void update(const Vector& phi, double y);

    const RlsState& state() const { return state_; }

private:
    RlsState state_;
    std::optional<Projection> projection_;
    Vector p_phi_;
};

/// Runs the recursion on steps 1..k of a trajectory.
RlsState run_rls(const Trajectory& traj, ModelOrders orders, const RlsConfig& config, std::size_t k);

/// Accumulated sum phi phi' and sum phi y over a data prefix.
class NormalEquations
{
public:
    explicit NormalEquations(std::size_t dim);

    void add(const Vector& phi, double y);

    const Matrix& information() const { return information_; }
    const Vector& moment() const { return moment_; }
    std::size_t count() const { return count_; }

private:
    Matrix information_;
    Vector moment_;
    std::size_t count_ = 0;
};

NormalEquations accumulate_normal_equations(const Trajectory& traj, ModelOrders orders, std::size_t k);

struct BatchEstimate
{
    Vector theta_hat;
    double condition_number = 1.0;
    /// condition_number exceeds kIllConditionedThreshold.
    bool ill_conditioned = false;
};

/// Solves (sum phi phi' + P0^{-1}) theta = sum phi y + P0^{-1} theta0 by
/// direct factorization.
BatchEstimate solve_regularized(const NormalEquations& eqs, const RlsConfig& config);

/// Batch least-squares estimate on steps 1..k; no recursion involved.
BatchEstimate batch_oracle(const Trajectory& traj, ModelOrders orders, const RlsConfig& config, std::size_t k);

/// ||P_k^{-1} - (sum phi phi' + P0^{-1})||_2 / ||sum phi phi' + P0^{-1}||_2 for the
/// state reached after state.k recursion steps on traj.
double woodbury_residual(const RlsState& state, const Trajectory& traj, ModelOrders orders,
                         const RlsConfig& config);

/// Same residual against already accumulated normal equations.
double woodbury_residual(const RlsState& state, const NormalEquations& eqs, const RlsConfig& config);

/// theta_tilde_k = theta_hat_k - theta and L_k = sum phi_l d_l + P0^{-1} theta_tilde_0.
/// The recursion satisfies theta_tilde_k = P_k L_k.
struct ErrorDecomposition
{
    Vector L;
    Vector theta_tilde;
    /// ||theta_tilde - P L||_2 / max(||theta_tilde||_2, ||P L||_2), 0 if both vanish.
    double residual = 0.0;
};

/// Requires the stored noise record; throws DegenerateData when it is missing.
ErrorDecomposition error_decomposition(const RlsState& state, const Trajectory& traj, const ArxSystem& system,
                                       const RlsConfig& config);

/// Same decomposition given noise_sum = sum_{l<=k} phi_l d_l.
ErrorDecomposition error_decomposition(const RlsState& state, const Vector& noise_sum, const Vector& theta,
                                       const RlsConfig& config);

/// Largest |eigenvalue| of a symmetric matrix.
double symmetric_spectral_norm(const Matrix& symmetric);

} // namespace arxrls
