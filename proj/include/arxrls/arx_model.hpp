#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "arxrls/types.hpp"

namespace arxrls {

inline constexpr std::size_t kMaxOrder = 10;
inline constexpr double kRootTolerance = 1e-9;

/// A(z) y_k = B(z) u_k + d_k with A(z) = 1 + a_1 z + ... + a_m z^m,
/// B(z) = b_1 z + ... + b_n z^n (z the backward shift) and d_k ~ N(0, noise_std^2).
struct ArxSystem
{
    std::vector<double> a_coeffs;
    std::vector<double> b_coeffs;
    double noise_std = 1.0;

    ModelOrders orders() const { return {a_coeffs.size(), b_coeffs.size()}; }
    std::size_t dim() const { return a_coeffs.size() + b_coeffs.size(); }

    /// [a_1 ... a_m, b_1 ... b_n]
    Vector theta() const;

    /// Finite coefficients, orders within kMaxOrder, noise_std >= 0
    /// (strictly positive unless allow_zero_noise).
    void validate(bool allow_zero_noise = false) const;
};

struct StabilityReport
{
    bool stable = true;
    /// Smallest |z*| over the roots of A(z); +inf when A has no finite roots.
    double min_root_modulus = 0.0;
};

/// Roots of A(z) via the companion matrix of the reversed (monic) polynomial.
/// Stable iff every root satisfies |z*| > 1 + kRootTolerance.
StabilityReport check_stability(std::span<const double> a_coeffs);

struct ZeroSignal
{
};

struct Sinusoid
{
    double amplitude = 1.0;
    double angular_frequency = 1.7;
};

struct ConstantSignal
{
    double level = 1.0;
};

/// Bounded deterministic sequence r_k.
using DeterministicSignal = std::variant<ZeroSignal, Sinusoid, ConstantSignal>;

double deterministic_value(const DeterministicSignal& signal, long k);

enum class NoiseDistribution
{
    gaussian,
    uniform,  // zero mean, same standard deviation, bounded support
};

/// u_k = sum_i input_filter[i] r_{k-i} + sum_i noise_feedthrough_filter[i] e_{k-i}
/// with finite, time-invariant filters of at most truncation_length + 1 taps.
struct SignalGeneratorSpec
{
    DeterministicSignal deterministic = Sinusoid{};
    std::vector<double> input_filter{1.0};
    std::vector<double> noise_feedthrough_filter{1.0};
    double e_std = 1.0;
    NoiseDistribution e_distribution = NoiseDistribution::gaussian;
    /// Moment budget 4*gamma the noise is assumed to satisfy; informational.
    int e_moment_order = 16;
    std::size_t truncation_length = 64;

    void validate() const;

    /// sum |f_i| over both filters after truncation.
    double filter_abs_sum() const;
};

/// Simulated data. y[k-1] holds y_k (k = 1..K), u[k] holds u_k (k = 0..K),
/// d[k-1] holds d_k. Outside the stored range y_k = 0 (k <= 0), u_k = 0 (k < 0).
struct Trajectory
{
    std::vector<double> y;
    std::vector<double> u;
    std::vector<double> d;

    std::size_t horizon() const { return y.size(); }
    bool has_noise_record() const { return d.size() == y.size() && !y.empty(); }

    double output(long k) const
    {
        return (k >= 1 && static_cast<std::size_t>(k) <= y.size()) ? y[static_cast<std::size_t>(k - 1)] : 0.0;
    }
    double input(long k) const
    {
        return (k >= 0 && static_cast<std::size_t>(k) < u.size()) ? u[static_cast<std::size_t>(k)] : 0.0;
    }
};

/// u_0 ... u_K, deterministic in seed.
std::vector<double> generate_input(const SignalGeneratorSpec& spec, std::size_t horizon, std::uint64_t seed);

struct SimulateOptions
{
    /// Permit noise_std == 0. Only meant for deterministic unit tests.
    bool allow_zero_noise = false;
};

/// Draws d_1..d_K from N(0, noise_std^2) and runs the ARX recursion on u
/// (K = u.size() - 1). Throws InvalidInput for unstable systems.
Trajectory simulate(const ArxSystem& system, std::vector<double> u, std::uint64_t seed,
                    SimulateOptions options = {});

/// The ARX recursion for given input and noise records; no randomness.
Trajectory propagate(const ArxSystem& system, std::vector<double> u, std::vector<double> d);

/// phi_k = [-y_{k-1}, ..., -y_{k-m}, u_{k-1}, ..., u_{k-n}], 1 <= k <= K.
Vector build_regressor(const Trajectory& traj, std::size_t k, ModelOrders orders);

/// Writes phi_k into an already sized vector; no bounds check on k.
void fill_regressor(const Trajectory& traj, std::size_t k, ModelOrders orders, Vector& phi);

} // namespace arxrls
