#include "arxrls/arx_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace arxrls {

namespace {

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::span<const double> truncated(const std::vector<double>& filter, std::size_t truncation_length)
{
    const std::size_t taps = std::min(filter.size(), truncation_length + 1);
    return {filter.data(), taps};
}

} // namespace

Vector ArxSystem::theta() const
{
    Vector theta(static_cast<Eigen::Index>(dim()));
    Eigen::Index i = 0;
    for (double a : a_coeffs)
    {
        theta[i++] = a;
    }
    for (double b : b_coeffs)
    {
        theta[i++] = b;
    }
    return theta;
}

void ArxSystem::validate(bool allow_zero_noise) const
{
    if (a_coeffs.size() > kMaxOrder || b_coeffs.size() > kMaxOrder)
    {
        throw InvalidInput("ARX orders are capped at " + std::to_string(kMaxOrder));
    }
    if (!all_finite(a_coeffs) || !all_finite(b_coeffs))
    {
        throw InvalidInput("ARX coefficients must be finite");
    }
    if (!std::isfinite(noise_std) || noise_std < 0.0 || (noise_std == 0.0 && !allow_zero_noise))
    {
        throw InvalidInput("noise_std must be a positive finite number");
    }
}

StabilityReport check_stability(std::span<const double> a_coeffs)
{
    if (!all_finite(a_coeffs))
    {
        throw InvalidInput("check_stability: non-finite coefficient");
    }
    const auto m = static_cast<Eigen::Index>(a_coeffs.size());
    StabilityReport report;
    report.min_root_modulus = std::numeric_limits<double>::infinity();
    if (m == 0)
    {
        return report;
    }

    // A root z* of A(z) corresponds to an eigenvalue 1/z* of the companion
    // matrix of lambda^m + a_1 lambda^{m-1} + ... + a_m.
    Matrix companion = Matrix::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
    {
        companion(0, j) = -a_coeffs[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index i = 1; i < m; ++i)
    {
        companion(i, i - 1) = 1.0;
    }
    Eigen::EigenSolver<Matrix> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
    {
        throw InvalidInput("check_stability: eigenvalue iteration did not converge");
    }
    double max_lambda = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
    {
        max_lambda = std::max(max_lambda, std::abs(solver.eigenvalues()[i]));
    }
    if (max_lambda > 0.0)
    {
        report.min_root_modulus = 1.0 / max_lambda;
    }
    report.stable = report.min_root_modulus > 1.0 + kRootTolerance;
    return report;
}

double deterministic_value(const DeterministicSignal& signal, long k)
{
    if (k < 0)
    {
        return 0.0;
    }
    struct Visitor
    {
        long k;
        double operator()(const ZeroSignal&) const { return 0.0; }
        double operator()(const Sinusoid& s) const
        {
            return s.amplitude * std::cos(s.angular_frequency * static_cast<double>(k));
        }
        double operator()(const ConstantSignal& c) const { return c.level; }
    };
    return std::visit(Visitor{k}, signal);
}

void SignalGeneratorSpec::validate() const
{
    if (truncation_length == 0)
    {
        throw InvalidInput("truncation_length must be positive");
    }
    if (!std::isfinite(e_std) || e_std < 0.0)
    {
        throw InvalidInput("e_std must be a non-negative finite number");
    }
    if (!all_finite(input_filter) || !all_finite(noise_feedthrough_filter))
    {
        throw InvalidInput("filter coefficients must be finite");
    }
    if (e_moment_order < 1)
    {
        throw InvalidInput("e_moment_order must be a positive integer");
    }
    const bool bounded = std::visit(
        [](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sinusoid>)
            {
                return std::isfinite(s.amplitude) && std::isfinite(s.angular_frequency);
            }
            else if constexpr (std::is_same_v<S, ConstantSignal>)
            {
                return std::isfinite(s.level);
            }
            else
            {
                return true;
            }
        },
        deterministic);
    if (!bounded)
    {
        throw InvalidInput("deterministic input must be bounded");
    }
}

double SignalGeneratorSpec::filter_abs_sum() const
{
    double sum = 0.0;
    for (double f : truncated(input_filter, truncation_length))
    {
        sum += std::abs(f);
    }
    for (double f : truncated(noise_feedthrough_filter, truncation_length))
    {
        sum += std::abs(f);
    }
    return sum;
}

std::vector<double> generate_input(const SignalGeneratorSpec& spec, std::size_t horizon, std::uint64_t seed)
{
    spec.validate();
    if (horizon < 1)
    {
        throw InvalidInput("generate_input: horizon must be at least 1");
    }
    const std::size_t count = horizon + 1;

    std::vector<double> e(count, 0.0);
    if (spec.e_std > 0.0)
    {
        std::mt19937_64 engine(seed);
        if (spec.e_distribution == NoiseDistribution::gaussian)
        {
            std::normal_distribution<double> dist(0.0, spec.e_std);
            for (double& v : e)
            {
                v = dist(engine);
            }
        }
        else
        {
            const double half_width = std::sqrt(3.0) * spec.e_std;
            std::uniform_real_distribution<double> dist(-half_width, half_width);
            for (double& v : e)
            {
                v = dist(engine);
            }
        }
    }

    const auto f3 = truncated(spec.input_filter, spec.truncation_length);
    const auto f4 = truncated(spec.noise_feedthrough_filter, spec.truncation_length);
    std::vector<double> u(count, 0.0);
    for (std::size_t k = 0; k < count; ++k)
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < f3.size() && i <= k; ++i)
        {
            acc += f3[i] * deterministic_value(spec.deterministic, static_cast<long>(k - i));
        }
        for (std::size_t i = 0; i < f4.size() && i <= k; ++i)
        {
            acc += f4[i] * e[k - i];
        }
        u[k] = acc;
    }
    return u;
}

Trajectory propagate(const ArxSystem& system, std::vector<double> u, std::vector<double> d)
{
    if (u.empty() || d.size() + 1 != u.size())
    {
        throw InvalidInput("propagate: need K+1 inputs and K noise samples");
    }
    Trajectory traj;
    traj.u = std::move(u);
    traj.d = std::move(d);
    const std::size_t horizon = traj.d.size();
    traj.y.assign(horizon, 0.0);
    const auto& a = system.a_coeffs;
    const auto& b = system.b_coeffs;
    for (std::size_t k = 1; k <= horizon; ++k)
    {
        double acc = traj.d[k - 1];
        for (std::size_t i = 1; i <= a.size() && i < k; ++i)
        {
            acc -= a[i - 1] * traj.y[k - i - 1];
        }
        for (std::size_t j = 1; j <= b.size() && j <= k; ++j)
        {
            acc += b[j - 1] * traj.u[k - j];
        }
        traj.y[k - 1] = acc;
    }
    return traj;
}

Trajectory simulate(const ArxSystem& system, std::vector<double> u, std::uint64_t seed, SimulateOptions options)
{
    system.validate(options.allow_zero_noise);
    const auto stability = check_stability(system.a_coeffs);
    if (!stability.stable)
    {
        throw InvalidInput("simulate: A(z) has a root with modulus " + std::to_string(stability.min_root_modulus) +
                           " (must lie outside the unit circle)");
    }
    if (u.size() < 2)
    {
        throw InvalidInput("simulate: input must hold u_0..u_K with K >= 1");
    }
    if (!all_finite(u))
    {
        throw InvalidInput("simulate: input must be finite");
    }
    std::vector<double> d(u.size() - 1, 0.0);
    if (system.noise_std > 0.0)
    {
        std::mt19937_64 engine(seed);
        std::normal_distribution<double> dist(0.0, system.noise_std);
        for (double& v : d)
        {
            v = dist(engine);
        }
    }
    return propagate(system, std::move(u), std::move(d));
}

void fill_regressor(const Trajectory& traj, std::size_t k, ModelOrders orders, Vector& phi)
{
    const long kk = static_cast<long>(k);
    for (std::size_t i = 1; i <= orders.m; ++i)
    {
        phi[static_cast<Eigen::Index>(i - 1)] = -traj.output(kk - static_cast<long>(i));
    }
    for (std::size_t j = 1; j <= orders.n; ++j)
    {
        phi[static_cast<Eigen::Index>(orders.m + j - 1)] = traj.input(kk - static_cast<long>(j));
    }
}

Vector build_regressor(const Trajectory& traj, std::size_t k, ModelOrders orders)
{
    if (k < 1 || k > traj.horizon())
    {
        throw InvalidInput("build_regressor: step " + std::to_string(k) + " outside 1.." +
                           std::to_string(traj.horizon()));
    }
    Vector phi(static_cast<Eigen::Index>(orders.dim()));
    fill_regressor(traj, k, orders, phi);
    return phi;
}

} // namespace arxrls
