#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "arxrls/arx_model.hpp"
#include "arxrls/efficiency_analysis.hpp"
#include "support/random_systems.hpp"

using namespace arxrls;

namespace {

Trajectory make_trajectory(std::vector<double> y, std::vector<double> u)
{
    Trajectory t;
    t.y = std::move(y);
    t.u = std::move(u);
    return t;
}

SignalGeneratorSpec white_noise_spec()
{
    SignalGeneratorSpec spec;
    spec.deterministic = ZeroSignal{};
    spec.input_filter = {0.0};
    spec.noise_feedthrough_filter = {1.0};
    spec.e_std = 1.0;
    return spec;
}

} // namespace

TEST(Stability, EmptyPolynomialIsStable)
{
    const StabilityReport r = check_stability(std::vector<double>{});
    EXPECT_TRUE(r.stable);
    EXPECT_TRUE(std::isinf(r.min_root_modulus));
}

TEST(Stability, FirstOrderRootAtTwo)
{
    const StabilityReport r = check_stability(std::vector<double>{-0.5});
    EXPECT_TRUE(r.stable);
    EXPECT_NEAR(r.min_root_modulus, 2.0, 1e-12);
}

TEST(Stability, UnitRootIsUnstable)
{
    const StabilityReport r = check_stability(std::vector<double>{-1.0});
    EXPECT_FALSE(r.stable);
    EXPECT_NEAR(r.min_root_modulus, 1.0, 1e-12);
}

TEST(Stability, QuadraticMatchesClosedForm)
{
    // 1 - 1.5 z + 0.56 z^2 has zeros (1.5 +- 0.1) / 1.12
    const StabilityReport r = check_stability(std::vector<double>{-1.5, 0.56});
    EXPECT_TRUE(r.stable);
    EXPECT_NEAR(r.min_root_modulus, 1.4 / 1.12, 1e-10);

    // complex pair: 1 + 0.5 z^2 has |z| = sqrt(2)
    const StabilityReport c = check_stability(std::vector<double>{0.0, 0.5});
    EXPECT_TRUE(c.stable);
    EXPECT_NEAR(c.min_root_modulus, std::sqrt(2.0), 1e-10);

    // 1 - 2.5 z + z^2 has a zero at 0.5
    EXPECT_FALSE(check_stability(std::vector<double>{-2.5, 1.0}).stable);
}

TEST(Stability, NonFiniteCoefficientRejected)
{
    EXPECT_THROW(check_stability(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
    EXPECT_THROW(check_stability(std::vector<double>{0.1, std::numeric_limits<double>::infinity()}), InvalidInput);
}

TEST(GenerateInput, ZeroSignalWithoutFeedthroughIsZero)
{
    SignalGeneratorSpec spec;
    spec.deterministic = ZeroSignal{};
    spec.input_filter = {1.0};
    spec.noise_feedthrough_filter = {0.0};
    for (std::uint64_t seed : {1u, 2u, 99u})
    {
        const auto u = generate_input(spec, 200, seed);
        ASSERT_EQ(u.size(), 201u);
        for (double v : u)
        {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(GenerateInput, ConstantPassthrough)
{
    SignalGeneratorSpec spec;
    spec.deterministic = ConstantSignal{1.0};
    spec.input_filter = {1.0};
    spec.noise_feedthrough_filter = {0.0};
    for (double v : generate_input(spec, 100, 5))
    {
        EXPECT_EQ(v, 1.0);
    }
}

TEST(GenerateInput, WhiteNoiseSampleVariance)
{
    const auto u = generate_input(white_noise_spec(), 100000, 12345);
    double mean = 0.0;
    for (double v : u)
    {
        mean += v;
    }
    mean /= static_cast<double>(u.size());
    double var = 0.0;
    for (double v : u)
    {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(u.size() - 1);
    EXPECT_NEAR(var, 1.0, 0.02);
    EXPECT_NEAR(mean, 0.0, 0.02);
}

TEST(GenerateInput, UniformNoiseHasBoundedSupportAndUnitVariance)
{
    SignalGeneratorSpec spec = white_noise_spec();
    spec.e_distribution = NoiseDistribution::uniform;
    const auto u = generate_input(spec, 100000, 7);
    double sq = 0.0;
    for (double v : u)
    {
        EXPECT_LE(std::abs(v), std::sqrt(3.0) + 1e-12);
        sq += v * v;
    }
    EXPECT_NEAR(sq / static_cast<double>(u.size()), 1.0, 0.02);
}

TEST(GenerateInput, FiltersConvolveTheSameInnovations)
{
    const auto e = generate_input(white_noise_spec(), 300, 77);

    SignalGeneratorSpec spec;
    spec.deterministic = Sinusoid{2.0, 0.3};
    spec.input_filter = {1.0, -0.25};
    spec.noise_feedthrough_filter = {1.0, 0.5, 0.125};
    const auto u = generate_input(spec, 300, 77);

    auto r = [](long k) { return k < 0 ? 0.0 : 2.0 * std::cos(0.3 * static_cast<double>(k)); };
    auto ek = [&](long k) { return k < 0 ? 0.0 : e[static_cast<std::size_t>(k)]; };
    for (long k = 0; k <= 300; ++k)
    {
        const double expected = r(k) - 0.25 * r(k - 1) + ek(k) + 0.5 * ek(k - 1) + 0.125 * ek(k - 2);
        EXPECT_NEAR(u[static_cast<std::size_t>(k)], expected, 1e-12) << "k=" << k;
    }
}

TEST(GenerateInput, TruncatesLongFilters)
{
    SignalGeneratorSpec spec;
    spec.deterministic = ConstantSignal{1.0};
    spec.input_filter = std::vector<double>(10, 1.0);
    spec.noise_feedthrough_filter = {0.0};
    spec.truncation_length = 3;
    const auto u = generate_input(spec, 20, 1);
    EXPECT_EQ(u[20], 4.0);
    EXPECT_DOUBLE_EQ(spec.filter_abs_sum(), 4.0);
}

TEST(GenerateInput, DeterministicInSeed)
{
    const SignalGeneratorSpec spec;
    EXPECT_EQ(generate_input(spec, 500, 3), generate_input(spec, 500, 3));
    EXPECT_NE(generate_input(spec, 500, 3), generate_input(spec, 500, 4));
}

TEST(Simulate, PureDelayWithoutNoise)
{
    const ArxSystem sys{{}, {1.0}, 0.0};
    const auto u = generate_input(white_noise_spec(), 50, 9);
    const Trajectory t = simulate(sys, u, 1, {.allow_zero_noise = true});
    ASSERT_EQ(t.horizon(), 50u);
    for (long k = 1; k <= 50; ++k)
    {
        EXPECT_EQ(t.output(k), u[static_cast<std::size_t>(k - 1)]);
    }
}

TEST(Simulate, ZeroDynamicsWithoutInputOrNoise)
{
    const ArxSystem sys{{-0.5}, {}, 0.0};
    const Trajectory t = simulate(sys, std::vector<double>(101, 3.0), 1, {.allow_zero_noise = true});
    for (double y : t.y)
    {
        EXPECT_EQ(y, 0.0);
    }
}

TEST(Simulate, StepResponseApproachesFixedPoint)
{
    const ArxSystem sys{{-0.5}, {1.0}, 0.0};
    const Trajectory t = simulate(sys, std::vector<double>(61, 1.0), 1, {.allow_zero_noise = true});
    for (long k = 1; k <= 60; ++k)
    {
        EXPECT_NEAR(t.output(k), 2.0 * (1.0 - std::pow(0.5, static_cast<double>(k))), 1e-14);
    }
    EXPECT_NEAR(t.output(60), 2.0, 1e-15);
}

TEST(Simulate, RecursionHoldsAndReplaysBitExactly)
{
    for (std::uint64_t s = 0; s < 10; ++s)
    {
        const ArxSystem sys = test_support::random_stable_system(s);
        const Trajectory t = simulate(sys, generate_input(SignalGeneratorSpec{}, 400, s), 100 + s);
        ASSERT_TRUE(t.has_noise_record());
        for (long k = 1; k <= 400; ++k)
        {
            double rhs = t.d[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = 1; i <= sys.a_coeffs.size(); ++i)
            {
                rhs -= sys.a_coeffs[i - 1] * t.output(k - static_cast<long>(i));
            }
            for (std::size_t j = 1; j <= sys.b_coeffs.size(); ++j)
            {
                rhs += sys.b_coeffs[j - 1] * t.input(k - static_cast<long>(j));
            }
            EXPECT_NEAR(t.output(k), rhs, 1e-12 * (1.0 + std::abs(rhs)));
        }
        const Trajectory replay = propagate(sys, t.u, t.d);
        EXPECT_EQ(replay.y, t.y);
    }
}

TEST(Simulate, RefusesUnstableSystemsAndZeroNoise)
{
    const std::vector<double> u(11, 1.0);
    EXPECT_THROW(simulate(ArxSystem{{-1.0}, {1.0}, 0.5}, u, 1), InvalidInput);
    EXPECT_THROW(simulate(ArxSystem{{-0.5}, {1.0}, 0.0}, u, 1), InvalidInput);
    EXPECT_THROW(simulate(ArxSystem{{-0.5}, {1.0}, -1.0}, u, 1, {.allow_zero_noise = true}), InvalidInput);
    EXPECT_THROW(simulate(ArxSystem{{-0.5}, {1.0}, 0.5}, {1.0, std::nan("")}, 1), InvalidInput);
}

TEST(Simulate, NoiseHasRequestedVariance)
{
    const ArxSystem sys{{-0.5}, {1.0}, 0.5};
    const Trajectory t = simulate(sys, std::vector<double>(100001, 0.0), 4);
    double sq = 0.0;
    for (double d : t.d)
    {
        sq += d * d;
    }
    EXPECT_NEAR(sq / static_cast<double>(t.d.size()), 0.25, 0.25 * 0.02);
}

TEST(Simulate, BoundedOutputOverLongHorizon)
{
    const ArxSystem sys = test_support::random_stable_system(42);
    const Trajectory t = simulate(sys, generate_input(SignalGeneratorSpec{}, 10000, 1), 2);
    double max_u = 0.0;
    double max_d = 0.0;
    for (double v : t.u)
    {
        max_u = std::max(max_u, std::abs(v));
    }
    for (double v : t.d)
    {
        max_d = std::max(max_d, std::abs(v));
    }
    // |y| <= sum_k |h_k| * (sum|b| max|u| + max|d|) with h the impulse response of 1/A.
    const Trajectory impulse = propagate(ArxSystem{sys.a_coeffs, {1.0}, 0.0}, [] {
        std::vector<double> u(2001, 0.0);
        u[0] = 1.0;
        return u;
    }(), std::vector<double>(2000, 0.0));
    double h1 = 0.0;
    for (double h : impulse.y)
    {
        h1 += std::abs(h);
    }
    double b1 = 0.0;
    for (double b : sys.b_coeffs)
    {
        b1 += std::abs(b);
    }
    const double bound = 1.01 * h1 * (b1 * max_u + max_d) + 1.01 * max_d;
    for (double y : t.y)
    {
        ASSERT_TRUE(std::isfinite(y));
        EXPECT_LE(std::abs(y), bound);
    }
}

TEST(Simulate, HighOutputMomentHasNoGrowthTrend)
{
    const ArxSystem sys{{-0.5}, {1.0}, 0.5};
    const Trajectory t = simulate(sys, generate_input(SignalGeneratorSpec{}, 8192, 10), 11);
    std::vector<double> ks;
    std::vector<double> running;
    double acc = 0.0;
    std::size_t next = 128;
    for (std::size_t k = 1; k <= 8192; ++k)
    {
        acc += std::pow(std::abs(t.output(static_cast<long>(k))), 4.0);
        if (k == next)
        {
            ks.push_back(static_cast<double>(k));
            running.push_back(acc / static_cast<double>(k));
            next *= 2;
        }
    }
    EXPECT_NEAR(fit_power_law(ks, running).slope, 0.0, 0.1);
}

TEST(Regressor, FirstStepOnlySeesInitialInput)
{
    const Trajectory t = make_trajectory({1.0, 2.0}, {5.0, 7.0, 9.0});
    const Vector phi = build_regressor(t, 1, {2, 2});
    ASSERT_EQ(phi.size(), 4);
    EXPECT_EQ(phi[0], 0.0);
    EXPECT_EQ(phi[1], 0.0);
    EXPECT_EQ(phi[2], 5.0);
    EXPECT_EQ(phi[3], 0.0);
}

TEST(Regressor, HandIndexedExamples)
{
    const Trajectory t = make_trajectory({1.0, 2.0, 3.0}, {5.0, 7.0, 11.0, 13.0});
    const Vector phi = build_regressor(t, 3, {2, 1});
    ASSERT_EQ(phi.size(), 3);
    EXPECT_EQ(phi[0], -2.0);
    EXPECT_EQ(phi[1], -1.0);
    EXPECT_EQ(phi[2], 11.0);

    const Trajectory s = make_trajectory({3.0, 0.0}, {1.0, 4.0, 0.0});
    const Vector psi = build_regressor(s, 2, {1, 1});
    EXPECT_EQ(psi[0], -3.0);
    EXPECT_EQ(psi[1], 4.0);
}

TEST(Regressor, OutOfRangeStepRejected)
{
    const Trajectory t = make_trajectory({1.0, 2.0}, {5.0, 7.0, 9.0});
    EXPECT_THROW(build_regressor(t, 0, {1, 1}), InvalidInput);
    EXPECT_THROW(build_regressor(t, 3, {1, 1}), InvalidInput);
}
