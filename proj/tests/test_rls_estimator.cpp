#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "arxrls/invariant_check.hpp"
#include "arxrls/rls_estimator.hpp"
#include "support/random_systems.hpp"

using namespace arxrls;

namespace {

RlsConfig scalar_config()
{
    RlsConfig c;
    c.P0 = Matrix::Identity(1, 1);
    c.theta0 = Vector::Zero(1);
    return c;
}

// m = 0, n = 1, b_1 = 1.5: u_0 = 1, d_1 = 0.5 gives y_1 = 2 and phi_1 = 1.
Trajectory scalar_trajectory()
{
    Trajectory t;
    t.u = {1.0, 0.0};
    t.y = {2.0};
    t.d = {0.5};
    return t;
}

// Regularized least squares as an ordinary stacked problem solved by QR:
// min ||Phi theta - Y||^2 + ||P0^{-1/2} (theta - theta0)||^2.
Vector stacked_qr_oracle(const Trajectory& traj, ModelOrders orders, const RlsConfig& config, std::size_t k)
{
    const auto d = static_cast<Eigen::Index>(orders.dim());
    const auto rows = static_cast<Eigen::Index>(k) + d;
    Matrix A = Matrix::Zero(rows, d);
    Vector b = Vector::Zero(rows);
    for (std::size_t l = 1; l <= k; ++l)
    {
        A.row(static_cast<Eigen::Index>(l - 1)) = build_regressor(traj, l, orders).transpose();
        b[static_cast<Eigen::Index>(l - 1)] = traj.output(static_cast<long>(l));
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(p0_inverse(config));
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    A.bottomRows(d) = root;
    b.tail(d) = root * config.theta0;
    return A.colPivHouseholderQr().solve(b);
}

Trajectory random_run(std::uint64_t seed, ArxSystem& sys, std::size_t k)
{
    sys = test_support::random_stable_system(seed);
    return simulate(sys, generate_input(SignalGeneratorSpec{}, k, seed + 1000), seed + 2000);
}

} // namespace

TEST(RlsStep, ScalarHandExample)
{
    const RlsConfig c = scalar_config();
    const RlsState s = rls_step(initial_state(c), Vector::Ones(1), 2.0);
    EXPECT_DOUBLE_EQ(s.gain, 0.5);
    EXPECT_DOUBLE_EQ(s.theta_hat[0], 1.0);
    EXPECT_DOUBLE_EQ(s.P(0, 0), 0.5);
    EXPECT_EQ(s.k, 1u);

    EXPECT_DOUBLE_EQ(batch_oracle(scalar_trajectory(), {0, 1}, c, 1).theta_hat[0], 1.0);
}

TEST(RlsStep, ZeroRegressorIsNoOp)
{
    RlsConfig c = RlsConfig::defaults(3);
    c.theta0 << 0.1, -0.2, 0.3;
    c.P0(0, 1) = c.P0(1, 0) = 5.0;
    const RlsState s0 = initial_state(c);
    const RlsState s1 = rls_step(s0, Vector::Zero(3), 7.0);
    EXPECT_EQ(s1.theta_hat, s0.theta_hat);
    EXPECT_EQ(s1.P, s0.P);
    EXPECT_EQ(s1.gain, 1.0);
}

TEST(RlsStep, NonFiniteInputRefusedWithoutSideEffects)
{
    RlsEstimator est(RlsConfig::defaults(2));
    est.update(Vector::Ones(2), 1.0);
    const RlsState before = est.state();
    Vector bad = Vector::Ones(2);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(est.update(bad, 1.0), InvalidInput);
    EXPECT_THROW(est.update(Vector::Ones(2), std::numeric_limits<double>::infinity()), InvalidInput);
    EXPECT_THROW(est.update(Vector::Ones(3), 1.0), InvalidInput);
    EXPECT_EQ(est.state().theta_hat, before.theta_hat);
    EXPECT_EQ(est.state().P, before.P);
    EXPECT_EQ(est.state().k, before.k);
}

TEST(RlsStep, EstimatorMatchesFunctionalForm)
{
    ArxSystem sys;
    const Trajectory t = random_run(3, sys, 300);
    const RlsConfig c = RlsConfig::defaults(sys.dim());
    RlsState functional = initial_state(c);
    RlsEstimator est(c);
    for (std::size_t k = 1; k <= 300; ++k)
    {
        const Vector phi = build_regressor(t, k, sys.orders());
        functional = rls_step(functional, phi, t.output(static_cast<long>(k)));
        est.update(phi, t.output(static_cast<long>(k)));
    }
    EXPECT_EQ(functional.theta_hat, est.state().theta_hat);
    EXPECT_EQ(functional.P, est.state().P);
    EXPECT_EQ(run_rls(t, sys.orders(), c, 300).theta_hat, est.state().theta_hat);
}

TEST(RlsStep, GainRangeMonotonePAndSymmetry)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        ArxSystem sys;
        const Trajectory t = random_run(seed, sys, 500);
        RlsEstimator est(RlsConfig::defaults(sys.dim()));
        for (std::size_t k = 1; k <= 500; ++k)
        {
            const Matrix prev = est.state().P;
            est.update(build_regressor(t, k, sys.orders()), t.output(static_cast<long>(k)));
            const RlsState& s = est.state();
            EXPECT_GT(s.gain, 0.0);
            EXPECT_LE(s.gain, 1.0);
            EXPECT_EQ(s.P, s.P.transpose());
            const Eigen::SelfAdjointEigenSolver<Matrix> dec(prev - s.P);
            EXPECT_GE(dec.eigenvalues().minCoeff(), -1e-10);
            EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(s.P).eigenvalues().minCoeff(), 0.0);
        }
    }
}

TEST(BatchOracle, ZeroRegressorsReturnPrior)
{
    Trajectory t;
    t.u = std::vector<double>(11, 0.0);
    t.y = std::vector<double>(10, 0.0);
    RlsConfig c = RlsConfig::defaults(2);
    c.theta0 << 0.7, -1.1;
    const BatchEstimate b = batch_oracle(t, {1, 1}, c, 10);
    EXPECT_NEAR(b.theta_hat[0], 0.7, 1e-15);
    EXPECT_NEAR(b.theta_hat[1], -1.1, 1e-15);
    EXPECT_FALSE(b.ill_conditioned);
}

TEST(BatchOracle, MatchesIndependentQrSolution)
{
    for (std::uint64_t seed = 10; seed < 15; ++seed)
    {
        ArxSystem sys;
        const Trajectory t = random_run(seed, sys, 500);
        RlsConfig c = RlsConfig::defaults(sys.dim());
        c.theta0 = Vector::Constant(static_cast<Eigen::Index>(sys.dim()), 0.3);
        for (std::size_t k : {1u, 7u, 100u, 500u})
        {
            const Vector oracle = stacked_qr_oracle(t, sys.orders(), c, k);
            const Vector batch = batch_oracle(t, sys.orders(), c, k).theta_hat;
            EXPECT_LE((oracle - batch).lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + oracle.lpNorm<Eigen::Infinity>()));
        }
        const Vector rls = run_rls(t, sys.orders(), c, 500).theta_hat;
        const Vector batch = batch_oracle(t, sys.orders(), c, 500).theta_hat;
        EXPECT_LE((rls - batch).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(BatchOracle, FlagsIllConditioning)
{
    NormalEquations eqs(2);
    Vector phi(2);
    phi << 1e7, 0.0;
    eqs.add(phi, 1.0);
    RlsConfig c = RlsConfig::defaults(2, 1.0);
    const BatchEstimate b = solve_regularized(eqs, c);
    EXPECT_GT(b.condition_number, kIllConditionedThreshold);
    EXPECT_TRUE(b.ill_conditioned);
}

TEST(BatchOracle, StepOutOfRangeRejected)
{
    EXPECT_THROW(batch_oracle(scalar_trajectory(), {0, 1}, scalar_config(), 0), InvalidInput);
    EXPECT_THROW(batch_oracle(scalar_trajectory(), {0, 1}, scalar_config(), 2), InvalidInput);
}

TEST(Project, Examples)
{
    EXPECT_EQ(project(Vector::Zero(2), 1.0), Vector::Zero(2));
    Vector v(2);
    v << 3.0, 4.0;
    EXPECT_EQ(project(v, 5.0), v);
    const Vector p = project(v, 1.0);
    EXPECT_NEAR(p[0], 0.6, 1e-15);
    EXPECT_NEAR(p[1], 0.8, 1e-15);
    EXPECT_THROW(project(v, 0.0), InvalidInput);
}

TEST(Project, InertWhenRadiusIsNeverReached)
{
    ArxSystem sys;
    const Trajectory t = random_run(21, sys, 1000);
    RlsConfig free = RlsConfig::defaults(sys.dim());
    RlsConfig constrained = free;
    constrained.projection = Projection{1e6};
    const RlsState a = run_rls(t, sys.orders(), free, 1000);
    const RlsState b = run_rls(t, sys.orders(), constrained, 1000);
    EXPECT_EQ(a.theta_hat, b.theta_hat);
    EXPECT_EQ(a.P, b.P);
}

TEST(Project, ActiveProjectionStaysInsideBall)
{
    ArxSystem sys;
    const Trajectory t = random_run(22, sys, 300);
    RlsConfig c = RlsConfig::defaults(sys.dim());
    c.projection = Projection{0.1};
    RlsEstimator est(c);
    for (std::size_t k = 1; k <= 300; ++k)
    {
        est.update(build_regressor(t, k, sys.orders()), t.output(static_cast<long>(k)));
        EXPECT_LE(est.state().theta_hat.norm(), 0.1 * (1.0 + 1e-12));
    }
}

TEST(Woodbury, InitialStateIsExact)
{
    ArxSystem sys;
    const Trajectory t = random_run(1, sys, 10);
    const RlsConfig c = RlsConfig::defaults(sys.dim());
    EXPECT_EQ(woodbury_residual(initial_state(c), t, sys.orders(), c), 0.0);
}

TEST(Woodbury, ScalarExample)
{
    const RlsConfig c = scalar_config();
    const RlsState s = run_rls(scalar_trajectory(), {0, 1}, c, 1);
    EXPECT_LE(woodbury_residual(s, scalar_trajectory(), {0, 1}, c), 1e-12);
}

TEST(Woodbury, LongRandomRuns)
{
    for (std::uint64_t seed = 30; seed < 35; ++seed)
    {
        ArxSystem sys;
        const Trajectory t = random_run(seed, sys, 1000);
        const RlsConfig c = RlsConfig::defaults(sys.dim());
        EXPECT_LE(woodbury_residual(run_rls(t, sys.orders(), c, 1000), t, sys.orders(), c), 1e-8);
    }
}

TEST(ErrorDecomposition, PerfectInitializationWithoutNoise)
{
    const ArxSystem sys{{-0.5}, {1.0}, 0.0};
    const Trajectory t = simulate(sys, generate_input(SignalGeneratorSpec{}, 200, 1), 2, {.allow_zero_noise = true});
    RlsConfig c = RlsConfig::defaults(2);
    c.theta0 = sys.theta();
    const ErrorDecomposition e = error_decomposition(run_rls(t, sys.orders(), c, 200), t, sys, c);
    EXPECT_EQ(e.L.norm(), 0.0);
    EXPECT_LE(e.theta_tilde.norm(), 1e-14);
    EXPECT_EQ(e.residual, 0.0);
}

TEST(ErrorDecomposition, ScalarExample)
{
    const ArxSystem sys{{}, {1.5}, 0.5};
    const RlsConfig c = scalar_config();
    const ErrorDecomposition e = error_decomposition(run_rls(scalar_trajectory(), {0, 1}, c, 1),
                                                     scalar_trajectory(), sys, c);
    // L = phi d + P0^{-1} (theta0 - theta) = 0.5 - 1.5; theta_tilde = 1 - 1.5 = P L
    EXPECT_NEAR(e.L[0], -1.0, 1e-15);
    EXPECT_NEAR(e.theta_tilde[0], -0.5, 1e-15);
    EXPECT_LE(e.residual, 1e-12);
}

TEST(ErrorDecomposition, LongRandomRuns)
{
    for (std::uint64_t seed = 40; seed < 45; ++seed)
    {
        ArxSystem sys;
        const Trajectory t = random_run(seed, sys, 1000);
        const RlsConfig c = RlsConfig::defaults(sys.dim());
        EXPECT_LE(error_decomposition(run_rls(t, sys.orders(), c, 1000), t, sys, c).residual, 1e-8);
    }
}

TEST(ErrorDecomposition, MissingNoiseRecordRejected)
{
    Trajectory t = scalar_trajectory();
    t.d.clear();
    const RlsConfig c = scalar_config();
    EXPECT_THROW(error_decomposition(run_rls(t, {0, 1}, c, 1), t, ArxSystem{{}, {1.5}, 0.5}, c), DegenerateData);
}

TEST(RlsConfig, ValidationRejectsBadPriors)
{
    RlsConfig c = RlsConfig::defaults(2);
    c.P0(0, 0) = -1.0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = RlsConfig::defaults(2);
    c.P0(0, 1) = 1.0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = RlsConfig::defaults(2);
    c.projection = Projection{0.0};
    EXPECT_THROW(c.validate(), InvalidInput);
    c = RlsConfig::defaults(2);
    c.theta0 = Vector::Zero(3);
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Invariants, RandomSystemsStepwise)
{
    InvariantReport total;
    for (std::uint64_t seed = 100; seed < 110; ++seed)
    {
        ArxSystem sys;
        const Trajectory t = random_run(seed, sys, 1000);
        total.merge(check_trajectory_invariants(sys, t, RlsConfig::defaults(sys.dim()), 1000));
    }
    EXPECT_EQ(total.trajectories, 10u);
    EXPECT_EQ(total.steps, 10000u);
    EXPECT_LE(total.max_oracle_gap_relative, 1e-8);
    EXPECT_LE(total.max_woodbury_residual, 1e-8);
    EXPECT_LE(total.max_error_decomposition_residual, 1e-8);
    EXPECT_GE(total.min_p_decrease_eig, -1e-10);
    EXPECT_TRUE(total.passed());
}
