#include "arxrls/rls_estimator.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace arxrls {

RlsConfig RlsConfig::defaults(std::size_t dim, double p0_scale)
{
    const auto d = static_cast<Eigen::Index>(dim);
    RlsConfig config;
    config.P0 = p0_scale * Matrix::Identity(d, d);
    config.theta0 = Vector::Zero(d);
    return config;
}

void RlsConfig::validate() const
{
    if (P0.rows() != theta0.size() || P0.cols() != theta0.size())
    {
        throw InvalidInput("estimator: P0 must be (m+n)x(m+n) and theta0 of length m+n");
    }
    if (!P0.allFinite() || !theta0.allFinite())
    {
        throw InvalidInput("estimator: P0 and theta0 must be finite");
    }
    if ((P0 - P0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + P0.cwiseAbs().maxCoeff()))
    {
        throw InvalidInput("estimator: P0 must be symmetric");
    }
    if (P0.size() > 0 && Eigen::LLT<Matrix>(P0).info() != Eigen::Success)
    {
        throw InvalidInput("estimator: P0 must be positive definite");
    }
    if (projection && !(projection->radius > 0.0 && std::isfinite(projection->radius)))
    {
        throw InvalidInput("estimator: projection radius must be positive");
    }
}

RlsState initial_state(const RlsConfig& config)
{
    config.validate();
    return RlsState{config.theta0, config.P0, 0, 1.0};
}

Vector project(const Vector& theta_hat, double radius)
{
    if (!(radius > 0.0))
    {
        throw InvalidInput("project: radius must be positive");
    }
    const double norm = theta_hat.norm();
    if (norm <= radius)
    {
        return theta_hat;
    }
    return theta_hat * (radius / norm);
}

RlsEstimator::RlsEstimator(const RlsConfig& config)
    : state_(initial_state(config)), projection_(config.projection), p_phi_(config.theta0.size())
{
}

RlsEstimator::RlsEstimator(RlsState state, std::optional<Projection> projection)
    : state_(std::move(state)), projection_(projection), p_phi_(state_.theta_hat.size())
{
}

void RlsEstimator::update(const Vector& phi, double y)
{
    if (phi.size() != state_.theta_hat.size())
    {
        throw InvalidInput("rls_step: regressor has wrong dimension");
    }
    if (!phi.allFinite() || !std::isfinite(y))
    {
        throw InvalidInput("rls_step: non-finite regressor or output at step " + std::to_string(state_.k + 1));
    }

    Matrix& P = state_.P;
    p_phi_.noalias() = P * phi;
    const double gain = 1.0 / (1.0 + phi.dot(p_phi_));
    const double innovation = y - phi.dot(state_.theta_hat);
    state_.theta_hat += (gain * innovation) * p_phi_;
    P.noalias() -= gain * p_phi_ * p_phi_.transpose();

    const Eigen::Index d = P.rows();
    for (Eigen::Index i = 0; i < d; ++i)
    {
        for (Eigen::Index j = i + 1; j < d; ++j)
        {
            const double sym = 0.5 * (P(i, j) + P(j, i));
            P(i, j) = sym;
            P(j, i) = sym;
        }
    }

    if (projection_)
    {
        const double norm = state_.theta_hat.norm();
        if (norm > projection_->radius)
        {
            state_.theta_hat *= projection_->radius / norm;
        }
    }
    state_.gain = gain;
    ++state_.k;
}

RlsState rls_step(const RlsState& state, const Vector& phi, double y, const std::optional<Projection>& projection)
{
    RlsEstimator estimator(state, projection);
    estimator.update(phi, y);
    return estimator.state();
}

RlsState run_rls(const Trajectory& traj, ModelOrders orders, const RlsConfig& config, std::size_t k)
{
    if (k > traj.horizon())
    {
        throw InvalidInput("run_rls: step beyond trajectory horizon");
    }
    RlsEstimator estimator(config);
    Vector phi(static_cast<Eigen::Index>(orders.dim()));
    for (std::size_t l = 1; l <= k; ++l)
    {
        fill_regressor(traj, l, orders, phi);
        estimator.update(phi, traj.output(static_cast<long>(l)));
    }
    return estimator.state();
}

NormalEquations::NormalEquations(std::size_t dim)
    : information_(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      moment_(Vector::Zero(static_cast<Eigen::Index>(dim)))
{
}

void NormalEquations::add(const Vector& phi, double y)
{
    information_.noalias() += phi * phi.transpose();
    moment_ += y * phi;
    ++count_;
}

NormalEquations accumulate_normal_equations(const Trajectory& traj, ModelOrders orders, std::size_t k)
{
    if (k > traj.horizon())
    {
        throw InvalidInput("step " + std::to_string(k) + " beyond trajectory horizon " +
                           std::to_string(traj.horizon()));
    }
    NormalEquations eqs(orders.dim());
    Vector phi(static_cast<Eigen::Index>(orders.dim()));
    for (std::size_t l = 1; l <= k; ++l)
    {
        fill_regressor(traj, l, orders, phi);
        eqs.add(phi, traj.output(static_cast<long>(l)));
    }
    return eqs;
}

BatchEstimate solve_regularized(const NormalEquations& eqs, const RlsConfig& config)
{
    config.validate();
    const Matrix p0_inv = p0_inverse(config);
    const Matrix normal = eqs.information() + p0_inv;
    const Vector rhs = eqs.moment() + p0_inv * config.theta0;

    BatchEstimate out;
    const Eigen::LDLT<Matrix> ldlt(normal);
    out.theta_hat = ldlt.solve(rhs);

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(normal, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    out.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    out.ill_conditioned = out.condition_number > kIllConditionedThreshold;
    return out;
}

BatchEstimate batch_oracle(const Trajectory& traj, ModelOrders orders, const RlsConfig& config, std::size_t k)
{
    if (k < 1)
    {
        throw InvalidInput("batch_oracle: k must be at least 1");
    }
    return solve_regularized(accumulate_normal_equations(traj, orders, k), config);
}

double symmetric_spectral_norm(const Matrix& symmetric)
{
    if (symmetric.size() == 0)
    {
        return 0.0;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix p0_inverse(const RlsConfig& config)
{
    const Eigen::Index d = config.P0.rows();
    return Eigen::LLT<Matrix>(config.P0).solve(Matrix::Identity(d, d));
}

double woodbury_residual(const RlsState& state, const NormalEquations& eqs, const RlsConfig& config)
{
    const Eigen::Index d = config.P0.rows();
    const Matrix p_inv = Eigen::LLT<Matrix>(state.P).solve(Matrix::Identity(d, d));
    const Matrix normal = eqs.information() + p0_inverse(config);
    const Matrix diff = p_inv - normal;
    return symmetric_spectral_norm(0.5 * (diff + diff.transpose())) / symmetric_spectral_norm(normal);
}

double woodbury_residual(const RlsState& state, const Trajectory& traj, ModelOrders orders, const RlsConfig& config)
{
    return woodbury_residual(state, accumulate_normal_equations(traj, orders, state.k), config);
}

ErrorDecomposition error_decomposition(const RlsState& state, const Vector& noise_sum, const Vector& theta,
                                       const RlsConfig& config)
{
    ErrorDecomposition out;
    out.L = noise_sum + p0_inverse(config) * (config.theta0 - theta);
    out.theta_tilde = state.theta_hat - theta;
    const Vector pl = state.P * out.L;
    const double scale = std::max(out.theta_tilde.norm(), pl.norm());
    out.residual = scale > 0.0 ? (out.theta_tilde - pl).norm() / scale : 0.0;
    return out;
}

ErrorDecomposition error_decomposition(const RlsState& state, const Trajectory& traj, const ArxSystem& system,
                                       const RlsConfig& config)
{
    if (!traj.has_noise_record())
    {
        throw DegenerateData("error_decomposition: trajectory carries no noise record");
    }
    if (state.k > traj.horizon())
    {
        throw InvalidInput("error_decomposition: state is beyond the trajectory horizon");
    }
    const ModelOrders orders = system.orders();
    const Vector theta = system.theta();
    Vector noise_sum = Vector::Zero(theta.size());
    Vector phi(theta.size());
    for (std::size_t l = 1; l <= state.k; ++l)
    {
        fill_regressor(traj, l, orders, phi);
        noise_sum += traj.d[l - 1] * phi;
    }
    return error_decomposition(state, noise_sum, theta, config);
}

} // namespace arxrls
