#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "arxrls/arx_model.hpp"
#include "arxrls/types.hpp"

namespace arxrls {

/// Sample covariance functions R_tau = (1/K) sum_{l=1}^{K} a_l b_{l-tau}
/// for tau = -tau_max..tau_max, zero-padded outside the stored ranges.
struct CovarianceTable
{
    int tau_max = 0;
    std::vector<double> ryy;
    std::vector<double> ruu;
    std::vector<double> ryu;
    std::size_t samples = 0;

    double Ryy(int tau) const { return ryy.at(index(tau)); }
    double Ruu(int tau) const { return ruu.at(index(tau)); }
    double Ryu(int tau) const { return ryu.at(index(tau)); }

private:
    std::size_t index(int tau) const
    {
        if (tau < -tau_max || tau > tau_max)
        {
            throw InvalidInput("covariance lag outside table");
        }
        return static_cast<std::size_t>(tau + tau_max);
    }
};

/// Requires K >= 10 * tau_max.
CovarianceTable estimate_covariances(const Trajectory& traj, int tau_max);

/// Sample estimate of E-bar[phi phi'] assembled from covariance functions:
/// [Ryy(|i-j|)] output block, [Ruu(|i-j|)] input block, entry (i, m+j) = -Ryu(j-i).
struct ExcitationMatrix
{
    Matrix M;
    double min_eig = 0.0;
};

/// Requires tau_max >= max(m, n) - 1.
ExcitationMatrix build_excitation_matrix(const CovarianceTable& table, ModelOrders orders);

struct ExcitationCheck
{
    bool excited = false;
    double min_eig = 0.0;
    double threshold = 0.0;
};

/// Default threshold: 1e-6 * trace(M) / (m+n).
double default_excitation_threshold(const ExcitationMatrix& excitation);

/// Excited iff min_eig > eps_pd.
ExcitationCheck check_persistent_excitation(const ExcitationMatrix& excitation,
                                            std::optional<double> eps_pd = std::nullopt);

} // namespace arxrls
