#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arxrls/arx_model.hpp"
#include "arxrls/rls_estimator.hpp"

namespace arxrls {

inline constexpr int kConfigSchemaVersion = 1;

/// Estimator section as written in the config; resolved against the model
/// dimension by rls_config().
struct EstimatorSettings
{
    double p0_scale = kDefaultP0Scale;
    std::optional<Matrix> P0;
    std::optional<Vector> theta0;
    std::optional<double> projection_radius;
};

struct ExperimentConfig
{
    ArxSystem system{{-0.5}, {1.0}, 0.5};
    SignalGeneratorSpec input;
    EstimatorSettings estimator;
    std::size_t runs = 2000;
    std::vector<std::size_t> k_grid{128, 256, 512, 1024, 2048, 4096, 8192};
    /// Error moments of order gamma/2 are fitted against k.
    int gamma = 4;
    /// Order of the deviation moments E[Y_k^{2 gamma}]; 1 or 2.
    int deviation_gamma = 1;
    std::vector<int> taus{0, 1};
    double tail_eps = 0.1;
    std::uint64_t master_seed = 20250101;
    std::string output_dir = "out";
    /// Length of the trajectory used for E-bar[phi phi'].
    std::size_t reference_horizon = std::size_t{1} << 17;
    /// Trajectory length for `simulate` / `check`; 0 means max(k_grid).
    std::size_t horizon = 0;

    std::size_t k_max() const { return k_grid.empty() ? 0 : k_grid.back(); }
    std::size_t trajectory_horizon() const { return horizon > 0 ? horizon : k_max(); }
    RlsConfig rls_config() const;

    /// Throws InvalidInput on any schema or invariant violation.
    void validate() const;
};

/// The acceptance defaults: a1 = -0.5, b1 = 1, delta_d = 0.5, cos(1.7 k) + e_k input.
ExperimentConfig default_experiment();

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a over the settings that determine a run's content (everything except
/// runs and output_dir).
std::uint64_t run_content_hash(const ExperimentConfig& config);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

} // namespace arxrls
