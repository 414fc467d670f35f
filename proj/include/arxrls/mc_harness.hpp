#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arxrls/config.hpp"
#include "arxrls/efficiency_analysis.hpp"
#include "arxrls/quasi_stationary_stats.hpp"

namespace arxrls {

/// State of one run after step k.
struct Snapshot
{
    std::size_t k = 0;
    Vector theta_hat;
    /// theta_hat - theta
    Vector theta_err;
    double trace_P = 0.0;
    /// sum_{l<=k} phi_l phi_l'
    Matrix information;
    /// sum_{l<=k} y_l y_{l-tau}, one entry per configured tau.
    std::vector<double> lag_sums;
};

struct RunRecord
{
    std::uint64_t run_id = 0;
    std::uint64_t input_seed = 0;
    std::uint64_t noise_seed = 0;
    std::vector<Snapshot> snapshots;  // one per k_grid entry

    bool operator==(const RunRecord& other) const;
};

/// Input and output records of run `run_id` up to `horizon`.
Trajectory simulate_run_trajectory(const ExperimentConfig& config, std::uint64_t run_id, std::size_t horizon);

/// Simulates and estimates one run; a pure function of (config, run_id).
RunRecord execute_run(const ExperimentConfig& config, std::uint64_t run_id);

using RunCallback = std::function<void(const RunRecord&)>;

/// Reference kernel: runs in id order on the calling thread.
std::vector<RunRecord> execute_runs_serial(const ExperimentConfig& config, std::span<const std::uint64_t> run_ids,
                                           const RunCallback& on_complete = {});

/// OpenMP kernel. Records come back in the order of run_ids regardless of
/// thread count; on_complete may be called concurrently from worker threads.
/// threads <= 0 selects resolve_thread_count(0).
std::vector<RunRecord> execute_runs_parallel(const ExperimentConfig& config, std::span<const std::uint64_t> run_ids,
                                             int threads = 0, const RunCallback& on_complete = {});

/// ARXRLS_THREADS if set and positive, else the OpenMP default; an explicit
/// positive request wins over both.
int resolve_thread_count(int requested);

std::vector<std::uint64_t> all_run_ids(const ExperimentConfig& config);

/// E-bar[phi phi'] from one long reference trajectory and the implied
/// asymptotic covariance noise_var * E-bar[phi phi']^{-1}.
struct ReferenceStatistics
{
    CovarianceTable table;
    ExcitationMatrix excitation;
    ExcitationCheck excitation_check;
    Matrix asymptotic_cov;
};

ReferenceStatistics reference_statistics(const ExperimentConfig& config);

/// One trajectory of length max(k_max / 4, 10 * tau_max).
ExcitationCheck pilot_excitation(const ExperimentConfig& config);

struct MetricRow
{
    std::string metric;
    double value = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

struct NormalityRow
{
    std::string direction_name;
    Vector direction;
    NormalityResult result;
};

struct KSummary
{
    std::size_t k = 0;
    std::vector<MetricRow> metrics;
    std::optional<Matrix> scaled_covariance;  // k * E[theta_tilde theta_tilde']
    std::optional<Matrix> scaled_crlb;        // k * sigma_CR(k)
    std::optional<double> covariance_vs_crlb;
    std::optional<double> crlb_vs_asymptotic;
    std::vector<NormalityRow> normality;
};

struct NamedRate
{
    std::string metric;
    RateFit fit;
};

struct TauSummary
{
    int tau = 0;
    std::optional<std::vector<double>> deviation_moments;
    std::optional<TailProbabilities> tail;
};

struct McSummary
{
    std::size_t runs = 0;
    std::vector<std::size_t> k_grid;
    std::vector<KSummary> per_k;
    std::vector<TauSummary> per_tau;
    std::vector<NamedRate> rates;
    Matrix asymptotic_cov;
    ExcitationCheck reference_excitation;
    /// Metrics omitted because a precondition (run count, grid size) failed.
    std::vector<std::string> skipped;

    const KSummary& at_k(std::size_t k) const;
    const RateFit* rate(const std::string& metric) const;
    const TauSummary* tau(int tau) const;
};

/// Theta-error panel (grid x runs) extracted from records.
McErrorPanel error_panel(std::span<const RunRecord> records, std::span<const std::size_t> k_grid);
LagSumPanel lag_panel(std::span<const RunRecord> records, std::span<const std::size_t> k_grid, std::size_t tau_index);

/// Deterministic ordered aggregation of run records (run_id order as given).
McSummary summarize(const ExperimentConfig& config, std::span<const RunRecord> records,
                    const ReferenceStatistics& reference);

nlohmann::json to_json(const McSummary& summary);
std::string rates_csv(const McSummary& summary);

/// Error moment exponents reported: 1, 2 and gamma/2 (deduplicated, ascending).
std::vector<double> error_moment_exponents(int gamma);

std::string run_record_path(const std::string& output_dir, std::uint64_t run_id);
std::string run_record_csv(const ExperimentConfig& config, const RunRecord& record);
void write_run_record(const ExperimentConfig& config, const RunRecord& record);
/// nullopt if the file is missing or was produced by a different run
/// configuration; IoError if it is malformed.
std::optional<RunRecord> read_run_record(const ExperimentConfig& config, std::uint64_t run_id);

struct RunOptions
{
    int threads = 0;
    bool serial = false;
};

/// Validates, runs the pilot excitation check, executes (or resumes) every
/// run, aggregates and persists config.json, runs/run_<id>.csv, summary.json,
/// covariances.csv and rates.csv under config.output_dir.
McSummary run_experiment(const ExperimentConfig& config, RunOptions options = {});

/// Rebuilds the summary from the persisted run records in config.output_dir
/// and rewrites summary.json, covariances.csv and rates.csv.
McSummary analyze(const ExperimentConfig& config);

/// Writes the derived outputs (not the run records).
void write_summary_outputs(const ExperimentConfig& config, const McSummary& summary,
                           const ReferenceStatistics& reference);

} // namespace arxrls
