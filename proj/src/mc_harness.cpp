#include "arxrls/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <sstream>

#include <omp.h>

#include "arxrls/csv.hpp"
#include "arxrls/numeric.hpp"
#include "arxrls/rls_estimator.hpp"
#include "arxrls/seeding.hpp"

namespace arxrls {

using nlohmann::json;

namespace {

constexpr double kZ95 = 1.959963984540054;

int max_abs_tau(const std::vector<int>& taus)
{
    int out = 0;
    for (int t : taus)
    {
        out = std::max(out, std::abs(t));
    }
    return out;
}

int order_tau_max(const ExperimentConfig& config)
{
    return static_cast<int>(std::max<std::size_t>(1, std::max(config.system.a_coeffs.size(),
                                                               config.system.b_coeffs.size())));
}

MetricRow mean_with_ci(std::string name, const std::vector<double>& values)
{
    const std::size_t n = values.size();
    const double mean = pairwise_mean<double>(n, [&](std::size_t r) { return values[r]; });
    MetricRow row{std::move(name), mean, std::nullopt, std::nullopt};
    if (n > 1)
    {
        const double var = pairwise_sum<double>(0, n, [&](std::size_t r) {
                               const double c = values[r] - mean;
                               return c * c;
                           }) /
                           static_cast<double>(n - 1);
        const double half = kZ95 * std::sqrt(var / static_cast<double>(n));
        row.ci_low = mean - half;
        row.ci_high = mean + half;
    }
    return row;
}

std::string exponent_label(double p)
{
    return "err_norm_pow" + format_double(p);
}

std::string tau_label(int tau)
{
    return "tau" + std::to_string(tau);
}

std::string run_header_comment(const ExperimentConfig& config, const RunRecord& record)
{
    std::ostringstream out;
    out << " arxrls-run run_id=" << record.run_id << " input_seed=" << record.input_seed
        << " noise_seed=" << record.noise_seed << " config_hash=" << run_content_hash(config);
    return out.str();
}

std::vector<std::string> run_columns(const ExperimentConfig& config)
{
    const std::size_t p = config.system.dim();
    std::vector<std::string> cols{"k"};
    for (std::size_t i = 1; i <= p; ++i)
    {
        cols.push_back("theta_hat_" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= p; ++i)
    {
        cols.push_back("theta_err_" + std::to_string(i));
    }
    cols.push_back("trace_P");
    for (std::size_t i = 1; i <= p; ++i)
    {
        for (std::size_t j = 1; j <= p; ++j)
        {
            cols.push_back("info_" + std::to_string(i) + "_" + std::to_string(j));
        }
    }
    for (int tau : config.taus)
    {
        cols.push_back("lagsum_tau_" + std::to_string(tau));
    }
    return cols;
}

json rate_to_json(const RateFit& fit)
{
    return json{{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"r_squared", fit.r_squared},
                {"slope_stderr", fit.slope_stderr}};
}

} // namespace

bool RunRecord::operator==(const RunRecord& other) const
{
    if (run_id != other.run_id || input_seed != other.input_seed || noise_seed != other.noise_seed ||
        snapshots.size() != other.snapshots.size())
    {
        return false;
    }
    for (std::size_t i = 0; i < snapshots.size(); ++i)
    {
        const Snapshot& a = snapshots[i];
        const Snapshot& b = other.snapshots[i];
        if (a.k != b.k || a.theta_hat != b.theta_hat || a.theta_err != b.theta_err || a.trace_P != b.trace_P ||
            a.information != b.information || a.lag_sums != b.lag_sums)
        {
            return false;
        }
    }
    return true;
}

Trajectory simulate_run_trajectory(const ExperimentConfig& config, std::uint64_t run_id, std::size_t horizon)
{
    std::vector<double> u =
        generate_input(config.input, horizon, derive_seed(config.master_seed, run_id, Stream::input));
    return simulate(config.system, std::move(u), derive_seed(config.master_seed, run_id, Stream::noise));
}

RunRecord execute_run(const ExperimentConfig& config, std::uint64_t run_id)
{
    const std::size_t horizon = config.k_max();
    const Trajectory traj = simulate_run_trajectory(config, run_id, horizon);
    const ModelOrders orders = config.system.orders();
    const Vector theta = config.system.theta();
    const auto d = static_cast<Eigen::Index>(orders.dim());

    RunRecord record;
    record.run_id = run_id;
    record.input_seed = derive_seed(config.master_seed, run_id, Stream::input);
    record.noise_seed = derive_seed(config.master_seed, run_id, Stream::noise);
    record.snapshots.reserve(config.k_grid.size());

    RlsEstimator estimator(config.rls_config());
    Matrix information = Matrix::Zero(d, d);
    std::vector<double> lag_sums(config.taus.size(), 0.0);
    Vector phi(d);
    std::size_t g = 0;
    for (std::size_t k = 1; k <= horizon; ++k)
    {
        const long kk = static_cast<long>(k);
        fill_regressor(traj, k, orders, phi);
        const double y = traj.output(kk);
        estimator.update(phi, y);
        information.noalias() += phi * phi.transpose();
        for (std::size_t t = 0; t < config.taus.size(); ++t)
        {
            lag_sums[t] += y * traj.output(kk - config.taus[t]);
        }
        if (k == config.k_grid[g])
        {
            const RlsState& state = estimator.state();
            record.snapshots.push_back(
                Snapshot{k, state.theta_hat, state.theta_hat - theta, state.P.trace(), information, lag_sums});
            ++g;
        }
    }
    return record;
}

std::vector<std::uint64_t> all_run_ids(const ExperimentConfig& config)
{
    std::vector<std::uint64_t> ids(config.runs);
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
        ids[i] = i;
    }
    return ids;
}

std::vector<RunRecord> execute_runs_serial(const ExperimentConfig& config, std::span<const std::uint64_t> run_ids,
                                           const RunCallback& on_complete)
{
    std::vector<RunRecord> out;
    out.reserve(run_ids.size());
    for (std::uint64_t id : run_ids)
    {
        out.push_back(execute_run(config, id));
        if (on_complete)
        {
            on_complete(out.back());
        }
    }
    return out;
}

int resolve_thread_count(int requested)
{
    if (requested > 0)
    {
        return requested;
    }
    if (const char* env = std::getenv("ARXRLS_THREADS"))
    {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
        {
            return static_cast<int>(v);
        }
    }
    return omp_get_max_threads();
}

std::vector<RunRecord> execute_runs_parallel(const ExperimentConfig& config, std::span<const std::uint64_t> run_ids,
                                             int threads, const RunCallback& on_complete)
{
    const int workers = resolve_thread_count(threads);
    std::vector<RunRecord> out(run_ids.size());
    std::exception_ptr failure;
    const auto n = static_cast<long>(run_ids.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long i = 0; i < n; ++i)
    {
        try
        {
            out[static_cast<std::size_t>(i)] = execute_run(config, run_ids[static_cast<std::size_t>(i)]);
            if (on_complete)
            {
                on_complete(out[static_cast<std::size_t>(i)]);
            }
        }
        catch (...)
        {
#pragma omp critical(arxrls_run_failure)
            if (!failure)
            {
                failure = std::current_exception();
            }
        }
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }
    return out;
}

ReferenceStatistics reference_statistics(const ExperimentConfig& config)
{
    const Trajectory traj = simulate_run_trajectory(config, kReferenceRunId, config.reference_horizon);
    ReferenceStatistics ref;
    ref.table = estimate_covariances(traj, std::max(order_tau_max(config), max_abs_tau(config.taus)));
    ref.excitation = build_excitation_matrix(ref.table, config.system.orders());
    ref.excitation_check = check_persistent_excitation(ref.excitation);
    if (!ref.excitation_check.excited)
    {
        throw DegenerateData("reference trajectory is not persistently exciting (min eigenvalue " +
                             format_double(ref.excitation_check.min_eig) + ")");
    }
    const double noise_var = config.system.noise_std * config.system.noise_std;
    const Eigen::Index d = ref.excitation.M.rows();
    ref.asymptotic_cov = noise_var * Eigen::LLT<Matrix>(ref.excitation.M).solve(Matrix::Identity(d, d));
    ref.asymptotic_cov = 0.5 * (ref.asymptotic_cov + ref.asymptotic_cov.transpose()).eval();
    return ref;
}

ExcitationCheck pilot_excitation(const ExperimentConfig& config)
{
    const int tau_max = order_tau_max(config);
    const std::size_t horizon = std::max<std::size_t>(config.k_max() / 4, 10 * static_cast<std::size_t>(tau_max));
    const Trajectory traj = simulate_run_trajectory(config, kPilotRunId, horizon);
    const CovarianceTable table = estimate_covariances(traj, tau_max);
    return check_persistent_excitation(build_excitation_matrix(table, config.system.orders()));
}

std::vector<double> error_moment_exponents(int gamma)
{
    std::vector<double> exps{1.0, 2.0, 0.5 * gamma};
    std::sort(exps.begin(), exps.end());
    exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
    return exps;
}

McErrorPanel error_panel(std::span<const RunRecord> records, std::span<const std::size_t> k_grid)
{
    McErrorPanel panel;
    panel.k_grid.assign(k_grid.begin(), k_grid.end());
    panel.errors.assign(k_grid.size(), {});
    for (std::size_t g = 0; g < k_grid.size(); ++g)
    {
        panel.errors[g].reserve(records.size());
        for (const auto& rec : records)
        {
            panel.errors[g].push_back(rec.snapshots.at(g).theta_err);
        }
    }
    return panel;
}

LagSumPanel lag_panel(std::span<const RunRecord> records, std::span<const std::size_t> k_grid, std::size_t tau_index)
{
    LagSumPanel panel;
    panel.k_grid.assign(k_grid.begin(), k_grid.end());
    panel.lag_sums.assign(k_grid.size(), std::vector<double>(records.size(), 0.0));
    for (std::size_t g = 0; g < k_grid.size(); ++g)
    {
        for (std::size_t r = 0; r < records.size(); ++r)
        {
            panel.lag_sums[g][r] = records[r].snapshots.at(g).lag_sums.at(tau_index);
        }
    }
    return panel;
}

const KSummary& McSummary::at_k(std::size_t k) const
{
    for (const auto& s : per_k)
    {
        if (s.k == k)
        {
            return s;
        }
    }
    throw InvalidInput("summary has no entry for k = " + std::to_string(k));
}

const RateFit* McSummary::rate(const std::string& metric) const
{
    for (const auto& r : rates)
    {
        if (r.metric == metric)
        {
            return &r.fit;
        }
    }
    return nullptr;
}

const TauSummary* McSummary::tau(int t) const
{
    for (const auto& s : per_tau)
    {
        if (s.tau == t)
        {
            return &s;
        }
    }
    return nullptr;
}

McSummary summarize(const ExperimentConfig& config, std::span<const RunRecord> records,
                    const ReferenceStatistics& reference)
{
    if (records.empty())
    {
        throw InvalidInput("summarize: no run records");
    }
    for (const auto& rec : records)
    {
        if (rec.snapshots.size() != config.k_grid.size())
        {
            throw InvalidInput("summarize: run record does not match k_grid");
        }
    }
    const std::size_t runs = records.size();
    const double noise_var = config.system.noise_std * config.system.noise_std;
    const auto exponents = error_moment_exponents(config.gamma);
    const McErrorPanel panel = error_panel(records, config.k_grid);

    McSummary summary;
    summary.runs = runs;
    summary.k_grid = config.k_grid;
    summary.asymptotic_cov = reference.asymptotic_cov;
    summary.reference_excitation = reference.excitation_check;
    const auto directions = normality_directions(reference.asymptotic_cov);

    auto skip = [&](std::string note) {
        if (std::find(summary.skipped.begin(), summary.skipped.end(), note) == summary.skipped.end())
        {
            summary.skipped.push_back(std::move(note));
        }
    };

    for (std::size_t g = 0; g < config.k_grid.size(); ++g)
    {
        KSummary ks;
        ks.k = config.k_grid[g];
        for (double p : exponents)
        {
            std::vector<double> values(runs);
            for (std::size_t r = 0; r < runs; ++r)
            {
                values[r] = std::pow(panel.errors[g][r].norm(), p);
            }
            ks.metrics.push_back(mean_with_ci(exponent_label(p), values));
        }
        std::vector<double> traces(runs);
        for (std::size_t r = 0; r < runs; ++r)
        {
            traces[r] = records[r].snapshots[g].trace_P;
        }
        ks.metrics.push_back(mean_with_ci("trace_P", traces));

        const std::vector<Vector> scaled = panel.scaled(g);
        if (runs >= kMinCovarianceRuns)
        {
            ks.scaled_covariance = empirical_covariance(scaled);
        }
        else
        {
            skip("empirical_covariance: fewer than " + std::to_string(kMinCovarianceRuns) + " runs");
        }
        if (runs >= kMinCrlbRuns)
        {
            std::vector<Matrix> info;
            info.reserve(runs);
            for (const auto& rec : records)
            {
                info.push_back(rec.snapshots[g].information);
            }
            try
            {
                ks.scaled_crlb = static_cast<double>(ks.k) * crlb_from_information(info, ks.k, noise_var).sigma_cr;
                ks.crlb_vs_asymptotic = relative_frobenius(*ks.scaled_crlb, reference.asymptotic_cov);
                ks.metrics.push_back({"crlb_vs_asymptotic", *ks.crlb_vs_asymptotic, std::nullopt, std::nullopt});
            }
            catch (const DegenerateData& e)
            {
                skip(std::string("crlb at k=") + std::to_string(ks.k) + ": " + e.what());
            }
        }
        else
        {
            skip("crlb: fewer than " + std::to_string(kMinCrlbRuns) + " runs");
        }
        if (ks.scaled_covariance && ks.scaled_crlb)
        {
            ks.covariance_vs_crlb = relative_frobenius(*ks.scaled_covariance, *ks.scaled_crlb);
            ks.metrics.push_back({"covariance_vs_crlb", *ks.covariance_vs_crlb, std::nullopt, std::nullopt});
        }
        if (runs >= kMinNormalityRuns)
        {
            for (const auto& dir : directions)
            {
                const NormalityResult res = normality_test(scaled, dir.direction, reference.asymptotic_cov);
                ks.normality.push_back({dir.name, dir.direction, res});
                ks.metrics.push_back({"ks_" + dir.name, res.ks_stat, std::nullopt, std::nullopt});
            }
        }
        else
        {
            skip("normality_test: fewer than " + std::to_string(kMinNormalityRuns) + " runs");
        }
        summary.per_k.push_back(std::move(ks));
    }

    const bool rate_grid = config.k_grid.size() >= kMinRateGridPoints;
    if (rate_grid)
    {
        for (double p : exponents)
        {
            try
            {
                summary.rates.push_back({exponent_label(p), moment_rate(panel, p)});
            }
            catch (const DegenerateData& e)
            {
                skip(std::string("moment_rate: ") + e.what());
            }
        }
    }
    else
    {
        skip("rate fits: fewer than " + std::to_string(kMinRateGridPoints) + " grid points");
    }

    const std::size_t dev_runs = min_runs_for_deviation_gamma(config.deviation_gamma);
    for (std::size_t t = 0; t < config.taus.size(); ++t)
    {
        const int tau = config.taus[t];
        TauSummary ts;
        ts.tau = tau;
        const LagSumPanel lags = lag_panel(records, config.k_grid, t);
        if (runs >= dev_runs)
        {
            ts.deviation_moments = deviation_moments(lags, config.deviation_gamma);
            if (rate_grid)
            {
                try
                {
                    summary.rates.push_back(
                        {"deviation_moment_" + tau_label(tau), deviation_moment_rate(lags, config.deviation_gamma)});
                }
                catch (const DegenerateData& e)
                {
                    skip(std::string("deviation_moment_rate: ") + e.what());
                }
            }
        }
        else
        {
            skip("deviation moments: fewer than " + std::to_string(dev_runs) + " runs");
        }
        if (runs >= kMinTailRuns)
        {
            ts.tail = tail_probability(lags, config.tail_eps, config.deviation_gamma);
        }
        else
        {
            skip("tail_probability: fewer than " + std::to_string(kMinTailRuns) + " runs");
        }
        summary.per_tau.push_back(std::move(ts));
    }
    return summary;
}

json to_json(const McSummary& summary)
{
    json doc;
    doc["runs"] = summary.runs;
    doc["k_grid"] = summary.k_grid;
    doc["reference"] = json{{"asymptotic_cov", matrix_to_json(summary.asymptotic_cov)},
                            {"excitation_min_eig", summary.reference_excitation.min_eig},
                            {"excitation_threshold", summary.reference_excitation.threshold},
                            {"excited", summary.reference_excitation.excited}};
    json per_k = json::array();
    for (const auto& ks : summary.per_k)
    {
        json entry;
        entry["k"] = ks.k;
        json metrics = json::array();
        for (const auto& m : ks.metrics)
        {
            json row{{"metric", m.metric}, {"value", m.value}};
            row["ci_low"] = m.ci_low ? json(*m.ci_low) : json(nullptr);
            row["ci_high"] = m.ci_high ? json(*m.ci_high) : json(nullptr);
            metrics.push_back(std::move(row));
        }
        entry["metrics"] = std::move(metrics);
        entry["scaled_covariance"] = ks.scaled_covariance ? matrix_to_json(*ks.scaled_covariance) : json(nullptr);
        entry["scaled_crlb"] = ks.scaled_crlb ? matrix_to_json(*ks.scaled_crlb) : json(nullptr);
        entry["covariance_vs_crlb"] = ks.covariance_vs_crlb ? json(*ks.covariance_vs_crlb) : json(nullptr);
        entry["crlb_vs_asymptotic"] = ks.crlb_vs_asymptotic ? json(*ks.crlb_vs_asymptotic) : json(nullptr);
        json normality = json::array();
        for (const auto& n : ks.normality)
        {
            normality.push_back(json{{"direction_name", n.direction_name},
                                     {"direction", vector_to_json(n.direction)},
                                     {"ks_stat", n.result.ks_stat},
                                     {"critical", n.result.critical},
                                     {"pass", n.result.pass}});
        }
        entry["normality"] = std::move(normality);
        per_k.push_back(std::move(entry));
    }
    doc["per_k"] = std::move(per_k);

    json per_tau = json::array();
    for (const auto& ts : summary.per_tau)
    {
        json entry{{"tau", ts.tau}};
        entry["deviation_moments"] = ts.deviation_moments ? json(*ts.deviation_moments) : json(nullptr);
        if (ts.tail)
        {
            entry["tail"] = json{{"probability", ts.tail->probability}, {"markov_envelope", ts.tail->markov_envelope}};
        }
        else
        {
            entry["tail"] = nullptr;
        }
        per_tau.push_back(std::move(entry));
    }
    doc["per_tau"] = std::move(per_tau);

    json rates = json::array();
    for (const auto& r : summary.rates)
    {
        json entry = rate_to_json(r.fit);
        entry["metric"] = r.metric;
        rates.push_back(std::move(entry));
    }
    doc["rates"] = std::move(rates);
    doc["skipped"] = summary.skipped;
    return doc;
}

std::string rates_csv(const McSummary& summary)
{
    std::ostringstream out;
    out << "k,metric,value,ci_low,ci_high\n";
    auto row = [&](const std::string& k, const std::string& metric, double value, std::optional<double> lo,
                   std::optional<double> hi) {
        out << k << ',' << metric << ',' << format_double(value) << ',' << (lo ? format_double(*lo) : "") << ','
            << (hi ? format_double(*hi) : "") << '\n';
    };
    for (const auto& ks : summary.per_k)
    {
        for (const auto& m : ks.metrics)
        {
            row(std::to_string(ks.k), m.metric, m.value, m.ci_low, m.ci_high);
        }
    }
    for (const auto& ts : summary.per_tau)
    {
        for (std::size_t g = 0; g < summary.k_grid.size(); ++g)
        {
            const std::string k = std::to_string(summary.k_grid[g]);
            if (ts.deviation_moments)
            {
                row(k, "deviation_moment_" + tau_label(ts.tau), (*ts.deviation_moments)[g], std::nullopt, std::nullopt);
            }
            if (ts.tail)
            {
                const double p = ts.tail->probability[g];
                const double half = kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(summary.runs));
                row(k, "tail_probability_" + tau_label(ts.tau), p, std::max(0.0, p - half), std::min(1.0, p + half));
                row(k, "markov_envelope_" + tau_label(ts.tau), ts.tail->markov_envelope[g], std::nullopt,
                    std::nullopt);
            }
        }
    }
    for (const auto& r : summary.rates)
    {
        const double half = kZ95 * r.fit.slope_stderr;
        row("fit", "slope:" + r.metric, r.fit.slope, r.fit.slope - half, r.fit.slope + half);
        row("fit", "r_squared:" + r.metric, r.fit.r_squared, std::nullopt, std::nullopt);
    }
    return out.str();
}

std::string run_record_path(const std::string& output_dir, std::uint64_t run_id)
{
    return (std::filesystem::path(output_dir) / "runs" / ("run_" + std::to_string(run_id) + ".csv")).string();
}

std::string run_record_csv(const ExperimentConfig& config, const RunRecord& record)
{
    std::ostringstream out;
    out << '#' << run_header_comment(config, record) << '\n';
    const auto cols = run_columns(config);
    for (std::size_t i = 0; i < cols.size(); ++i)
    {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& s : record.snapshots)
    {
        out << s.k;
        for (Eigen::Index i = 0; i < s.theta_hat.size(); ++i)
        {
            out << ',' << format_double(s.theta_hat[i]);
        }
        for (Eigen::Index i = 0; i < s.theta_err.size(); ++i)
        {
            out << ',' << format_double(s.theta_err[i]);
        }
        out << ',' << format_double(s.trace_P);
        for (Eigen::Index i = 0; i < s.information.rows(); ++i)
        {
            for (Eigen::Index j = 0; j < s.information.cols(); ++j)
            {
                out << ',' << format_double(s.information(i, j));
            }
        }
        for (double v : s.lag_sums)
        {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    return out.str();
}

void write_run_record(const ExperimentConfig& config, const RunRecord& record)
{
    write_text_file(run_record_path(config.output_dir, record.run_id), run_record_csv(config, record));
}

std::optional<RunRecord> read_run_record(const ExperimentConfig& config, std::uint64_t run_id)
{
    const std::string path = run_record_path(config.output_dir, run_id);
    if (!std::filesystem::exists(path))
    {
        return std::nullopt;
    }
    const CsvDocument doc = read_csv(path);
    RunRecord record;
    record.run_id = run_id;
    record.input_seed = derive_seed(config.master_seed, run_id, Stream::input);
    record.noise_seed = derive_seed(config.master_seed, run_id, Stream::noise);
    if (doc.comments.size() != 1 || doc.comments.front() != run_header_comment(config, record))
    {
        return std::nullopt;
    }
    if (doc.header != run_columns(config))
    {
        throw IoError("run record " + path + ": unexpected columns");
    }
    if (doc.rows.size() != config.k_grid.size())
    {
        throw IoError("run record " + path + ": expected one row per k_grid entry");
    }
    const auto p = static_cast<Eigen::Index>(config.system.dim());
    for (std::size_t g = 0; g < doc.rows.size(); ++g)
    {
        const auto& row = doc.rows[g];
        std::size_t c = 0;
        Snapshot s;
        s.k = static_cast<std::size_t>(std::stoull(row[c++]));
        if (s.k != config.k_grid[g])
        {
            throw IoError("run record " + path + ": k column does not match k_grid");
        }
        s.theta_hat.resize(p);
        s.theta_err.resize(p);
        s.information.resize(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
        {
            s.theta_hat[i] = parse_double(row[c++]);
        }
        for (Eigen::Index i = 0; i < p; ++i)
        {
            s.theta_err[i] = parse_double(row[c++]);
        }
        s.trace_P = parse_double(row[c++]);
        for (Eigen::Index i = 0; i < p; ++i)
        {
            for (Eigen::Index j = 0; j < p; ++j)
            {
                s.information(i, j) = parse_double(row[c++]);
            }
        }
        for (std::size_t t = 0; t < config.taus.size(); ++t)
        {
            s.lag_sums.push_back(parse_double(row[c++]));
        }
        record.snapshots.push_back(std::move(s));
    }
    return record;
}

void write_summary_outputs(const ExperimentConfig& config, const McSummary& summary,
                           const ReferenceStatistics& reference)
{
    const std::filesystem::path dir(config.output_dir);
    write_text_file((dir / "summary.json").string(), to_json(summary).dump(2) + "\n");
    write_text_file((dir / "covariances.csv").string(), covariance_csv(reference.table));
    write_text_file((dir / "rates.csv").string(), rates_csv(summary));
}

McSummary run_experiment(const ExperimentConfig& config, RunOptions options)
{
    config.validate();
    const StabilityReport stability = check_stability(config.system.a_coeffs);
    if (!stability.stable)
    {
        throw InvalidInput("run_experiment: system is unstable (min root modulus " +
                           format_double(stability.min_root_modulus) + ")");
    }
    const ExcitationCheck pilot = pilot_excitation(config);
    if (!pilot.excited)
    {
        throw DegenerateData("run_experiment: pilot trajectory is not persistently exciting (min eigenvalue " +
                             format_double(pilot.min_eig) + " <= " + format_double(pilot.threshold) + ")");
    }

    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir / "runs");
    write_text_file((dir / "config.json").string(), to_json(config).dump(2) + "\n");

    const auto ids = all_run_ids(config);
    std::vector<std::optional<RunRecord>> slots(ids.size());
    std::vector<std::uint64_t> missing;
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
        slots[i] = read_run_record(config, ids[i]);
        if (!slots[i])
        {
            missing.push_back(ids[i]);
        }
    }
    const RunCallback persist = [&config](const RunRecord& rec) { write_run_record(config, rec); };
    std::vector<RunRecord> fresh = options.serial ? execute_runs_serial(config, missing, persist)
                                                  : execute_runs_parallel(config, missing, options.threads, persist);
    for (auto& rec : fresh)
    {
        slots[static_cast<std::size_t>(rec.run_id)] = std::move(rec);
    }
    std::vector<RunRecord> records;
    records.reserve(slots.size());
    for (auto& slot : slots)
    {
        records.push_back(std::move(*slot));
    }

    const ReferenceStatistics reference = reference_statistics(config);
    McSummary summary = summarize(config, records, reference);
    write_summary_outputs(config, summary, reference);
    return summary;
}

McSummary analyze(const ExperimentConfig& config)
{
    config.validate();
    std::vector<RunRecord> records;
    records.reserve(config.runs);
    for (std::uint64_t id : all_run_ids(config))
    {
        auto rec = read_run_record(config, id);
        if (!rec)
        {
            throw IoError("analyze: run record " + run_record_path(config.output_dir, id) +
                          " is missing or belongs to a different configuration");
        }
        records.push_back(std::move(*rec));
    }
    const ReferenceStatistics reference = reference_statistics(config);
    McSummary summary = summarize(config, records, reference);
    write_summary_outputs(config, summary, reference);
    return summary;
}

} // namespace arxrls
