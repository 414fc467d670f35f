#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "arxrls/config.hpp"
#include "arxrls/csv.hpp"
#include "arxrls/invariant_check.hpp"
#include "arxrls/mc_harness.hpp"
#include "arxrls/rls_estimator.hpp"

namespace {

using namespace arxrls;

struct CommonFlags
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> runs;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags)
{
    cmd->add_option("--config", flags.config_path, "JSON experiment configuration");
    cmd->add_option("--seed", flags.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", flags.out, "Output directory (overrides the config)");
    cmd->add_option("--runs", flags.runs, "Number of Monte Carlo runs (overrides the config)");
}

ExperimentConfig resolve_config(const CommonFlags& flags)
{
    ExperimentConfig config = flags.config_path.empty() ? default_experiment() : load_config(flags.config_path);
    if (flags.seed)
    {
        config.master_seed = *flags.seed;
    }
    if (flags.out)
    {
        config.output_dir = *flags.out;
    }
    if (flags.runs)
    {
        config.runs = *flags.runs;
    }
    config.validate();
    return config;
}

std::string join(const std::filesystem::path& dir, const char* name)
{
    return (dir / name).string();
}

int cmd_simulate(const CommonFlags& flags)
{
    const ExperimentConfig config = resolve_config(flags);
    const Trajectory traj = simulate_run_trajectory(config, 0, config.trajectory_horizon());
    const std::string path = join(config.output_dir, "trajectory.csv");
    write_trajectory_csv(path, traj);
    std::cout << "wrote " << path << " (" << traj.horizon() << " steps)\n";
    return 0;
}

int cmd_estimate(const CommonFlags& flags, std::string trajectory_path)
{
    const ExperimentConfig config = resolve_config(flags);
    if (trajectory_path.empty())
    {
        trajectory_path = join(config.output_dir, "trajectory.csv");
    }
    if (!std::filesystem::exists(trajectory_path))
    {
        throw InvalidInput("trajectory file not found: " + trajectory_path);
    }
    const Trajectory traj = read_trajectory_csv(trajectory_path);
    const ModelOrders orders = config.system.orders();
    const Vector theta = config.system.theta();
    const std::size_t p = orders.dim();

    std::ostringstream out;
    out << 'k';
    for (std::size_t i = 1; i <= p; ++i)
    {
        out << ",theta_hat_" << i;
    }
    out << ",trace_P,err_norm\n";
    auto emit = [&](const RlsState& s) {
        out << s.k;
        for (Eigen::Index i = 0; i < s.theta_hat.size(); ++i)
        {
            out << ',' << format_double(s.theta_hat[i]);
        }
        out << ',' << format_double(s.P.trace()) << ',' << format_double((s.theta_hat - theta).norm()) << '\n';
    };

    const RlsConfig rls = config.rls_config();
    RlsEstimator estimator(rls);
    emit(estimator.state());
    Vector phi(static_cast<Eigen::Index>(p));
    for (std::size_t k = 1; k <= traj.horizon(); ++k)
    {
        fill_regressor(traj, k, orders, phi);
        estimator.update(phi, traj.output(static_cast<long>(k)));
        emit(estimator.state());
    }
    const std::string path = join(config.output_dir, "estimate.csv");
    write_text_file(path, out.str());
    std::cout << "wrote " << path << " (final err_norm "
              << format_double((estimator.state().theta_hat - theta).norm()) << ")\n";
    return 0;
}

int cmd_montecarlo(const CommonFlags& flags, int threads, bool serial)
{
    const ExperimentConfig config = resolve_config(flags);
    const McSummary summary = run_experiment(config, RunOptions{threads, serial});
    std::cout << "runs " << summary.runs << ", k_max " << config.k_max() << ", outputs in " << config.output_dir
              << "\n";
    for (const auto& r : summary.rates)
    {
        std::cout << "  slope " << r.metric << " = " << format_double(r.fit.slope) << " (r2 "
                  << format_double(r.fit.r_squared) << ")\n";
    }
    for (const auto& s : summary.skipped)
    {
        std::cout << "  skipped: " << s << "\n";
    }
    return 0;
}

int cmd_analyze(const CommonFlags& flags)
{
    CommonFlags resolved = flags;
    if (resolved.config_path.empty())
    {
        const std::string dir = flags.out.value_or(default_experiment().output_dir);
        resolved.config_path = join(dir, "config.json");
    }
    const ExperimentConfig config = resolve_config(resolved);
    const McSummary summary = analyze(config);
    std::cout << "re-aggregated " << summary.runs << " runs from " << config.output_dir << "\n";
    return 0;
}

int cmd_check(const CommonFlags& flags, std::size_t trajectories)
{
    ExperimentConfig config = resolve_config(flags);
    if (config.horizon == 0)
    {
        config.horizon = 1000;
    }
    const RlsConfig rls = config.rls_config();
    InvariantReport report;
    for (std::size_t i = 0; i < trajectories; ++i)
    {
        const Trajectory traj = simulate_run_trajectory(config, i, config.horizon);
        report.merge(check_trajectory_invariants(config.system, traj, rls, config.horizon));
    }
    std::cout << "trajectories " << report.trajectories << ", steps " << report.steps << "\n"
              << "max oracle gap (inf-norm)        " << format_double(report.max_oracle_gap) << "\n"
              << "max oracle gap (relative)        " << format_double(report.max_oracle_gap_relative) << "\n"
              << "max Woodbury residual            " << format_double(report.max_woodbury_residual) << "\n"
              << "max error-representation residual " << format_double(report.max_error_decomposition_residual)
              << "\n"
              << "min eig(P_{k-1} - P_k)           " << format_double(report.min_p_decrease_eig) << "\n"
              << "gain range                       [" << format_double(report.min_gain) << ", "
              << format_double(report.max_gain) << "]\n"
              << "ill-conditioned steps            " << report.ill_conditioned_steps << "\n";
    const bool ok = report.passed();
    std::cout << (ok ? "invariants hold" : "invariant violation") << "\n";
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Recursive least-squares identification of ARX systems"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string trajectory_path;
    int threads = 0;
    bool serial = false;
    std::size_t trajectories = 10;

    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one trajectory to <out>/trajectory.csv");
    auto* estimate_cmd = app.add_subcommand("estimate", "RLS trace of a trajectory to <out>/estimate.csv");
    auto* montecarlo_cmd = app.add_subcommand("montecarlo", "Run (or resume) the Monte Carlo experiment");
    auto* analyze_cmd = app.add_subcommand("analyze", "Recompute summaries from persisted run records");
    auto* check_cmd = app.add_subcommand("check", "Run the algebraic invariant suite");
    for (auto* cmd : {simulate_cmd, estimate_cmd, montecarlo_cmd, analyze_cmd, check_cmd})
    {
        add_common_flags(cmd, flags);
    }
    estimate_cmd->add_option("--trajectory", trajectory_path, "Trajectory CSV (default <out>/trajectory.csv)");
    montecarlo_cmd->add_option("--threads", threads, "Worker threads (default ARXRLS_THREADS or all cores)");
    montecarlo_cmd->add_flag("--serial", serial, "Use the single-threaded reference kernel");
    check_cmd->add_option("--trajectories", trajectories, "Number of seeded trajectories")
        ->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try
    {
        if (*simulate_cmd)
        {
            return cmd_simulate(flags);
        }
        if (*estimate_cmd)
        {
            return cmd_estimate(flags, trajectory_path);
        }
        if (*montecarlo_cmd)
        {
            return cmd_montecarlo(flags, threads, serial);
        }
        if (*analyze_cmd)
        {
            return cmd_analyze(flags);
        }
        return cmd_check(flags, trajectories);
    }
    catch (const InvalidInput& e)
    {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    }
    catch (const DegenerateData& e)
    {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
