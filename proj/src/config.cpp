#include "arxrls/config.hpp"

#include <fstream>
#include <set>

namespace arxrls {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{
    "schema_version", "a_coeffs", "b_coeffs",      "noise_std", "input",     "truncation_length",
    "estimator",      "runs",     "k_grid",        "gamma",     "deviation_gamma", "taus",
    "tail_eps",       "master_seed", "output_dir", "reference_horizon", "horizon"};
const std::set<std::string> kInputKeys{"kind",     "amplitude", "frequency",      "level",
                                       "filter",   "feedthrough", "e_std",        "e_distribution",
                                       "e_moment_order"};
const std::set<std::string> kEstimatorKeys{"p0_scale", "P0", "theta0", "projection_radius"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    for (const auto& item : obj.items())
    {
        if (!allowed.count(item.key()))
        {
            throw InvalidInput("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key))
    {
        return fallback;
    }
    try
    {
        return obj.at(key).get<T>();
    }
    catch (const json::exception& e)
    {
        throw InvalidInput(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

Matrix matrix_from_json(const json& j, const char* what)
{
    if (!j.is_array())
    {
        throw InvalidInput(std::string("config: ") + what + " must be an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix m(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i)
    {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
        {
            throw InvalidInput(std::string("config: ") + what + " must be square");
        }
        for (Eigen::Index c = 0; c < rows; ++c)
        {
            m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

} // namespace

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
        {
            row.push_back(m(i, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        out.push_back(v[i]);
    }
    return out;
}

RlsConfig ExperimentConfig::rls_config() const
{
    const std::size_t dim = system.dim();
    RlsConfig config = RlsConfig::defaults(dim, estimator.p0_scale);
    if (estimator.P0)
    {
        config.P0 = *estimator.P0;
    }
    if (estimator.theta0)
    {
        config.theta0 = *estimator.theta0;
    }
    if (estimator.projection_radius)
    {
        config.projection = Projection{*estimator.projection_radius};
    }
    return config;
}

void ExperimentConfig::validate() const
{
    system.validate();
    input.validate();
    if (!(estimator.p0_scale > 0.0))
    {
        throw InvalidInput("config: estimator.p0_scale must be positive");
    }
    rls_config().validate();
    if (runs < 1)
    {
        throw InvalidInput("config: runs must be at least 1");
    }
    if (k_grid.empty())
    {
        throw InvalidInput("config: k_grid must not be empty");
    }
    for (std::size_t g = 0; g < k_grid.size(); ++g)
    {
        if (k_grid[g] == 0 || (g > 0 && k_grid[g] <= k_grid[g - 1]))
        {
            throw InvalidInput("config: k_grid must be positive and strictly increasing");
        }
    }
    if (gamma < 1)
    {
        throw InvalidInput("config: gamma must be at least 1");
    }
    if (deviation_gamma != 1 && deviation_gamma != 2)
    {
        throw InvalidInput("config: deviation_gamma must be 1 or 2");
    }
    if (!(tail_eps > 0.0))
    {
        throw InvalidInput("config: tail_eps must be positive");
    }
    if (reference_horizon < 10 * std::max<std::size_t>(1, std::max(system.a_coeffs.size(), system.b_coeffs.size())))
    {
        throw InvalidInput("config: reference_horizon too short");
    }
}

ExperimentConfig default_experiment()
{
    return ExperimentConfig{};
}

ExperimentConfig parse_config(const json& doc)
{
    if (!doc.is_object())
    {
        throw InvalidInput("config: top level must be an object");
    }
    reject_unknown(doc, kTopLevelKeys, "config");
    const int version = get_or<int>(doc, "schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion)
    {
        throw InvalidInput("config: unsupported schema_version " + std::to_string(version));
    }

    ExperimentConfig cfg;
    cfg.system.a_coeffs = get_or<std::vector<double>>(doc, "a_coeffs", cfg.system.a_coeffs);
    cfg.system.b_coeffs = get_or<std::vector<double>>(doc, "b_coeffs", cfg.system.b_coeffs);
    cfg.system.noise_std = get_or<double>(doc, "noise_std", cfg.system.noise_std);
    cfg.input.truncation_length = get_or<std::size_t>(doc, "truncation_length", cfg.input.truncation_length);

    if (doc.contains("input"))
    {
        const json& in = doc.at("input");
        if (!in.is_object())
        {
            throw InvalidInput("config: input must be an object");
        }
        reject_unknown(in, kInputKeys, "input");
        const std::string kind = get_or<std::string>(in, "kind", "sinusoid");
        if (kind == "sinusoid")
        {
            cfg.input.deterministic =
                Sinusoid{get_or<double>(in, "amplitude", 1.0), get_or<double>(in, "frequency", 1.7)};
        }
        else if (kind == "constant")
        {
            cfg.input.deterministic = ConstantSignal{get_or<double>(in, "level", 1.0)};
        }
        else if (kind == "zero")
        {
            cfg.input.deterministic = ZeroSignal{};
        }
        else
        {
            throw InvalidInput("config: input.kind must be zero, sinusoid or constant");
        }
        cfg.input.input_filter = get_or<std::vector<double>>(in, "filter", cfg.input.input_filter);
        cfg.input.noise_feedthrough_filter =
            get_or<std::vector<double>>(in, "feedthrough", cfg.input.noise_feedthrough_filter);
        cfg.input.e_std = get_or<double>(in, "e_std", cfg.input.e_std);
        cfg.input.e_moment_order = get_or<int>(in, "e_moment_order", cfg.input.e_moment_order);
        const std::string dist = get_or<std::string>(in, "e_distribution", "gaussian");
        if (dist == "gaussian")
        {
            cfg.input.e_distribution = NoiseDistribution::gaussian;
        }
        else if (dist == "uniform")
        {
            cfg.input.e_distribution = NoiseDistribution::uniform;
        }
        else
        {
            throw InvalidInput("config: input.e_distribution must be gaussian or uniform");
        }
    }

    if (doc.contains("estimator"))
    {
        const json& est = doc.at("estimator");
        if (!est.is_object())
        {
            throw InvalidInput("config: estimator must be an object");
        }
        reject_unknown(est, kEstimatorKeys, "estimator");
        cfg.estimator.p0_scale = get_or<double>(est, "p0_scale", cfg.estimator.p0_scale);
        if (est.contains("P0"))
        {
            cfg.estimator.P0 = matrix_from_json(est.at("P0"), "estimator.P0");
        }
        if (est.contains("theta0"))
        {
            const auto values = get_or<std::vector<double>>(est, "theta0", {});
            cfg.estimator.theta0 = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
        }
        if (est.contains("projection_radius"))
        {
            cfg.estimator.projection_radius = get_or<double>(est, "projection_radius", 0.0);
        }
    }

    cfg.runs = get_or<std::size_t>(doc, "runs", cfg.runs);
    cfg.k_grid = get_or<std::vector<std::size_t>>(doc, "k_grid", cfg.k_grid);
    cfg.gamma = get_or<int>(doc, "gamma", cfg.gamma);
    cfg.deviation_gamma = get_or<int>(doc, "deviation_gamma", cfg.deviation_gamma);
    cfg.taus = get_or<std::vector<int>>(doc, "taus", cfg.taus);
    cfg.tail_eps = get_or<double>(doc, "tail_eps", cfg.tail_eps);
    cfg.master_seed = get_or<std::uint64_t>(doc, "master_seed", cfg.master_seed);
    cfg.output_dir = get_or<std::string>(doc, "output_dir", cfg.output_dir);
    cfg.reference_horizon = get_or<std::size_t>(doc, "reference_horizon", cfg.reference_horizon);
    cfg.horizon = get_or<std::size_t>(doc, "horizon", cfg.horizon);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw InvalidInput("config: cannot open " + path);
    }
    json doc;
    try
    {
        in >> doc;
    }
    catch (const json::exception& e)
    {
        throw InvalidInput("config: " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg)
{
    json input;
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sinusoid>)
            {
                input["kind"] = "sinusoid";
                input["amplitude"] = s.amplitude;
                input["frequency"] = s.angular_frequency;
            }
            else if constexpr (std::is_same_v<S, ConstantSignal>)
            {
                input["kind"] = "constant";
                input["level"] = s.level;
            }
            else
            {
                input["kind"] = "zero";
            }
        },
        cfg.input.deterministic);
    input["filter"] = cfg.input.input_filter;
    input["feedthrough"] = cfg.input.noise_feedthrough_filter;
    input["e_std"] = cfg.input.e_std;
    input["e_distribution"] = cfg.input.e_distribution == NoiseDistribution::gaussian ? "gaussian" : "uniform";
    input["e_moment_order"] = cfg.input.e_moment_order;

    json est;
    est["p0_scale"] = cfg.estimator.p0_scale;
    if (cfg.estimator.P0)
    {
        est["P0"] = matrix_to_json(*cfg.estimator.P0);
    }
    if (cfg.estimator.theta0)
    {
        est["theta0"] = vector_to_json(*cfg.estimator.theta0);
    }
    if (cfg.estimator.projection_radius)
    {
        est["projection_radius"] = *cfg.estimator.projection_radius;
    }

    json doc;
    doc["schema_version"] = kConfigSchemaVersion;
    doc["a_coeffs"] = cfg.system.a_coeffs;
    doc["b_coeffs"] = cfg.system.b_coeffs;
    doc["noise_std"] = cfg.system.noise_std;
    doc["input"] = std::move(input);
    doc["truncation_length"] = cfg.input.truncation_length;
    doc["estimator"] = std::move(est);
    doc["runs"] = cfg.runs;
    doc["k_grid"] = cfg.k_grid;
    doc["gamma"] = cfg.gamma;
    doc["deviation_gamma"] = cfg.deviation_gamma;
    doc["taus"] = cfg.taus;
    doc["tail_eps"] = cfg.tail_eps;
    doc["master_seed"] = cfg.master_seed;
    doc["output_dir"] = cfg.output_dir;
    doc["reference_horizon"] = cfg.reference_horizon;
    doc["horizon"] = cfg.horizon;
    return doc;
}

std::uint64_t run_content_hash(const ExperimentConfig& config)
{
    json doc = to_json(config);
    doc.erase("runs");
    doc.erase("output_dir");
    doc.erase("horizon");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace arxrls
