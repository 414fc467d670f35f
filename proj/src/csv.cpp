#include "arxrls/csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace arxrls {

std::string format_double(double value)
{
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

double parse_double(std::string_view text)
{
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    {
        throw IoError("csv: cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos)
        {
            break;
        }
        start = comma + 1;
    }
    return out;
}

CsvDocument read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("csv: cannot open " + path);
    }
    CsvDocument doc;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
        {
            line.pop_back();
        }
        if (line.empty())
        {
            continue;
        }
        if (!have_header && line.front() == '#')
        {
            doc.comments.push_back(line.substr(1));
            continue;
        }
        if (!have_header)
        {
            doc.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != doc.header.size())
        {
            throw IoError("csv: " + path + " has a row with " + std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(doc.header.size()));
        }
        doc.rows.push_back(std::move(fields));
    }
    if (!have_header)
    {
        throw IoError("csv: " + path + " has no header");
    }
    return doc;
}

void write_text_file(const std::string& path, const std::string& contents)
{
    const std::filesystem::path target(path);
    if (target.has_parent_path())
    {
        std::filesystem::create_directories(target.parent_path());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
        {
            throw IoError("cannot write " + tmp);
        }
        out << contents;
        if (!out)
        {
            throw IoError("write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec)
    {
        throw IoError("cannot rename " + tmp + ": " + ec.message());
    }
}

std::string trajectory_csv(const Trajectory& traj)
{
    std::ostringstream out;
    out << "k,y,u,d\n";
    for (std::size_t k = 0; k <= traj.horizon(); ++k)
    {
        const double y = traj.output(static_cast<long>(k));
        const double d = (k >= 1 && traj.has_noise_record()) ? traj.d[k - 1] : 0.0;
        out << k << ',' << format_double(y) << ',' << format_double(traj.input(static_cast<long>(k))) << ','
            << format_double(d) << '\n';
    }
    return out.str();
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj)
{
    write_text_file(path, trajectory_csv(traj));
}

Trajectory read_trajectory_csv(const std::string& path)
{
    const CsvDocument doc = read_csv(path);
    if (doc.header != std::vector<std::string>{"k", "y", "u", "d"})
    {
        throw IoError("trajectory csv " + path + ": header must be k,y,u,d");
    }
    if (doc.rows.size() < 2)
    {
        throw IoError("trajectory csv " + path + ": needs rows k = 0..K with K >= 1");
    }
    Trajectory traj;
    for (std::size_t i = 0; i < doc.rows.size(); ++i)
    {
        const auto& row = doc.rows[i];
        if (row[0] != std::to_string(i))
        {
            throw IoError("trajectory csv " + path + ": rows must be k = 0, 1, 2, ... in order");
        }
        traj.u.push_back(parse_double(row[2]));
        if (i >= 1)
        {
            traj.y.push_back(parse_double(row[1]));
            traj.d.push_back(parse_double(row[3]));
        }
    }
    return traj;
}

std::string covariance_csv(const CovarianceTable& table)
{
    std::ostringstream out;
    out << "tau,Ryy,Ruu,Ryu\n";
    for (int tau = -table.tau_max; tau <= table.tau_max; ++tau)
    {
        out << tau << ',' << format_double(table.Ryy(tau)) << ',' << format_double(table.Ruu(tau)) << ','
            << format_double(table.Ryu(tau)) << '\n';
    }
    return out.str();
}

} // namespace arxrls
