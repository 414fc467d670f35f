#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "arxrls/arx_model.hpp"
#include "arxrls/quasi_stationary_stats.hpp"

namespace arxrls {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

struct CsvDocument
{
    /// Leading lines starting with '#', without the marker.
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvDocument read_csv(const std::string& path);

/// Writes to path + ".tmp" and renames, so readers never see partial files.
void write_text_file(const std::string& path, const std::string& contents);

/// Header k,y,u,d with rows k = 0..K (y_0 = d_0 = 0 by convention).
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

/// Header tau,Ryy,Ruu,Ryu with tau = -tau_max..tau_max.
std::string covariance_csv(const CovarianceTable& table);

} // namespace arxrls
