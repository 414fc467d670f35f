#pragma once

#include <cstdint>

namespace arxrls {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent random streams used by one Monte Carlo run.
enum class Stream : std::uint64_t
{
    input = 0,  // e_k driving the input generator
    noise = 1,  // d_k entering the ARX equation
};

/// Counter-based seed: a pure function of (master, run_id, stream), so any
/// run can be regenerated without touching the others.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_id, Stream stream)
{
    const std::uint64_t key = splitmix64(master ^ splitmix64(run_id));
    return splitmix64(key + static_cast<std::uint64_t>(stream));
}

/// Reserved run ids for auxiliary trajectories that are not Monte Carlo runs.
inline constexpr std::uint64_t kReferenceRunId = ~std::uint64_t{0};
inline constexpr std::uint64_t kPilotRunId = ~std::uint64_t{0} - 1;

} // namespace arxrls
