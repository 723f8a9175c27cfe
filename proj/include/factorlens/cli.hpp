#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

namespace factorlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

inline constexpr unsigned long long kDefaultSeed = 20240601;

/// Entry point of the `factorlens` executable; returns the process exit code.
int run_cli(int argc, const char* const* argv);

/// Parses "start:step:stop" (inclusive, step may be negative) into grid values.
std::vector<double> parse_range(std::string_view spec);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace factorlens::cli
