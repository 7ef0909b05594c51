#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dimperf {

inline constexpr std::string_view kVersion = "1.0.0";

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `dimperf` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for the digests in CSV metadata lines.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);

/// "# dimperf <version> seed=<seed> digest=<16 hex digits>"
std::string csv_metadata_line(std::uint64_t seed, std::uint64_t digest);

/// "a:b:step" (inclusive range) or a comma separated list.
std::vector<double> parse_number_list(std::string_view text);

/// Files in the pattern's directory whose names match its last component
/// (`*` and `?` wildcards), sorted. A pattern without wildcards is returned
/// as is.
std::vector<std::string> expand_glob(const std::string& pattern);

}  // namespace dimperf
