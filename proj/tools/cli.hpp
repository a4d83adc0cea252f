#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace loopforge::cli {

enum class Subcommand { run, compare, sweep, gradcheck, export_series };

struct CliInvocation {
    Subcommand subcommand = Subcommand::run;
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::filesystem::path trace; // export only
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    bool quiet = false;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Runs one parsed invocation. Diagnostics go to `err`, progress to `out`.
int dispatch(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

// Parses argv and dispatches. Usage errors exit with kExitConfig.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace loopforge::cli
