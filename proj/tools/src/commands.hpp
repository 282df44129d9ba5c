#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netoed::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kInfeasible = 3, kNumerical = 4 };

struct Options {
    std::filesystem::path config;
    std::optional<std::filesystem::path> bundle;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> catalog;  // fit
    std::optional<std::string> event;              // synth: "lat,lon,depth_km,mag"
};

int cmd_fit(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_analyze(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_optimize(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_synth(const Options& opt, std::ostream& out, std::ostream& err);

/// Parses argv, dispatches to a subcommand and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netoed::cli
