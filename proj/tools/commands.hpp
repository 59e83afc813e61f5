#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"

namespace tcmpc::app {

enum ExitCode : int { kOk = 0, kUsageError = 1, kIoError = 2 };

/// Writes `<out>/<name>` with the resolved configuration, seed, version,
/// start time and the paths the command will produce.
void write_manifest(const std::filesystem::path& path, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& outputs);

int run_simulate(const RunConfig& cfg);
int run_campaign_command(const RunConfig& cfg);
int run_compare_openloop(const RunConfig& cfg);
/// Re-summarizes `<dir>/trials` into `<dir>/report_summary.json`.
int run_report(const std::filesystem::path& dir);

/// Parses argv, loads and overrides the configuration, runs the subcommand.
int dispatch(int argc, const char* const* argv);

}  // namespace tcmpc::app
