#pragma once

// Command execution, artifact naming and sweep orchestration behind the
// `sivsim` executable.

#include <string>
#include <utility>
#include <vector>

#include "siv/config.hpp"

namespace siv {

struct Artifact {
    std::string name;  ///< file name, no directory
    std::string content;
};

struct RunOutput {
    std::vector<Artifact> artifacts;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> warnings;
};

/// Computes everything for cfg without touching the filesystem.
RunOutput execute(const RunConfig& cfg);

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_numerical = 3 };

/// Output directory: the explicit argument, else $SIVSIM_OUTPUT_DIR, else cfg.output_dir.
std::string resolve_output_dir(const RunConfig& cfg, const std::string& explicit_dir);

/// Executes cfg and writes its artifacts; returns an ExitCode. Messages go to `log`.
int run(const RunConfig& cfg, const std::string& out_dir, std::string* log = nullptr);

struct SweepTable {
    std::string axis;
    std::vector<std::string> values;
    std::vector<std::vector<std::pair<std::string, double>>> rows;

    std::string to_csv() const;
};

/// One row per value in input order; `jobs` worker threads.
SweepTable sweep(const RunConfig& cfg, const std::string& axis, const std::vector<std::string>& values,
                 int jobs);

/// Full command-line entry point.
int run_cli(int argc, const char* const* argv);

}  // namespace siv
