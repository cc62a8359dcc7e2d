#pragma once

// Experiment runner behind the command-line tool.

#include "lapdual/config.hpp"

#include <string>
#include <vector>

namespace lapdual {

inline constexpr int kExitPass = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitStatFail = 2;

struct RunOutcome {
    bool pass = false;
    /// key=value lines, ending with result=pass or result=fail.
    std::string summary;
    std::string report_csv;
    /// Empty unless a plot was requested.
    std::string plot_svg;
};

/// Runs the experiment without touching the file system.
RunOutcome run_experiment(const ExperimentConfig& cfg, bool plot = false);

/// Writes <prefix>_report.csv, <prefix>_summary.txt and optionally
/// <prefix>_plot.svg; the prefix is cfg.output or the config name.
/// Returns the paths written.
std::vector<std::string> write_outcome(const ExperimentConfig& cfg, const RunOutcome& outcome);

/// One config per acceptance criterion.
const std::vector<ExperimentConfig>& catalog();

/// Catalog entry by name, or nullptr.
const ExperimentConfig* find_in_catalog(const std::string& name);

}  // namespace lapdual
