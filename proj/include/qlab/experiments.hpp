// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qlab {

/// Exit codes of a run.
enum ExitCode : int { kExitPass = 0, kExitStatisticalFailure = 2, kExitInvalidInput = 3 };

struct RunConfig {
    std::filesystem::path model_path;
    std::string experiment;
    int n = 4096;
    long reps = 5000;
    int fixtures = 10;
    std::optional<std::uint64_t> seed;
    std::string functional = "endpoint";
    std::vector<int> Ns{256, 1024, 4096};
    std::optional<int> order;  // nullopt = infinity
    std::optional<int> horizon;
    long reference_reps = 100000;
    double alpha = 0.01;
    // Distribution experiments: when set, a fixture passes on D < this value
    // instead of p >= alpha (the p-value is still reported).
    std::optional<double> ks_max_statistic;
    double pass_fraction = 0.9;
    int truncation = 1000;
    int n_max = 3;
    int inner = 8;
    int random_functions = 20;
    std::filesystem::path out_dir = "out";
    unsigned workers = 1;  // never part of the outputs

    /// Everything that influences results (workers and out_dir excluded).
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws std::invalid_argument on unknown keys or bad values.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

struct ExperimentInfo {
    std::string name;
    std::string description;
};

const std::vector<ExperimentInfo>& list_experiments();

struct RunResult {
    int exit_code = kExitPass;
    std::string message;
    nlohmann::json report;  // contents of report.json
};

/// Runs one experiment and writes report.json plus CSV artifacts into
/// config.out_dir. Invalid input and I/O failures give exit code 3 with a
/// diagnostic in `message`; they never throw.
RunResult run(const RunConfig& config);

/// Runs every entry of a suite file:
///   {"seed": 42, "runs": [{"name": "...", "experiment": "...", "model": "m.json", ...}]}
/// Each run writes into out_dir/<name>/ and a summary.json is written at the top.
RunResult run_suite(const std::filesystem::path& suite_path, const std::filesystem::path& out_dir,
                    unsigned workers, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace qlab
