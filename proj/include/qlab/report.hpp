// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace qlab {

/// One experiment outcome, serialised verbatim into report.json.
struct ExperimentReport {
    std::string experiment;
    std::string model_digest;
    std::string fixture_digest;
    long n = 0;
    long M = 0;
    std::uint64_t seed = 0;
    std::string seed_path;
    std::string statistic;
    double estimate = 0.0;
    double standard_error = 0.0;
    std::optional<double> test_statistic;
    std::optional<double> p_value;
    std::string verdict;
    nlohmann::json details = nlohmann::json::object();

    [[nodiscard]] bool passed() const { return verdict == "pass" || verdict == "degenerate"; }
};

nlohmann::json to_json(const ExperimentReport& report);

}  // namespace qlab
