// SPDX-License-Identifier: Apache-2.0
#include "qlab/report.hpp"

namespace qlab {

nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json out = nlohmann::json::object();
    out["experiment"] = r.experiment;
    out["model_digest"] = r.model_digest;
    out["fixture_digest"] = r.fixture_digest;
    out["n"] = r.n;
    out["M"] = r.M;
    out["seed"] = r.seed;
    out["seed_path"] = r.seed_path;
    out["statistic"] = r.statistic;
    out["estimate"] = r.estimate;
    out["standard_error"] = r.standard_error;
    out["test_statistic"] = r.test_statistic ? nlohmann::json(*r.test_statistic) : nlohmann::json();
    out["p_value"] = r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json();
    out["verdict"] = r.verdict;
    out["details"] = r.details;
    return out;
}

}  // namespace qlab
