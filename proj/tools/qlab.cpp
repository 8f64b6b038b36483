// SPDX-License-Identifier: Apache-2.0
// qlab: command-line front end for the quenched limit experiments.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qlab/experiments.hpp"

namespace {

int list_command() {
    for (const auto& info : qlab::list_experiments()) {
        std::cout << info.name << "\t" << info.description << "\n";
    }
    return qlab::kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qlab: quenched CLT/WIP experiments for stationary processes"};
    app.require_subcommand(1);

    app.add_subcommand("list", "List the available experiments");

    auto* suite_cmd = app.add_subcommand("run-all", "Run every entry of a suite file");
    std::string suite_path;
    std::string suite_out = "out";
    unsigned suite_workers = 1;
    std::optional<std::uint64_t> suite_seed;
    suite_cmd->add_option("--suite", suite_path, "Suite JSON file")->required();
    suite_cmd->add_option("--out", suite_out, "Output directory");
    suite_cmd->add_option("--workers", suite_workers, "Worker threads (0 = hardware)");
    suite_cmd->add_option("--seed", suite_seed, "Override the suite seed");

    qlab::RunConfig config;
    std::string model_path;
    std::string out_dir = "out";
    std::string order = "infinity";
    std::optional<int> horizon;
    std::vector<CLI::App*> experiment_cmds;
    for (const auto& info : qlab::list_experiments()) {
        auto* cmd = app.add_subcommand(info.name, info.description);
        cmd->add_option("--model", model_path, "Model JSON file")->required();
        cmd->add_option("--n", config.n, "Path length");
        cmd->add_option("--reps", config.reps, "Replications per fixture");
        cmd->add_option("--fixtures", config.fixtures, "Number of frozen pasts");
        cmd->add_option("--seed", config.seed, "Master seed (required)");
        cmd->add_option("--functional", config.functional,
                        "endpoint|supremum|infimum|sup_abs|time_integral");
        cmd->add_option("--Ns", config.Ns, "Horizons for strest/drift")->delimiter(',');
        cmd->add_option("--order", order, "Martingale approximation order r, or 'infinity'");
        cmd->add_option("--horizon", horizon, "Series horizon K");
        cmd->add_option("--reference-reps", config.reference_reps, "Brownian reference replications");
        cmd->add_option("--alpha", config.alpha, "KS significance level");
        cmd->add_option("--ks-max", config.ks_max_statistic, "Pass a fixture on KS D below this value");
        cmd->add_option("--pass-fraction", config.pass_fraction, "Required fraction of passing fixtures");
        cmd->add_option("--truncation", config.truncation, "Maximal-function truncation N");
        cmd->add_option("--n-max", config.n_max, "Markov-property tuple length");
        cmd->add_option("--inner", config.inner, "Inner draws for nested Monte Carlo");
        cmd->add_option("--random-functions", config.random_functions, "Random test functions");
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--workers", config.workers, "Worker threads (0 = hardware)");
        experiment_cmds.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : qlab::kExitInvalidInput;
    }

    if (app.got_subcommand("list")) return list_command();

    if (suite_cmd->parsed()) {
        const qlab::RunResult result = qlab::run_suite(suite_path, suite_out, suite_workers, suite_seed);
        if (result.report.contains("runs")) {
            for (const auto& r : result.report["runs"]) {
                std::cout << r["name"].get<std::string>() << ": exit " << r["exit_code"].get<int>() << "  "
                          << r["message"].get<std::string>() << "\n";
            }
        }
        (result.exit_code == qlab::kExitPass ? std::cout : std::cerr) << result.message << "\n";
        return result.exit_code;
    }

    for (auto* cmd : experiment_cmds) {
        if (!cmd->parsed()) continue;
        config.experiment = cmd->get_name();
        config.model_path = model_path;
        config.out_dir = out_dir;
        config.horizon = horizon;
        if (order != "infinity" && order != "inf") {
            try {
                std::size_t used = 0;
                config.order = std::stoi(order, &used);
                if (used != order.size()) throw std::invalid_argument(order);
            } catch (const std::exception&) {
                std::cerr << "invalid --order '" << order << "'\n";
                return qlab::kExitInvalidInput;
            }
        }
        const qlab::RunResult result = qlab::run(config);
        (result.exit_code == qlab::kExitPass ? std::cout : std::cerr) << result.message << "\n";
        return result.exit_code;
    }
    return qlab::kExitInvalidInput;
}
