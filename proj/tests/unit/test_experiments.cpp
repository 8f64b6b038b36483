#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qlab/experiments.hpp"

using namespace qlab;
namespace fs = std::filesystem;

namespace {

const fs::path kModels = QLAB_MODELS_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qlab_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig config(const std::string& experiment, const std::string& model, const std::string& out) {
    RunConfig c;
    c.experiment = experiment;
    c.model_path = kModels / model;
    c.seed = 42;
    c.out_dir = scratch(out);
    return c;
}

}  // namespace

TEST_CASE("experiment registry") {
    const auto& list = list_experiments();
    CHECK(list.size() >= 10);
    auto has = [&](const std::string& n) {
        return std::any_of(list.begin(), list.end(), [&](const auto& e) { return e.name == n; });
    };
    CHECK(has("quenched-clt"));
    CHECK(has("markov-check"));
    for (const auto& e : list) CHECK_FALSE(e.description.empty());
}

TEST_CASE("identity model strest reports zero") {
    RunConfig c = config("strest", "linear_identity.json", "strest_id");
    c.reps = 20;
    c.fixtures = 2;
    const RunResult r = run(c);
    CHECK(r.exit_code == kExitPass);
    for (const auto& rep : r.report["reports"]) {
        CHECK(rep["details"]["points"].size() == 3);
        for (const auto& p : rep["details"]["points"]) CHECK(p["R_N"].get<double>() == 0.0);
    }
    CHECK(fs::exists(c.out_dir / "report.json"));
    CHECK(fs::exists(c.out_dir / "strest.csv"));
}

TEST_CASE("invalid inputs give exit code 3") {
    const fs::path bad = scratch("bad_model.json");
    std::ofstream(bad) << "{ not json";
    RunConfig c = config("sigma2", "linear_identity.json", "bad");
    c.model_path = bad;
    RunResult r = run(c);
    CHECK(r.exit_code == kExitInvalidInput);
    CHECK(r.message.find("parse") != std::string::npos);

    c = config("no-such-experiment", "linear_identity.json", "unknown");
    r = run(c);
    CHECK(r.exit_code == kExitInvalidInput);
    CHECK(r.message.find("unknown experiment") != std::string::npos);

    c = config("sigma2", "linear_identity.json", "noseed");
    c.seed.reset();
    CHECK(run(c).exit_code == kExitInvalidInput);

    c = config("markov-check", "linear_identity.json", "wrongkind");
    r = run(c);
    CHECK(r.exit_code == kExitInvalidInput);

    c = config("sigma2", "linear_identity.json", "io");
    c.out_dir = "/proc/qlab_cannot_write_here";
    r = run(c);
    CHECK(r.exit_code == kExitInvalidInput);
    CHECK(r.message.find("I/O") != std::string::npos);
}

TEST_CASE("distribution experiments write sample and cdf files") {
    RunConfig c = config("quenched-clt", "markov_2state.json", "clt");
    c.n = 256;
    c.reps = 500;
    c.fixtures = 3;
    const RunResult r = run(c);
    CHECK(r.exit_code != kExitInvalidInput);
    CHECK(slurp(c.out_dir / "sample.csv").rfind("replication,value\n", 0) == 0);
    CHECK(slurp(c.out_dir / "cdf.csv").rfind("x,ecdf,ref_cdf\n", 0) == 0);
    CHECK(fs::exists(c.out_dir / "sample_fixture2.csv"));
    CHECK(r.report["reports"].size() == 3);
    CHECK(r.report.contains("config_digest"));
    CHECK(r.report["seed"] == 42);
}

TEST_CASE("outputs do not depend on worker count") {
    RunConfig a = config("quenched-wip", "linear_rho05.json", "w1");
    a.functional = "sup_abs";
    a.n = 128;
    a.reps = 300;
    a.fixtures = 2;
    a.reference_reps = 400;
    RunConfig b = a;
    b.out_dir = scratch("w4");
    b.workers = 4;
    CHECK(run(a).exit_code == run(b).exit_code);
    for (const auto& entry : fs::directory_iterator(a.out_dir)) {
        CHECK(slurp(entry.path()) == slurp(b.out_dir / entry.path().filename()));
    }
}

TEST_CASE("exact experiments on bundled models") {
    for (const std::string e : {"project-norms", "hannan", "mw", "sigma2"}) {
        RunConfig c = config(e, "linear_rho05.json", "exact_" + e);
        const RunResult r = run(c);
        CHECK(r.exit_code == kExitPass);
        CHECK(slurp(c.out_dir / "norms.csv").rfind("k,norm,bias\n", 0) == 0);
    }
    for (const std::string e : {"markov-check", "hopf", "dunford-schwartz", "weak-l2"}) {
        RunConfig c = config(e, "markov_3state.json", "exact_" + e);
        CHECK(run(c).exit_code == kExitPass);
    }
}

TEST_CASE("suite config parsing") {
    const nlohmann::json entry = {{"experiment", "drift"}, {"model", "m.json"}, {"Ns", {8, 16}}, {"order", 3}};
    const RunConfig c = run_config_from_json(entry, "/base");
    CHECK(c.model_path == fs::path("/base/m.json"));
    CHECK(c.Ns == std::vector<int>{8, 16});
    CHECK(c.order == 3);
    CHECK_THROWS_AS(run_config_from_json({{"experiment", "drift"}, {"model", "m"}, {"bogus", 1}}, "."),
                    std::invalid_argument);
    CHECK(c.to_json().dump().find("workers") == std::string::npos);
}
