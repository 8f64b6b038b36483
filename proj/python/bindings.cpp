// SPDX-License-Identifier: Apache-2.0
// Python bindings. Structured values cross the boundary as JSON text; the
// package __init__ decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "qlab/experiments.hpp"
#include "qlab/markov_rep.hpp"
#include "qlab/model_io.hpp"
#include "qlab/projections.hpp"
#include "qlab/random.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

qlab::Model parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw qlab::InvalidModel(std::string("malformed model JSON: ") + e.what());
    }
    return qlab::model_from_json(doc);
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

PYBIND11_MODULE(_qlab, m) {
    m.attr("__version__") = "0.1.0";
    py::register_exception<qlab::InvalidModel>(m, "InvalidModel", PyExc_ValueError);
    py::register_exception<qlab::HannanRefusal>(m, "HannanRefusal", PyExc_RuntimeError);

    m.def("philox4x32", &qlab::philox4x32, py::arg("counter"), py::arg("key"));
    m.def(
        "uniforms",
        [](std::uint64_t seed, std::vector<std::uint64_t> path, int count) {
            qlab::RandomStream stream = qlab::derive_stream(seed, std::move(path));
            std::vector<double> out(static_cast<std::size_t>(count));
            for (auto& u : out) u = stream.next_uniform();
            return out;
        },
        py::arg("seed"), py::arg("path"), py::arg("count"));

    m.def("_model_json", [](const std::string& text) { return qlab::model_to_json(parse_model(text)).dump(); });
    m.def("_model_digest", [](const std::string& text) { return qlab::model_digest(parse_model(text)); });
    m.def("_sigma_squared", [](const std::string& text) { return qlab::sigma_squared(parse_model(text)); });
    m.def("_projection_norms", [](const std::string& text, std::optional<int> K) {
        const qlab::Model model = parse_model(text);
        const auto series = qlab::projection_norms(model, K.value_or(qlab::default_projection_horizon(model)));
        return py::make_tuple(series.norms, series.bias);
    });
    m.def("_hannan_verdict", [](const std::string& text) {
        const auto r = qlab::hannan_verdict(parse_model(text));
        return py::make_tuple(qlab::to_string(r.verdict), r.total());
    });
    m.def("_g_hat", [](const std::string& text) {
        const auto approx = qlab::martingale_increment(parse_model(text), std::nullopt);
        return approx.is_linear() ? std::vector<double>{approx.coefficient} : to_vector(approx.g_hat);
    });
    m.def("_markov_discrepancy", [](const std::string& text, int n_max) {
        const qlab::Model model = parse_model(text);
        const auto* chain = std::get_if<qlab::MarkovModel>(&model);
        if (chain == nullptr) throw qlab::InvalidModel("markov model required");
        return qlab::verify_markov_property(*chain, n_max).max_discrepancy;
    });

    m.def("list_experiments", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : qlab::list_experiments()) out.emplace_back(e.name, e.description);
        return out;
    });
    m.def(
        "_run",
        [](const std::string& config_text, const std::string& base_dir, const std::string& out_dir,
           unsigned workers) {
            qlab::RunResult result;
            try {
                qlab::RunConfig config = qlab::run_config_from_json(json::parse(config_text), base_dir);
                config.out_dir = out_dir;
                config.workers = workers;
                py::gil_scoped_release release;
                result = qlab::run(config);
            } catch (const std::exception& e) {
                result.exit_code = qlab::kExitInvalidInput;
                result.message = e.what();
            }
            return py::make_tuple(result.exit_code, result.message, result.report.dump());
        },
        py::arg("config"), py::arg("base_dir"), py::arg("out_dir"), py::arg("workers") = 1);
}
