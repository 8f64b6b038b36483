// SPDX-License-Identifier: Apache-2.0
#include "qlab/model_io.hpp"

#include <fstream>
#include <sstream>

#include "qlab/digest.hpp"

namespace qlab {

namespace {

using nlohmann::json;

json definition_json(const Model& model) {
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        return json{{"type", "linear"},
                    {"coeffs", lin->coeffs},
                    {"tail_bound", lin->tail_bound},
                    {"innovation",
                     {{"kind", to_string(lin->innovation.kind())},
                      {"variance", lin->innovation.variance()}}}};
    }
    const auto& chain = std::get<MarkovModel>(model);
    json rows = json::array();
    for (Eigen::Index i = 0; i < chain.transition().rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < chain.transition().cols(); ++j) row.push_back(chain.transition()(i, j));
        rows.push_back(std::move(row));
    }
    std::vector<double> g(chain.observable().data(),
                          chain.observable().data() + chain.observable().size());
    return json{{"type", "markov"}, {"P", rows}, {"g", g}};
}

}  // namespace

Model model_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) throw InvalidModel("model definition must be a JSON object");
        const std::string type = doc.at("type").get<std::string>();
        if (type == "linear") {
            auto coeffs = doc.at("coeffs").get<std::vector<double>>();
            const double tail = doc.value("tail_bound", 0.0);
            InnovationDistribution innovation;
            if (doc.contains("innovation")) {
                const auto& inn = doc.at("innovation");
                innovation = InnovationDistribution(
                    parse_innovation_kind(inn.value("kind", std::string("gaussian"))),
                    inn.value("variance", 1.0));
            }
            return make_linear_model(std::move(coeffs), innovation, tail);
        }
        if (type == "markov") {
            if (doc.contains("pi")) {
                throw InvalidModel("markov models must not supply pi; it is computed from P");
            }
            const auto rows = doc.at("P").get<std::vector<std::vector<double>>>();
            const auto g = doc.at("g").get<std::vector<double>>();
            const auto n = static_cast<Eigen::Index>(rows.size());
            Eigen::MatrixXd p(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (static_cast<Eigen::Index>(rows[i].size()) != n) {
                    throw InvalidModel("transition matrix must be square");
                }
                for (Eigen::Index j = 0; j < n; ++j) p(i, j) = rows[i][j];
            }
            Eigen::VectorXd obs = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
            return MarkovModel(std::move(p), std::move(obs));
        }
        throw InvalidModel("unknown model type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidModel(std::string("model definition: ") + e.what());
    } catch (const InvalidModel&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw InvalidModel(e.what());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidModel("cannot open model file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidModel("malformed model JSON in " + path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

nlohmann::json model_to_json(const Model& model) {
    json out = definition_json(model);
    if (const auto* chain = std::get_if<MarkovModel>(&model)) {
        const auto& pi = chain->stationary();
        out["pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
    }
    return out;
}

std::string model_digest(const Model& model) { return digest_of(definition_json(model).dump()); }

}  // namespace qlab
