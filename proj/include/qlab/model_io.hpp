// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "qlab/models.hpp"

namespace qlab {

/// Model definition format:
///   {"type":"linear","coeffs":[...],"tail_bound":0,
///    "innovation":{"kind":"gaussian","variance":1.0}}
///   {"type":"markov","P":[[...],...],"g":[...]}       (pi is computed)
/// Throws InvalidModel on schema or invariant violations.
Model model_from_json(const nlohmann::json& doc);
Model load_model(const std::filesystem::path& path);

/// Canonical form; markov models include the computed pi.
nlohmann::json model_to_json(const Model& model);

/// Digest of the canonical definition (without pi).
std::string model_digest(const Model& model);

}  // namespace qlab
