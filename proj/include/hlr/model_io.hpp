#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "hlr/kernel.hpp"
#include "hlr/manifold.hpp"
#include "hlr/solver.hpp"

namespace hlr {

// Model files are JSON. Coefficients are stored as prefix-free hexadecimal
// float literals ("1.8p-1") so a save/load round trip reproduces every bit;
// support features rely on shortest-round-trip decimal output, which is
// also exact. Throws DataError on malformed input.
nlohmann::json model_to_json(const HlrModel& model);
HlrModel model_from_json(const nlohmann::json& j);
void save_model(const HlrModel& model, const std::string& path);
HlrModel load_model(const std::string& path);

// Shared spec <-> JSON helpers; unknown keys are rejected.
nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::json manifold_spec_to_json(const ManifoldSpec& spec);
ManifoldSpec manifold_spec_from_json(const nlohmann::json& j);

}  // namespace hlr
