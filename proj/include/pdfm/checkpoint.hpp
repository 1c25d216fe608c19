#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pdfm/meta_solver.hpp"

namespace pdfm {

// Checkpoint layout (JSON object):
//   format      "pdfm-checkpoint-1"
//   arch        {input_dim, hidden_dims, bias}
//   theta, mu   arrays of numbers
//   adam        {m, v, t}
//   iteration   integer
//   meta        free-form object (mode, seed, config) carried through untouched
nlohmann::ordered_json checkpoint_to_json(const MetaState& state,
                                          const nlohmann::ordered_json& meta = {});
MetaState checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const MetaState& state,
                     const nlohmann::ordered_json& meta = {});
MetaState load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

nlohmann::ordered_json arch_to_json(const NetworkArch& arch);
NetworkArch arch_from_json(const nlohmann::json& j);

}  // namespace pdfm
