#pragma once

#include <filesystem>

#include <json.hpp>

#include "cmie/taggers/tagger.hpp"

namespace cmie::taggers {

void save_model(const Tagger& tagger, const std::filesystem::path& dir,
                const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());
/// Rebuilds the architecture from the manifest and loads its tensors.
Tagger load_model(const std::filesystem::path& dir);

}  // namespace cmie::taggers
