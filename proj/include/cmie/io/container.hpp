#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmie/core/matrix.hpp"
#include "cmie/encoders/vocab.hpp"
#include "cmie/nn/parameter.hpp"

// Model directory layout:
//   manifest.json  format, version, kind, config, vocab, tensor index, extra
//   tensors.bin    concatenated little-endian float32 arrays, row-major
namespace cmie::io {

inline constexpr int kContainerVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTensorFile = "tensors.bin";

struct Container {
  std::string kind;
  nlohmann::ordered_json config;
  encoders::Vocab vocab;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, Matrix>> tensors;
};

/// Creates `dir` if needed and overwrites both files.
void save_container(const std::filesystem::path& dir, const std::string& kind, const nlohmann::ordered_json& config,
                    const encoders::Vocab& vocab, const nn::ParameterSet& params,
                    const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

/// Throws DataError for missing files or an unsupported version, and
/// IntegrityError when the tensor file disagrees with the index.
Container read_container(const std::filesystem::path& dir);

/// Copies tensors into `params` by name. Names, order and shapes must match
/// exactly; otherwise IntegrityError.
void load_parameters(const Container& container, nn::ParameterSet& params);

nlohmann::ordered_json vocab_to_json(const encoders::Vocab& vocab);
encoders::Vocab vocab_from_json(const nlohmann::ordered_json& j);

}  // namespace cmie::io
