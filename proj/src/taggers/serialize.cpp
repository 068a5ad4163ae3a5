#include "cmie/taggers/serialize.hpp"

#include "cmie/core/error.hpp"
#include "cmie/io/container.hpp"

namespace cmie::taggers {

void save_model(const Tagger& tagger, const std::filesystem::path& dir, const nlohmann::ordered_json& extra) {
  io::save_container(dir, "tagger", to_json(tagger.config()), tagger.vocab(), tagger.parameters(), extra);
}

Tagger load_model(const std::filesystem::path& dir) {
  const io::Container c = io::read_container(dir);
  if (c.kind != "tagger") throw DataError(dir.string() + " holds a '" + c.kind + "' model, not a tagger");
  TaggerConfig config;
  try {
    config = tagger_config_from_json(c.config);
  } catch (const UsageError& e) {
    throw IntegrityError(std::string("manifest config: ") + e.what());
  }
  Tagger tagger(config, c.vocab);
  io::load_parameters(c, tagger.parameters());
  return tagger;
}

}  // namespace cmie::taggers
