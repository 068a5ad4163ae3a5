#include "cmie/io/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cmie/core/error.hpp"
#include "cmie/core/utf8.hpp"

namespace cmie::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "cmie-model";

void put_float(std::string& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_float(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

Json vocab_to_json(const encoders::Vocab& vocab) {
  Json chars = Json::array();
  for (char32_t c : vocab.chars()) chars.push_back(utf8::encode(c));
  Json j;
  j["reserved"] = {"<pad>", "<unk>", "<sep>"};
  j["chars"] = std::move(chars);
  return j;
}

encoders::Vocab vocab_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("chars") || !j["chars"].is_array()) throw IntegrityError("manifest vocab is malformed");
  if (j.value("reserved", Json::array()).size() != static_cast<std::size_t>(encoders::Vocab::kReserved)) {
    throw IntegrityError("manifest vocab has an unexpected reserved block");
  }
  std::vector<char32_t> chars;
  for (const auto& c : j["chars"]) {
    if (!c.is_string()) throw IntegrityError("manifest vocab entry is not a string");
    const std::u32string cp = utf8::decode(c.get<std::string>());
    if (cp.size() != 1) throw IntegrityError("manifest vocab entry is not a single character");
    chars.push_back(cp[0]);
  }
  return encoders::Vocab(std::move(chars));
}

void save_container(const fs::path& dir, const std::string& kind, const Json& config, const encoders::Vocab& vocab,
                    const nn::ParameterSet& params, const Json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  std::string blob;
  Json index = Json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.count(); ++i) {
    const nn::Parameter& p = params[i];
    for (double v : p.value.values()) put_float(blob, static_cast<float>(v));
    Json t;
    t["name"] = p.name;
    t["rows"] = p.value.rows();
    t["cols"] = p.value.cols();
    t["offset"] = offset;
    offset += p.value.size() * 4;
    index.push_back(std::move(t));
  }

  Json m;
  m["format"] = kFormat;
  m["version"] = kContainerVersion;
  m["kind"] = kind;
  m["config"] = config;
  m["vocab"] = vocab_to_json(vocab);
  m["tensor_file"] = kTensorFile;
  m["tensor_bytes"] = blob.size();
  m["tensors"] = std::move(index);
  m["extra"] = extra;
  write_file(dir / kTensorFile, blob);
  write_file(dir / kManifestFile, m.dump(2) + "\n");
}

Container read_container(const fs::path& dir) {
  Json m;
  try {
    m = Json::parse(read_file(dir / kManifestFile));
  } catch (const Json::parse_error& e) {
    throw IntegrityError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.is_object() || m.value("format", "") != kFormat) throw IntegrityError("not a model manifest");
  if (!m.contains("version") || !m["version"].is_number_integer()) throw IntegrityError("manifest has no version");
  const int version = m["version"].get<int>();
  if (version != kContainerVersion) {
    throw DataError("unsupported model container version " + std::to_string(version) + " (supported: " +
                    std::to_string(kContainerVersion) + ")");
  }

  Container c;
  try {
    c.kind = m.at("kind").get<std::string>();
    c.config = m.at("config");
    c.extra = m.value("extra", Json::object());
    c.vocab = vocab_from_json(m.at("vocab"));
    const std::string blob = read_file(dir / m.value("tensor_file", std::string(kTensorFile)));
    const auto declared = m.at("tensor_bytes").get<std::size_t>();
    if (blob.size() != declared) {
      throw IntegrityError("tensor file has " + std::to_string(blob.size()) + " bytes, manifest declares " +
                           std::to_string(declared));
    }
    std::size_t expected = 0;
    for (const auto& t : m.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const int rows = t.at("rows").get<int>();
      const int cols = t.at("cols").get<int>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 || offset != expected) throw IntegrityError("tensor index entry '" + name + "' is inconsistent");
      const std::size_t bytes = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 4;
      if (offset + bytes > blob.size()) throw IntegrityError("tensor '" + name + "' runs past the end of the tensor file");
      Matrix value(rows, cols);
      const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
      for (std::size_t i = 0; i < value.size(); ++i) value.data()[i] = get_float(p + 4 * i);
      c.tensors.emplace_back(name, std::move(value));
      expected = offset + bytes;
    }
    if (expected != blob.size()) throw IntegrityError("tensor file has trailing bytes not covered by the index");
  } catch (const Json::exception& e) {
    throw IntegrityError("manifest is malformed: " + std::string(e.what()));
  }
  return c;
}

void load_parameters(const Container& container, nn::ParameterSet& params) {
  if (container.tensors.size() != params.count()) {
    throw IntegrityError("manifest lists " + std::to_string(container.tensors.size()) + " tensors, model has " +
                         std::to_string(params.count()));
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& [name, value] = container.tensors[i];
    nn::Parameter& p = params[i];
    if (name != p.name || !value.same_shape(p.value)) {
      throw IntegrityError("tensor '" + name + "' does not match model parameter '" + p.name + "'");
    }
    p.value = value;
  }
}

}  // namespace cmie::io
