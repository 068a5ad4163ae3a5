#include "cmie/encoders/vocab.hpp"

#include <map>

#include "cmie/core/error.hpp"

namespace cmie::encoders {

Vocab::Vocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], static_cast<int>(i) + kReserved).second) {
      throw DataError("duplicate character in vocabulary");
    }
  }
}

Vocab Vocab::build(const std::vector<std::u32string>& texts, int min_count) {
  std::map<char32_t, int> counts;
  for (const auto& t : texts)
    for (char32_t c : t) ++counts[c];
  std::vector<char32_t> chars;
  for (const auto& [c, n] : counts) {
    if (n >= min_count) chars.push_back(c);
  }
  return Vocab(std::move(chars));
}

int Vocab::id(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::u32string_view text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char32_t c : text) ids.push_back(id(c));
  return ids;
}

}  // namespace cmie::encoders
