#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cmie::encoders {

/// Character vocabulary. Ids 0..2 are reserved for padding, unknown
/// characters and the question/passage separator.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr int kReserved = 3;

  Vocab() = default;
  /// Characters get ids kReserved, kReserved+1, ... in the given order.
  explicit Vocab(std::vector<char32_t> chars);

  /// Keeps characters seen at least `min_count` times, ordered by code point.
  static Vocab build(const std::vector<std::u32string>& texts, int min_count);

  int id(char32_t c) const;
  std::vector<int> encode(std::u32string_view text) const;
  int size() const { return static_cast<int>(chars_.size()) + kReserved; }
  const std::vector<char32_t>& chars() const { return chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
};

}  // namespace cmie::encoders
