// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chemrl::lang {

inline constexpr int kPadId = 0;
inline constexpr int kGoId = 1;
inline constexpr int kEosId = 2;
// Ids >= kFirstActionId are legal actions; EOS is the first action.
inline constexpr int kFirstActionId = kEosId;

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kGoToken = "<GO>";
inline constexpr std::string_view kEosToken = "<EOS>";

// Bijective token <-> id map. Ids 0..2 are PAD, GO, EOS; regular tokens
// follow in sorted order.
class Vocabulary {
 public:
  Vocabulary() = default;
  // `tokens` must start with the three specials in id order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  // Number of legal actions (EOS plus regular tokens).
  int action_count() const { return static_cast<int>(tokens_.size()) - kFirstActionId; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const;
  bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }
  int id(std::string_view token) const;  // throws UnknownToken

  std::vector<int> encode(std::span<const std::string> tokens) const;
  // Tokenizes then encodes.
  std::vector<int> encode_smiles(std::string_view smiles) const;
  // Concatenates tokens, dropping GO/EOS/PAD. Throws UnknownId.
  std::string decode(std::span<const int> ids) const;

  // One token per line, specials first; line order defines ids.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Sorted unique tokens of all lines plus specials. Throws EmptyCorpus.
Vocabulary build_vocabulary(std::span<const std::string> lines);

}  // namespace chemrl::lang
