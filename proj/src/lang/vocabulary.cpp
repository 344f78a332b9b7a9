// SPDX-License-Identifier: Apache-2.0
#include "chemrl/lang/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/lang/tokenizer.hpp"

namespace chemrl::lang {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3 || tokens_[kPadId] != kPadToken || tokens_[kGoId] != kGoToken ||
      tokens_[kEosId] != kEosToken)
    throw Error("BadVocabulary", "vocabulary must start with <PAD>, <GO>, <EOS>");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("BadVocabulary", "empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw Error("BadVocabulary", "duplicate token " + tokens_[i]);
  }
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw Error("UnknownId", std::to_string(id));
  return tokens_[id];
}

int Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error("UnknownToken", std::string(token));
  return it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<int> Vocabulary::encode_smiles(std::string_view smiles) const {
  const auto toks = tokenize(smiles);
  return encode(toks);
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    const auto& t = token(i);
    if (i == kPadId || i == kGoId || i == kEosId) continue;
    out += t;
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string text;
  for (const auto& t : tokens_) text += t + "\n";
  write_file_atomic(path, text);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocabulary(std::span<const std::string> lines) {
  std::set<std::string> unique;
  for (const auto& l : lines) {
    for (auto& t : tokenize(l)) unique.insert(std::move(t));
  }
  if (unique.empty()) throw Error("EmptyCorpus", "no tokens in corpus");
  std::vector<std::string> tokens{std::string(kPadToken), std::string(kGoToken), std::string(kEosToken)};
  tokens.insert(tokens.end(), unique.begin(), unique.end());
  return Vocabulary(std::move(tokens));
}

}  // namespace chemrl::lang
