// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chemrl/lang/vocabulary.hpp"

namespace chemrl::pretrain {

struct CorpusOptions {
  // Longest accepted sequence, counted in tokens including the final EOS.
  int max_len = 100;
  double valid_fraction = 0.1;
  std::uint64_t seed = 0;
  // When set, lines with tokens outside it are skipped as untokenizable.
  std::optional<lang::Vocabulary> vocab;
};

struct Corpus {
  std::filesystem::path source;
  lang::Vocabulary vocab;
  std::vector<std::string> smiles;
  std::vector<std::vector<int>> sequences;  // token ids, no GO/EOS
  std::vector<std::size_t> train;           // indices into sequences
  std::vector<std::size_t> valid;
  std::size_t skipped_untokenizable = 0;
  std::size_t skipped_oversized = 0;

  std::size_t size() const { return sequences.size(); }
  std::size_t skipped() const { return skipped_untokenizable + skipped_oversized; }
};

// Lines starting with '#' and blank lines are ignored; everything else is
// taken as-is (no canonicalization or deduplication). Throws
// EmptyAfterFiltering when nothing is kept.
Corpus make_corpus(const std::vector<std::string>& lines, const CorpusOptions& options);
Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options);

// Small synthetic corpus of valid SMILES (chains of aliphatic atoms, small
// rings, benzene, carbonyl and branch units, optional halogen caps).
std::vector<std::string> toy_corpus(std::size_t count, std::uint64_t seed);

}  // namespace chemrl::pretrain
