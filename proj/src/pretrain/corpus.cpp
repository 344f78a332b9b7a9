// SPDX-License-Identifier: Apache-2.0
#include "chemrl/pretrain/corpus.hpp"

#include <numeric>
#include <set>
#include <sstream>

#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/common/rng.hpp"
#include "chemrl/lang/tokenizer.hpp"

namespace chemrl::pretrain {

Corpus make_corpus(const std::vector<std::string>& lines, const CorpusOptions& opt) {
  Corpus c;
  std::vector<std::vector<std::string>> kept_tokens;
  for (std::string line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> toks;
    try {
      toks = lang::tokenize(line);
    } catch (const Error&) {
      ++c.skipped_untokenizable;
      continue;
    }
    if (opt.vocab) {
      bool ok = true;
      for (const auto& t : toks) ok = ok && opt.vocab->contains(t);
      if (!ok) {
        ++c.skipped_untokenizable;
        continue;
      }
    }
    if (static_cast<int>(toks.size()) + 1 > opt.max_len) {
      ++c.skipped_oversized;
      continue;
    }
    c.smiles.push_back(line);
    kept_tokens.push_back(std::move(toks));
  }
  if (c.smiles.empty()) throw Error("EmptyAfterFiltering", "no usable corpus lines");
  c.vocab = opt.vocab ? *opt.vocab : lang::build_vocabulary(c.smiles);
  for (const auto& toks : kept_tokens) c.sequences.push_back(c.vocab.encode(toks));

  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_stream(opt.seed, "corpus-split");
  portable_shuffle(idx.begin(), idx.end(), rng);
  auto n_valid = static_cast<std::size_t>(opt.valid_fraction * static_cast<double>(c.size()));
  if (n_valid >= c.size()) n_valid = c.size() - 1;
  c.valid.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_valid));
  c.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end());
  std::sort(c.valid.begin(), c.valid.end());
  std::sort(c.train.begin(), c.train.end());
  return c;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& opt) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  Corpus c = make_corpus(lines, opt);
  c.source = path;
  return c;
}

std::vector<std::string> toy_corpus(std::size_t count, std::uint64_t seed) {
  static const char* const kUnits[] = {"C", "C", "C", "C", "N", "O", "C(C)", "C(=O)", "C(O)",
                                       "c1ccccc1", "C1CC1", "C1CCCC1", "C(N)", "CC"};
  static const char* const kCaps[] = {"", "", "", "F", "Cl", "O", "N", "C(=O)O"};
  Rng rng = make_stream(seed, "toy-corpus");
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 1000) throw Error("EmptyAfterFiltering", "toy grammar exhausted");
    std::string s;
    const auto units = 2 + uniform_index(rng, 6);
    std::string prev;
    for (std::uint64_t u = 0; u < units; ++u) {
      std::string unit = kUnits[uniform_index(rng, std::size(kUnits))];
      // Avoid O-O and N-O style heteroatom runs.
      if ((unit == "O" || unit == "N") && (prev == "O" || prev == "N")) unit = "C";
      s += unit;
      prev = unit;
    }
    std::string cap = kCaps[uniform_index(rng, std::size(kCaps))];
    if ((cap == "O" || cap == "N") && (prev == "O" || prev == "N")) cap = "";
    s += cap;
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

}  // namespace chemrl::pretrain
