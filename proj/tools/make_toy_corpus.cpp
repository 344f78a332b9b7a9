// SPDX-License-Identifier: Apache-2.0
// Writes the synthetic toy corpus: make_toy_corpus OUT [COUNT] [SEED]
#include <cstdlib>
#include <iostream>

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/pretrain/corpus.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_toy_corpus OUT [COUNT] [SEED]\n";
    return 2;
  }
  const std::size_t count = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1000;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;
  std::string text = "# synthetic toy corpus, seed " + std::to_string(seed) + "\n";
  for (const auto& s : chemrl::pretrain::toy_corpus(count, seed)) {
    if (!chemrl::chem::is_valid(s)) {
      std::cerr << "invalid toy molecule " << s << "\n";
      return 1;
    }
    text += s + "\n";
  }
  chemrl::write_file_atomic(argv[1], text);
  return 0;
}
