// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chemrl/chem/mol_graph.hpp"

namespace chemrl::chem {

// Sorted, unique set-bit indices in a bit space of `width` bits.
struct Fingerprint {
  std::uint32_t width = 2048;
  int radius = 2;
  std::vector<std::uint32_t> bits;

  bool empty() const { return bits.empty(); }
  std::size_t count() const { return bits.size(); }
  bool operator==(const Fingerprint&) const = default;
};

// Circular atom-environment fingerprint. Layer 0 hashes (element, charge,
// heavy degree, hydrogen count, aromatic); layer r hashes the atom's layer
// r-1 id with the sorted multiset of (bond code, neighbour layer r-1 id).
// Every id of every layer sets bit id mod width.
Fingerprint fingerprint(const MolGraph& mol, int radius = 2, std::uint32_t width = 2048);

// Throws Error("WidthMismatch") when widths differ. Two empty sets give 1.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

// |fp \ universe| / |fp|, 0 for an empty fp.
double novel_bits_fraction(const Fingerprint& fp, const Fingerprint& universe);

// Union of many fingerprints of the same width.
Fingerprint fingerprint_union(std::span<const Fingerprint> fps);

// Canonical text key: atom ranks from iterative neighbourhood refinement
// with tie breaking, then a rank-ordered depth-first serialization.
std::string canonical_key(const MolGraph& mol);

// Canonical atom ranks (0..n-1, all distinct) used by canonical_key.
std::vector<long> canonical_ranks(const MolGraph& mol);

}  // namespace chemrl::chem
