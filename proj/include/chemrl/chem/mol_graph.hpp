// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chemrl::chem {

struct Atom {
  std::string element;  // capitalized symbol, e.g. "C", "Cl"
  int charge = 0;
  bool aromatic = false;
  int implicit_h = 0;  // hydrogens not present as explicit atoms
  int isotope = 0;     // passed through, unused by descriptors
};

struct Bond {
  int begin = 0;
  int end = 0;
  int order = 1;  // 1, 2 or 3; aromatic bonds carry order 1
  bool aromatic = false;
};

// Heavy-atom graph. Hydrogens written inside brackets are folded into
// implicit_h; only "[H]" atoms standing alone survive as explicit atoms.
class MolGraph {
 public:
  MolGraph() = default;

  int add_atom(Atom atom);
  // Returns the bond index. Rejects self bonds and duplicates by returning -1.
  int add_bond(int a, int b, int order, bool aromatic);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::vector<Atom>& atoms() { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<bool>& ring_bond_flags() const { return ring_bond_; }

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }

  // Neighbour atom indices and the bond index used to reach them.
  struct Neighbor {
    int atom;
    int bond;
  };
  const std::vector<Neighbor>& neighbors(int atom) const { return adjacency_[atom]; }
  int degree(int atom) const { return static_cast<int>(adjacency_[atom].size()); }
  int find_bond(int a, int b) const;

  // Sum of bond orders at an atom (aromatic bonds count as 1).
  int bond_order_sum(int atom) const;
  bool in_ring(int atom) const;

  // Recomputes ring-bond flags (a bond is in a ring iff it is not a bridge).
  void perceive_rings();

  // Returns a copy with atoms renumbered so that new index i holds old atom
  // order[i]. Used by permutation-invariance tests.
  MolGraph permuted(const std::vector<int>& order) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<bool> ring_bond_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

enum class ParseErrorKind {
  UnbalancedParenthesis,
  UnclosedRing,
  UnknownElement,
  ValenceViolation,
  EmptyInput,
  MalformedBracketAtom,
  AromaticOutsideRing,
};

std::string_view to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind;
  std::size_t position;  // byte offset into the input
  std::string message;
};

using ParseResult = std::variant<MolGraph, ParseError>;

// Parses a SMILES string into a heavy-atom graph. Returns the first error
// encountered scanning left to right.
ParseResult parse(std::string_view smiles);

inline bool is_valid(std::string_view smiles) {
  return std::holds_alternative<MolGraph>(parse(smiles));
}

// Convenience: returns the graph or nullopt.
std::optional<MolGraph> try_parse(std::string_view smiles);

// Writes a SMILES string for the graph, starting a depth-first walk at the
// lowest-index unvisited atom and visiting neighbours in `rank` order
// (atom index when rank is empty). Every atom is written in bracket form
// with explicit hydrogen count and every bond symbol is explicit, so
// parse(serialize(m)) reproduces m up to atom numbering.
std::string serialize(const MolGraph& mol, const std::vector<long>& rank = {});

// Allowed valences for an element at a given formal charge, ascending.
// Empty when the element is unknown.
std::vector<int> allowed_valences(std::string_view element, int charge);

}  // namespace chemrl::chem
