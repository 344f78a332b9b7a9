// SPDX-License-Identifier: Apache-2.0
#include "chemrl/chem/mol_graph.hpp"

#include <algorithm>
#include <functional>

namespace chemrl::chem {

int MolGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return static_cast<int>(atoms_.size()) - 1;
}

int MolGraph::add_bond(int a, int b, int order, bool aromatic) {
  const int n = static_cast<int>(atoms_.size());
  if (a == b || a < 0 || b < 0 || a >= n || b >= n) return -1;
  if (find_bond(a, b) >= 0) return -1;
  const int idx = static_cast<int>(bonds_.size());
  bonds_.push_back(Bond{a, b, order, aromatic});
  ring_bond_.push_back(false);
  adjacency_[a].push_back({b, idx});
  adjacency_[b].push_back({a, idx});
  return idx;
}

int MolGraph::find_bond(int a, int b) const {
  for (const auto& nb : adjacency_[a]) {
    if (nb.atom == b) return nb.bond;
  }
  return -1;
}

int MolGraph::bond_order_sum(int atom) const {
  int sum = 0;
  for (const auto& nb : adjacency_[atom]) sum += bonds_[nb.bond].order;
  return sum;
}

bool MolGraph::in_ring(int atom) const {
  return std::any_of(adjacency_[atom].begin(), adjacency_[atom].end(),
                     [&](const Neighbor& nb) { return ring_bond_[nb.bond]; });
}

void MolGraph::perceive_rings() {
  // Tarjan bridge finding, iterative to survive long chains.
  const int n = static_cast<int>(atoms_.size());
  std::vector<int> disc(n, -1), low(n, 0);
  std::fill(ring_bond_.begin(), ring_bond_.end(), true);
  int timer = 0;
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (int root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    stack.push_back({root, -1, 0});
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      auto& f = stack.back();
      if (f.next < adjacency_[f.atom].size()) {
        const auto nb = adjacency_[f.atom][f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] < 0) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          auto& parent = stack.back();
          low[parent.atom] = std::min(low[parent.atom], low[done.atom]);
          if (low[done.atom] > disc[parent.atom]) ring_bond_[done.parent_bond] = false;
        }
      }
    }
  }
}

MolGraph MolGraph::permuted(const std::vector<int>& order) const {
  MolGraph out;
  std::vector<int> new_index(atoms_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_index[order[i]] = static_cast<int>(i);
    out.add_atom(atoms_[order[i]]);
  }
  for (const auto& b : bonds_) {
    out.add_bond(new_index[b.begin], new_index[b.end], b.order, b.aromatic);
  }
  out.perceive_rings();
  return out;
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case ParseErrorKind::UnclosedRing: return "UnclosedRing";
    case ParseErrorKind::UnknownElement: return "UnknownElement";
    case ParseErrorKind::ValenceViolation: return "ValenceViolation";
    case ParseErrorKind::EmptyInput: return "EmptyInput";
    case ParseErrorKind::MalformedBracketAtom: return "MalformedBracketAtom";
    case ParseErrorKind::AromaticOutsideRing: return "AromaticOutsideRing";
  }
  return "Unknown";
}

std::vector<int> allowed_valences(std::string_view element, int charge) {
  std::vector<int> base;
  enum class Rule { AddCharge, SubAbs, SubCharge } rule = Rule::AddCharge;
  if (element == "C") {
    base = {4};
    rule = Rule::SubAbs;
  } else if (element == "N") {
    base = {3};
  } else if (element == "O") {
    base = {2};
  } else if (element == "S") {
    base = {2, 4, 6};
  } else if (element == "P") {
    base = {3, 5};
  } else if (element == "F" || element == "Cl" || element == "Br" || element == "I") {
    base = {1};
  } else if (element == "H") {
    base = {1};
    rule = Rule::SubAbs;
  } else if (element == "B") {
    base = {3};
    rule = Rule::SubCharge;
  } else {
    return {};
  }
  std::vector<int> out;
  for (int v : base) {
    int shifted = v;
    switch (rule) {
      case Rule::AddCharge: shifted = v + charge; break;
      case Rule::SubAbs: shifted = v - std::abs(charge); break;
      case Rule::SubCharge: shifted = v - charge; break;
    }
    if (shifted >= 0) out.push_back(shifted);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace chemrl::chem
