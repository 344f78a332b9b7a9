// SPDX-License-Identifier: Apache-2.0
// Test-only oracles for molecular graphs. Independent of the library's
// canonicalization and fingerprint code.
#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "chemrl/chem/mol_graph.hpp"

namespace chemrl::testing {

// Backtracking graph isomorphism on labelled graphs (element, charge,
// aromatic, H count; bond order and aromatic flag).
inline bool isomorphic(const chem::MolGraph& a, const chem::MolGraph& b) {
  const int n = static_cast<int>(a.atom_count());
  if (n != static_cast<int>(b.atom_count()) || a.bond_count() != b.bond_count()) return false;
  auto same_atom = [&](int i, int j) {
    const auto& x = a.atoms()[i];
    const auto& y = b.atoms()[j];
    return x.element == y.element && x.charge == y.charge && x.aromatic == y.aromatic &&
           x.implicit_h == y.implicit_h && a.degree(i) == b.degree(j);
  };
  std::vector<int> map(n, -1), used(n, 0);
  std::function<bool(int)> extend = [&](int i) -> bool {
    if (i == n) return true;
    for (int j = 0; j < n; ++j) {
      if (used[j] || !same_atom(i, j)) continue;
      bool ok = true;
      for (const auto& nb : a.neighbors(i)) {
        if (map[nb.atom] < 0) continue;
        const int bb = b.find_bond(j, map[nb.atom]);
        if (bb < 0) {
          ok = false;
          break;
        }
        const auto& ba = a.bonds()[nb.bond];
        const auto& bbond = b.bonds()[bb];
        if (ba.order != bbond.order || ba.aromatic != bbond.aromatic) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      map[i] = j;
      used[j] = 1;
      if (extend(i + 1)) return true;
      map[i] = -1;
      used[j] = 0;
    }
    return false;
  };
  return extend(0);
}

}  // namespace chemrl::testing
