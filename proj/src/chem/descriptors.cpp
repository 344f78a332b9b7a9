// SPDX-License-Identifier: Apache-2.0
#include "chemrl/chem/descriptors.hpp"

#include <cctype>

#include "chemrl/common/error.hpp"

namespace chemrl::chem {
namespace {

bool is_heavy(const Atom& a) { return a.element != "H"; }

int heavy_degree(const MolGraph& mol, int atom) {
  int d = 0;
  for (const auto& nb : mol.neighbors(atom)) d += is_heavy(mol.atoms()[nb.atom]) ? 1 : 0;
  return d;
}

std::string charge_suffix(int charge) {
  if (charge == 0) return {};
  std::string s(1, charge > 0 ? '+' : '-');
  if (std::abs(charge) > 1) s += std::to_string(std::abs(charge));
  return s;
}

}  // namespace

double molecular_weight(const MolGraph& mol, const AtomicWeights& weights) {
  const auto h = weights.by_element.find("H");
  if (h == weights.by_element.end()) throw Error("UnknownElement", "no weight for H");
  double total = 0.0;
  for (const auto& a : mol.atoms()) {
    const auto w = weights.by_element.find(a.element);
    if (w == weights.by_element.end()) throw Error("UnknownElement", "no weight for " + a.element);
    total += w->second + a.implicit_h * h->second;
  }
  return total;
}

int rotatable_bond_count(const MolGraph& mol) {
  int count = 0;
  for (std::size_t b = 0; b < mol.bond_count(); ++b) {
    const auto& bond = mol.bonds()[b];
    if (bond.order != 1 || bond.aromatic || mol.ring_bond_flags()[b]) continue;
    const auto& x = mol.atoms()[bond.begin];
    const auto& y = mol.atoms()[bond.end];
    if (!is_heavy(x) || !is_heavy(y)) continue;
    if (heavy_degree(mol, bond.begin) >= 2 && heavy_degree(mol, bond.end) >= 2) ++count;
  }
  return count;
}

std::vector<std::string> logp_patterns(const MolGraph& mol, int atom) {
  const auto& a = mol.atoms()[atom];
  if (a.element == "H") {
    bool on_carbon = false;
    for (const auto& nb : mol.neighbors(atom)) on_carbon = on_carbon || mol.atoms()[nb.atom].element == "C";
    return {on_carbon ? "H-C" : "H-X"};
  }
  std::string sym = a.element;
  if (a.aromatic) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  const auto chg = charge_suffix(a.charge);
  return {sym + "H" + std::to_string(a.implicit_h) + chg, sym + chg};
}

LogPEstimate logp_estimate(const MolGraph& mol, const LogPTable& table) {
  LogPEstimate est;
  const auto lookup = [&](const std::string& p) -> const double* {
    const auto it = table.by_pattern.find(p);
    return it == table.by_pattern.end() ? nullptr : &it->second;
  };
  for (std::size_t i = 0; i < mol.atom_count(); ++i) {
    const int atom = static_cast<int>(i);
    const double* hit = nullptr;
    for (const auto& p : logp_patterns(mol, atom)) {
      if ((hit = lookup(p)) != nullptr) break;
    }
    if (hit == nullptr) {
      ++est.unknown_atoms;
    } else {
      est.value += *hit;
    }
    const auto& a = mol.atoms()[i];
    if (a.element != "H" && a.implicit_h > 0) {
      const double* h = lookup(a.element == "C" ? "H-C" : "H-X");
      if (h == nullptr) {
        est.unknown_atoms += a.implicit_h;
      } else {
        est.value += a.implicit_h * *h;
      }
    }
  }
  return est;
}

int heavy_atom_count(const MolGraph& mol) {
  int n = 0;
  for (const auto& a : mol.atoms()) n += is_heavy(a) ? 1 : 0;
  return n;
}

}  // namespace chemrl::chem
