// SPDX-License-Identifier: Apache-2.0
#include "chemrl/chem/fingerprint.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "chemrl/common/error.hpp"
#include "chemrl/common/rng.hpp"

namespace chemrl::chem {
namespace {

std::uint64_t combine(std::uint64_t seed, std::uint64_t v) { return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2))); }

int bond_code(const Bond& b) { return b.aromatic ? 4 : b.order; }

int heavy_degree(const MolGraph& mol, int atom) {
  int d = 0;
  for (const auto& nb : mol.neighbors(atom)) d += mol.atoms()[nb.atom].element != "H" ? 1 : 0;
  return d;
}

int total_h(const MolGraph& mol, int atom) {
  int h = mol.atoms()[atom].implicit_h;
  for (const auto& nb : mol.neighbors(atom)) h += mol.atoms()[nb.atom].element == "H" ? 1 : 0;
  return h;
}

}  // namespace

Fingerprint fingerprint(const MolGraph& mol, int radius, std::uint32_t width) {
  if (width == 0 || (width & (width - 1)) != 0) throw Error("InvalidWidth", "width must be a power of two");
  Fingerprint fp;
  fp.width = width;
  fp.radius = radius;
  // Explicit hydrogens are folded into their heavy neighbour's H count.
  std::vector<int> atoms;
  for (std::size_t i = 0; i < mol.atom_count(); ++i) {
    if (mol.atoms()[i].element != "H" || mol.degree(static_cast<int>(i)) == 0) atoms.push_back(static_cast<int>(i));
  }
  std::vector<std::uint64_t> ids(mol.atom_count(), 0);
  for (int a : atoms) {
    const auto& atom = mol.atoms()[a];
    std::uint64_t h = label_hash(atom.element);
    h = combine(h, static_cast<std::uint64_t>(atom.charge + 16));
    h = combine(h, static_cast<std::uint64_t>(heavy_degree(mol, a)));
    h = combine(h, static_cast<std::uint64_t>(total_h(mol, a)));
    h = combine(h, atom.aromatic ? 1 : 0);
    ids[a] = h;
  }
  // Environments are tracked as bond sets so that an atom whose
  // neighbourhood stopped growing, or that duplicates another atom's
  // neighbourhood at the same layer, emits nothing new.
  std::vector<std::uint32_t> bits;
  for (int a : atoms) bits.push_back(static_cast<std::uint32_t>(ids[a] & (width - 1)));
  std::vector<std::vector<int>> env(mol.atom_count());
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(ids.size(), 0);
    std::vector<std::vector<int>> next_env(mol.atom_count());
    for (int a : atoms) {
      std::vector<std::pair<int, std::uint64_t>> nbrs;
      auto& grown = next_env[a];
      grown = env[a];
      for (const auto& nb : mol.neighbors(a)) {
        if (mol.atoms()[nb.atom].element == "H") continue;
        nbrs.emplace_back(bond_code(mol.bonds()[nb.bond]), ids[nb.atom]);
        grown.push_back(nb.bond);
        grown.insert(grown.end(), env[nb.atom].begin(), env[nb.atom].end());
      }
      std::sort(grown.begin(), grown.end());
      grown.erase(std::unique(grown.begin(), grown.end()), grown.end());
      std::sort(nbrs.begin(), nbrs.end());
      std::uint64_t h = combine(static_cast<std::uint64_t>(r), ids[a]);
      for (const auto& [code, id] : nbrs) {
        h = combine(h, static_cast<std::uint64_t>(code));
        h = combine(h, id);
      }
      next[a] = h;
    }
    std::map<std::vector<int>, std::uint64_t> seen;
    for (int a : atoms) {
      if (next_env[a].size() == env[a].size()) continue;
      auto [it, inserted] = seen.emplace(next_env[a], next[a]);
      if (!inserted) it->second = std::min(it->second, next[a]);
    }
    for (const auto& [bonds, id] : seen) bits.push_back(static_cast<std::uint32_t>(id & (width - 1)));
    ids = std::move(next);
    env = std::move(next_env);
  }
  std::sort(bits.begin(), bits.end());
  bits.erase(std::unique(bits.begin(), bits.end()), bits.end());
  fp.bits = std::move(bits);
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width != b.width) throw Error("WidthMismatch", "fingerprint widths differ");
  if (a.bits.empty() && b.bits.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.bits.begin();
  auto j = b.bits.begin();
  while (i != a.bits.end() && j != b.bits.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.bits.size() + b.bits.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double novel_bits_fraction(const Fingerprint& fp, const Fingerprint& universe) {
  if (fp.width != universe.width) throw Error("WidthMismatch", "fingerprint widths differ");
  if (fp.bits.empty()) return 0.0;
  std::size_t novel = 0;
  for (auto bit : fp.bits) {
    if (!std::binary_search(universe.bits.begin(), universe.bits.end(), bit)) ++novel;
  }
  return static_cast<double>(novel) / static_cast<double>(fp.bits.size());
}

Fingerprint fingerprint_union(std::span<const Fingerprint> fps) {
  Fingerprint out;
  if (fps.empty()) return out;
  out.width = fps.front().width;
  out.radius = fps.front().radius;
  for (const auto& fp : fps) {
    if (fp.width != out.width) throw Error("WidthMismatch", "fingerprint widths differ");
    out.bits.insert(out.bits.end(), fp.bits.begin(), fp.bits.end());
  }
  std::sort(out.bits.begin(), out.bits.end());
  out.bits.erase(std::unique(out.bits.begin(), out.bits.end()), out.bits.end());
  return out;
}

namespace {

// Dense ranks of `keys` (equal keys share a rank), in key order.
template <class Key>
std::vector<long> dense_rank(const std::vector<Key>& keys) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<long> rank(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    rank[i] = std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin();
  return rank;
}

std::size_t class_count(const std::vector<long>& rank) {
  std::vector<long> r = rank;
  std::sort(r.begin(), r.end());
  return static_cast<std::size_t>(std::unique(r.begin(), r.end()) - r.begin());
}

std::vector<long> refine(const MolGraph& mol, std::vector<long> rank) {
  const auto n = mol.atom_count();
  for (;;) {
    using Key = std::pair<long, std::vector<std::pair<int, long>>>;
    std::vector<Key> keys(n);
    for (std::size_t a = 0; a < n; ++a) {
      keys[a].first = rank[a];
      for (const auto& nb : mol.neighbors(static_cast<int>(a)))
        keys[a].second.emplace_back(bond_code(mol.bonds()[nb.bond]), rank[nb.atom]);
      std::sort(keys[a].second.begin(), keys[a].second.end());
    }
    auto next = dense_rank(keys);
    if (class_count(next) == class_count(rank)) return next;
    rank = std::move(next);
  }
}

}  // namespace

std::vector<long> canonical_ranks(const MolGraph& mol) {
  const auto n = mol.atom_count();
  using Inv = std::tuple<std::string, int, int, int, int, int, int>;
  std::vector<Inv> inv(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& atom = mol.atoms()[a];
    inv[a] = {atom.element, atom.aromatic ? 1 : 0, atom.charge, atom.implicit_h,
              mol.degree(static_cast<int>(a)), atom.isotope, mol.in_ring(static_cast<int>(a)) ? 1 : 0};
  }
  auto rank = refine(mol, dense_rank(inv));
  while (class_count(rank) < n) {
    // Break the lowest tied class at its first member, then refine again.
    std::vector<long> counts(n, 0);
    for (long r : rank) ++counts[r];
    long tied = -1;
    for (std::size_t r = 0; r < n; ++r) {
      if (counts[r] > 1) {
        tied = static_cast<long>(r);
        break;
      }
    }
    std::vector<long> doubled(n);
    bool broken = false;
    for (std::size_t a = 0; a < n; ++a) {
      doubled[a] = rank[a] * 2 + 1;
      if (!broken && rank[a] == tied) {
        doubled[a] = rank[a] * 2;
        broken = true;
      }
    }
    rank = refine(mol, dense_rank(doubled));
  }
  return rank;
}

std::string canonical_key(const MolGraph& mol) { return serialize(mol, canonical_ranks(mol)); }

}  // namespace chemrl::chem
