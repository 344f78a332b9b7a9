// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <numeric>

#include "chemrl/chem/mol_graph.hpp"

namespace chemrl::chem {
namespace {

std::string atom_text(const Atom& a) {
  std::string s = "[";
  if (a.isotope > 0) s += std::to_string(a.isotope);
  std::string sym = a.element;
  if (a.aromatic) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  s += sym;
  if (a.implicit_h > 0) {
    s += 'H';
    if (a.implicit_h > 1) s += std::to_string(a.implicit_h);
  }
  if (a.charge != 0) {
    s += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) s += std::to_string(std::abs(a.charge));
  }
  s += ']';
  return s;
}

char bond_symbol(const Bond& b) {
  if (b.aromatic) return ':';
  switch (b.order) {
    case 2: return '=';
    case 3: return '#';
    default: return '-';
  }
}

std::string ring_label(int n) { return n < 10 ? std::to_string(n) : "%" + std::to_string(n); }

class Writer {
 public:
  Writer(const MolGraph& mol, std::vector<long> rank) : mol_(mol), rank_(std::move(rank)) {
    const auto n = mol.atom_count();
    if (rank_.empty()) {
      rank_.resize(n);
      std::iota(rank_.begin(), rank_.end(), 0L);
    }
    sorted_nbrs_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      sorted_nbrs_[a] = mol.neighbors(static_cast<int>(a));
      std::stable_sort(sorted_nbrs_[a].begin(), sorted_nbrs_[a].end(),
                       [&](const auto& x, const auto& y) { return rank_[x.atom] < rank_[y.atom]; });
    }
  }

  std::string run() {
    const auto n = mol_.atom_count();
    visited_.assign(n, false);
    parent_bond_.assign(n, -1);
    children_.assign(n, {});
    closures_.assign(n, {});
    bond_is_tree_.assign(mol_.bond_count(), false);
    bond_is_closure_.assign(mol_.bond_count(), false);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rank_[a] < rank_[b]; });
    std::string out;
    for (int start : order) {
      if (visited_[start]) continue;
      classify(start);
      if (!out.empty()) out += '.';
      digit_of_bond_.assign(mol_.bond_count(), 0);
      write(start, out);
    }
    return out;
  }

 private:
  void classify(int root) {
    struct Frame {
      int atom;
      std::size_t next;
    };
    std::vector<Frame> stack{{root, 0}};
    visited_[root] = true;
    while (!stack.empty()) {
      auto& f = stack.back();
      const auto& nbrs = sorted_nbrs_[f.atom];
      if (f.next >= nbrs.size()) {
        stack.pop_back();
        continue;
      }
      const auto nb = nbrs[f.next++];
      if (nb.bond == parent_bond_[f.atom] || bond_is_tree_[nb.bond] || bond_is_closure_[nb.bond]) continue;
      if (!visited_[nb.atom]) {
        visited_[nb.atom] = true;
        parent_bond_[nb.atom] = nb.bond;
        bond_is_tree_[nb.bond] = true;
        children_[f.atom].push_back(nb);
        stack.push_back({nb.atom, 0});
      } else {
        bond_is_closure_[nb.bond] = true;
        closures_[f.atom].push_back(nb);
        closures_[nb.atom].push_back({f.atom, nb.bond});
      }
    }
  }

  void write(int atom, std::string& out) {
    out += atom_text(mol_.atoms()[atom]);
    for (const auto& c : closures_[atom]) {
      if (digit_of_bond_[c.bond] != 0) {
        const int d = digit_of_bond_[c.bond];
        out += ring_label(d);
        in_use_.erase(std::find(in_use_.begin(), in_use_.end(), d));
      } else {
        int d = 1;
        while (std::find(in_use_.begin(), in_use_.end(), d) != in_use_.end()) ++d;
        in_use_.push_back(d);
        digit_of_bond_[c.bond] = d;
        out += bond_symbol(mol_.bonds()[c.bond]);
        out += ring_label(d);
      }
    }
    const auto& kids = children_[atom];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool branch = i + 1 < kids.size();
      if (branch) out += '(';
      out += bond_symbol(mol_.bonds()[kids[i].bond]);
      write(kids[i].atom, out);
      if (branch) out += ')';
    }
  }

  const MolGraph& mol_;
  std::vector<long> rank_;
  std::vector<std::vector<MolGraph::Neighbor>> sorted_nbrs_;
  std::vector<bool> visited_;
  std::vector<int> parent_bond_;
  std::vector<std::vector<MolGraph::Neighbor>> children_;
  std::vector<std::vector<MolGraph::Neighbor>> closures_;
  std::vector<bool> bond_is_tree_;
  std::vector<bool> bond_is_closure_;
  std::vector<int> digit_of_bond_;
  std::vector<int> in_use_;
};

}  // namespace

std::string serialize(const MolGraph& mol, const std::vector<long>& rank) {
  return Writer(mol, rank).run();
}

}  // namespace chemrl::chem
