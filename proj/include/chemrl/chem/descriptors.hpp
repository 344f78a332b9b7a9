// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/chem/tables.hpp"

namespace chemrl::chem {

// Sum of standard atomic weights of all atoms plus their hydrogens.
// Throws Error("UnknownElement") for an element missing from the table.
double molecular_weight(const MolGraph& mol, const AtomicWeights& weights = default_tables().weights);

// Non-ring, non-aromatic single bonds whose endpoints are both heavy atoms
// with heavy-atom degree >= 2. Amide bonds are not excluded.
int rotatable_bond_count(const MolGraph& mol);

struct LogPEstimate {
  double value = 0.0;
  int unknown_atoms = 0;  // atoms with no table row; contributed 0
  bool warning() const { return unknown_atoms > 0; }
};

LogPEstimate logp_estimate(const MolGraph& mol, const LogPTable& table = default_tables().logp);

// Pattern used to look an atom up in the logP table, most specific first.
std::vector<std::string> logp_patterns(const MolGraph& mol, int atom);

int heavy_atom_count(const MolGraph& mol);

}  // namespace chemrl::chem
