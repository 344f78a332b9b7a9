// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "chemrl/chem/mol_graph.hpp"

namespace chemrl::chem {
namespace {

constexpr std::array<std::string_view, 54> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni",
    "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo",
    "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe"};

bool known_element(std::string_view sym) {
  return std::find(kElements.begin(), kElements.end(), sym) != kElements.end();
}

bool aromatic_capable(std::string_view sym) {
  return sym == "B" || sym == "C" || sym == "N" || sym == "O" || sym == "P" || sym == "S" ||
         sym == "Se" || sym == "As";
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

struct PendingRing {
  int atom;
  int order;  // 0 when unspecified
  bool aromatic_bond;
  std::size_t position;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  ParseResult run() {
    if (s_.empty()) return fail(ParseErrorKind::EmptyInput, 0, "empty input");
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (prev_ < 0) return fail(ParseErrorKind::UnbalancedParenthesis, pos_, "branch without preceding atom");
        if (bond_pending_) return fail(ParseErrorKind::UnbalancedParenthesis, pos_, "bond before branch");
        branch_stack_.push_back({prev_, pos_});
        ++pos_;
        if (pos_ < s_.size() && s_[pos_] == ')')
          return fail(ParseErrorKind::UnbalancedParenthesis, pos_, "empty branch");
      } else if (c == ')') {
        if (branch_stack_.empty()) return fail(ParseErrorKind::UnbalancedParenthesis, pos_, "unmatched ')'");
        if (bond_pending_) return fail(ParseErrorKind::UnknownElement, bond_pos_, "dangling bond");
        prev_ = branch_stack_.back().first;
        branch_stack_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
        if (bond_pending_) return fail(ParseErrorKind::UnknownElement, pos_, "consecutive bond symbols");
        if (prev_ < 0) return fail(ParseErrorKind::UnknownElement, pos_, "bond without preceding atom");
        bond_pending_ = true;
        bond_pos_ = pos_;
        bond_order_ = c == '=' ? 2 : c == '#' ? 3 : 1;
        bond_aromatic_ = c == ':';
        bond_explicit_ = true;
        ++pos_;
      } else if (c == '.') {
        if (bond_pending_ || prev_ < 0) return fail(ParseErrorKind::UnknownElement, pos_, "misplaced '.'");
        prev_ = -1;
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (auto err = ring_closure()) return *err;
      } else if (c == '[') {
        if (auto err = bracket_atom()) return *err;
      } else {
        if (auto err = organic_atom()) return *err;
      }
    }
    if (bond_pending_) return fail(ParseErrorKind::UnknownElement, bond_pos_, "dangling bond");
    if (!branch_stack_.empty())
      return fail(ParseErrorKind::UnbalancedParenthesis, branch_stack_.back().second, "unclosed '('");
    if (!open_rings_.empty()) {
      // Report the leftmost unmatched ring opening.
      const PendingRing* first = nullptr;
      for (const auto& [_, ring] : open_rings_) {
        if (first == nullptr || ring.position < first->position) first = &ring;
      }
      return fail(ParseErrorKind::UnclosedRing, first->position, "ring bond never closed");
    }
    return finish();
  }

 private:
  ParseResult fail(ParseErrorKind kind, std::size_t pos, std::string msg) const {
    return ParseError{kind, std::min(pos, s_.empty() ? std::size_t{0} : s_.size() - 1), std::move(msg)};
  }

  std::optional<ParseResult> add_atom(Atom atom, bool bracket, int hcount, std::size_t at) {
    const int idx = mol_.add_atom(std::move(atom));
    positions_.push_back(at);
    bracket_.push_back(bracket);
    bracket_h_.push_back(hcount);
    if (prev_ >= 0) {
      const auto& a = mol_.atoms()[prev_];
      const auto& b = mol_.atoms()[idx];
      int order = bond_order_;
      bool aromatic = bond_aromatic_;
      if (!bond_explicit_) {
        aromatic = a.aromatic && b.aromatic;
        order = 1;
      }
      mol_.add_bond(prev_, idx, order, aromatic);
    }
    prev_ = idx;
    bond_pending_ = false;
    bond_explicit_ = false;
    bond_order_ = 1;
    bond_aromatic_ = false;
    return std::nullopt;
  }

  std::optional<ParseResult> organic_atom() {
    const std::size_t at = pos_;
    std::string_view sym;
    bool aromatic = false;
    const auto rest = s_.substr(pos_);
    if (rest.starts_with("Cl") || rest.starts_with("Br")) {
      sym = rest.substr(0, 2);
    } else {
      const char c = rest[0];
      switch (c) {
        case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
          sym = rest.substr(0, 1);
          break;
        case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
          sym = rest.substr(0, 1);
          aromatic = true;
          break;
        default:
          return fail(ParseErrorKind::UnknownElement, pos_, std::string("unexpected character '") + c + "'");
      }
    }
    pos_ += sym.size();
    Atom atom;
    atom.element = capitalize(sym);
    atom.aromatic = aromatic;
    return add_atom(std::move(atom), false, 0, at);
  }

  std::optional<ParseResult> bracket_atom() {
    const std::size_t open = pos_;
    const auto close = s_.find(']', pos_);
    if (close == std::string_view::npos)
      return fail(ParseErrorKind::MalformedBracketAtom, open, "unterminated bracket atom");
    const auto body = s_.substr(open + 1, close - open - 1);
    std::size_t i = 0;
    auto bad = [&](const char* msg) { return fail(ParseErrorKind::MalformedBracketAtom, open, msg); };
    Atom atom;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      atom.isotope = atom.isotope * 10 + (body[i] - '0');
      ++i;
    }
    if (i >= body.size()) return bad("missing element symbol");
    std::string sym;
    if (std::islower(static_cast<unsigned char>(body[i]))) {
      // Aromatic: se, as, or single letter.
      if (body.substr(i).starts_with("se") || body.substr(i).starts_with("as")) {
        sym = std::string(body.substr(i, 2));
      } else {
        sym = std::string(1, body[i]);
      }
      atom.aromatic = true;
      if (!aromatic_capable(capitalize(sym))) return fail(ParseErrorKind::UnknownElement, open, "unknown aromatic symbol");
    } else if (std::isupper(static_cast<unsigned char>(body[i]))) {
      if (i + 1 < body.size() && std::islower(static_cast<unsigned char>(body[i + 1])) &&
          known_element(body.substr(i, 2))) {
        sym = std::string(body.substr(i, 2));
      } else {
        sym = std::string(1, body[i]);
      }
      if (!known_element(sym)) return fail(ParseErrorKind::UnknownElement, open, "unknown element");
    } else {
      return bad("missing element symbol");
    }
    i += sym.size();
    atom.element = capitalize(sym);
    // Chirality is parsed and discarded.
    if (i < body.size() && body[i] == '@') {
      ++i;
      if (i < body.size() && body[i] == '@') ++i;
      while (i < body.size() && (std::isupper(static_cast<unsigned char>(body[i])) && body[i] != 'H')) ++i;
      while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
    }
    int hcount = 0;
    if (i < body.size() && body[i] == 'H') {
      ++i;
      hcount = 1;
      if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
        hcount = body[i] - '0';
        ++i;
      }
    }
    if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
      const char sign = body[i];
      int mag = 1;
      ++i;
      if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
        mag = body[i] - '0';
        ++i;
      } else {
        while (i < body.size() && body[i] == sign) {
          ++mag;
          ++i;
        }
      }
      atom.charge = sign == '+' ? mag : -mag;
    }
    if (i < body.size() && body[i] == ':') {
      ++i;
      if (i >= body.size()) return bad("empty atom class");
      while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
    }
    if (i != body.size()) return bad("unexpected text in bracket atom");
    pos_ = close + 1;
    atom.implicit_h = hcount;
    return add_atom(std::move(atom), true, hcount, open);
  }

  std::optional<ParseResult> ring_closure() {
    const std::size_t at = pos_;
    int number = 0;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
        return fail(ParseErrorKind::UnclosedRing, at, "malformed %nn ring number");
      number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = s_[pos_] - '0';
      pos_ += 1;
    }
    if (prev_ < 0) return fail(ParseErrorKind::UnclosedRing, at, "ring number without atom");
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      open_rings_[number] = PendingRing{prev_, bond_explicit_ ? bond_order_ : 0,
                                        bond_explicit_ && bond_aromatic_, at};
    } else {
      const PendingRing ring = it->second;
      open_rings_.erase(it);
      int order = ring.order;
      bool aromatic = ring.aromatic_bond;
      if (bond_explicit_) {
        if (ring.order != 0 && (ring.order != bond_order_ || ring.aromatic_bond != bond_aromatic_))
          return fail(ParseErrorKind::UnclosedRing, at, "conflicting ring bond symbols");
        order = bond_order_;
        aromatic = bond_aromatic_;
      } else if (ring.order == 0) {
        order = 1;
        aromatic = mol_.atoms()[ring.atom].aromatic && mol_.atoms()[prev_].aromatic;
      }
      if (ring.atom == prev_) return fail(ParseErrorKind::UnclosedRing, at, "ring bond to self");
      if (mol_.add_bond(ring.atom, prev_, order, aromatic) < 0)
        return fail(ParseErrorKind::UnclosedRing, at, "duplicate ring bond");
    }
    bond_pending_ = false;
    bond_explicit_ = false;
    bond_order_ = 1;
    bond_aromatic_ = false;
    return std::nullopt;
  }

  ParseResult finish() {
    mol_.perceive_rings();
    // Aromatic-flagged bonds outside rings (e.g. the biaryl link) are single bonds.
    MolGraph fixed;
    for (const auto& a : mol_.atoms()) fixed.add_atom(a);
    for (std::size_t b = 0; b < mol_.bond_count(); ++b) {
      auto bond = mol_.bonds()[b];
      const bool both_aromatic = mol_.atoms()[bond.begin].aromatic && mol_.atoms()[bond.end].aromatic;
      if (bond.aromatic && (!mol_.ring_bond_flags()[b] || !both_aromatic)) bond.aromatic = false;
      fixed.add_bond(bond.begin, bond.end, bond.order, bond.aromatic);
    }
    fixed.perceive_rings();
    for (std::size_t a = 0; a < fixed.atom_count(); ++a) {
      if (fixed.atoms()[a].aromatic && !fixed.in_ring(static_cast<int>(a)))
        return fail(ParseErrorKind::AromaticOutsideRing, positions_[a], "aromatic atom outside a ring");
    }
    for (std::size_t a = 0; a < fixed.atom_count(); ++a) {
      auto& atom = fixed.atoms()[a];
      const int used = fixed.bond_order_sum(static_cast<int>(a));
      const auto allowed = allowed_valences(atom.element, atom.charge);
      if (bracket_[a]) {
        if (!allowed.empty() && used + bracket_h_[a] > allowed.back())
          return fail(ParseErrorKind::ValenceViolation, positions_[a], "valence exceeded");
        atom.implicit_h = bracket_h_[a];
        continue;
      }
      auto v = std::find_if(allowed.begin(), allowed.end(), [&](int x) { return x >= used; });
      if (v == allowed.end())
        return fail(ParseErrorKind::ValenceViolation, positions_[a], "valence exceeded");
      atom.implicit_h = std::max(0, *v - used - (atom.aromatic ? 1 : 0));
    }
    return fixed;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolGraph mol_;
  std::vector<std::size_t> positions_;
  std::vector<bool> bracket_;
  std::vector<int> bracket_h_;
  int prev_ = -1;
  bool bond_pending_ = false;
  bool bond_explicit_ = false;
  bool bond_aromatic_ = false;
  int bond_order_ = 1;
  std::size_t bond_pos_ = 0;
  std::vector<std::pair<int, std::size_t>> branch_stack_;
  std::map<int, PendingRing> open_rings_;
};

}  // namespace

ParseResult parse(std::string_view smiles) { return Parser(smiles).run(); }

std::optional<MolGraph> try_parse(std::string_view smiles) {
  auto res = parse(smiles);
  if (auto* m = std::get_if<MolGraph>(&res)) return std::move(*m);
  return std::nullopt;
}

}  // namespace chemrl::chem
