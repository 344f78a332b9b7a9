// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chemrl::lang {

// Longest-match SMILES tokenization: "[...]" bracket atoms, "Cl", "Br" and
// "%nn" ring labels are single tokens; every other character is its own
// token. Characters outside the SMILES alphabet (e.g. '@' outside a bracket)
// are rejected.
//
// Throws Error with code UnterminatedBracket, MalformedPercent or
// UnexpectedCharacter.
std::vector<std::string> tokenize(std::string_view smiles);

}  // namespace chemrl::lang
