// SPDX-License-Identifier: Apache-2.0
#include "chemrl/lang/tokenizer.hpp"

#include <cctype>
#include <string_view>

#include "chemrl/common/error.hpp"

namespace chemrl::lang {

namespace {
constexpr std::string_view kSingles = "BCNOPSFIbcnops()=#-/\\:.*";
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '[') {
      const auto close = s.find(']', i + 1);
      const auto next_open = s.find('[', i + 1);
      if (close == std::string_view::npos || (next_open != std::string_view::npos && next_open < close))
        throw Error("UnterminatedBracket", "bracket opened at " + std::to_string(i) + " is not closed");
      out.emplace_back(s.substr(i, close - i + 1));
      i = close + 1;
    } else if (c == '%') {
      if (i + 2 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s[i + 2])))
        throw Error("MalformedPercent", "'%' at " + std::to_string(i) + " needs two digits");
      out.emplace_back(s.substr(i, 3));
      i += 3;
    } else if (s.substr(i, 2) == "Cl" || s.substr(i, 2) == "Br") {
      out.emplace_back(s.substr(i, 2));
      i += 2;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || kSingles.find(c) != std::string_view::npos) {
      out.emplace_back(1, c);
      ++i;
    } else {
      throw Error("UnexpectedCharacter", std::string("'") + c + "' at " + std::to_string(i));
    }
  }
  return out;
}

}  // namespace chemrl::lang
