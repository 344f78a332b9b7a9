// SPDX-License-Identifier: Apache-2.0
#include "chemrl/scoring/diversity.hpp"

namespace chemrl::scoring {

double DiversityMemory::apply(const std::string& smiles, double raw) {
  if (!(raw > settings_.min_score)) return raw;
  const auto mol = chem::try_parse(smiles);
  if (!mol) return raw;
  auto fp = chem::fingerprint(*mol);
  for (auto& b : buckets_) {
    if (chem::tanimoto(b.representative, fp) > settings_.threshold) {
      if (b.count >= settings_.bucket_size) return 0.0;
      ++b.count;
      return raw;
    }
  }
  buckets_.push_back({std::move(fp), 1});
  return raw;
}

}  // namespace chemrl::scoring
