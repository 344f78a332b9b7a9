// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/scoring/oracles.hpp"

namespace chemrl::scoring {

// Bucket memory over fingerprints. A candidate with raw score above
// min_score joins the first bucket whose representative is more than
// `threshold` similar; a full bucket (count >= bucket_size) zeroes the
// score. Candidates at or below min_score, and unparseable ones, pass
// through untouched and are not remembered.
class DiversityMemory {
 public:
  struct Bucket {
    chem::Fingerprint representative;
    int count = 0;
  };

  explicit DiversityMemory(DiversitySettings settings = {}) : settings_(settings) {}

  double apply(const std::string& smiles, double raw_score);
  const std::vector<Bucket>& buckets() const { return buckets_; }
  const DiversitySettings& settings() const { return settings_; }

 private:
  DiversitySettings settings_;
  std::vector<Bucket> buckets_;
};

}  // namespace chemrl::scoring
