// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

namespace chemrl::scoring {

enum class OracleKind { SimilarityToTarget, MolWeightTarget, ValidityOnly, TokenPattern, Composite, ExternalProcess };

std::string to_string(OracleKind kind);
OracleKind oracle_kind_from_string(const std::string& name);  // throws ConfigError

struct DiversitySettings {
  bool enabled = false;
  double threshold = 0.35;  // bucket membership: similarity > threshold
  int bucket_size = 25;     // occupancy limit N
  double min_score = 0.5;   // only raw scores above this occupy memory
};

struct ScoringTask {
  std::string name;
  OracleKind kind = OracleKind::ValidityOnly;
  std::string target;           // SimilarityToTarget: SMILES
  double target_mw = 300.0;     // MolWeightTarget
  double mw_width = 50.0;
  std::string pattern;          // TokenPattern: SMILES fragment
  std::vector<ScoringTask> components;  // Composite
  std::vector<double> weights;          // Composite, defaults to equal
  bool geometric = false;               // Composite: weighted geometric mean
  std::vector<std::string> command;     // ExternalProcess argv
  double timeout_s = 30.0;
  DiversitySettings diversity;
};

// String -> score in [0, 1]. Unparseable strings score 0.
class ScoringFunction {
 public:
  virtual ~ScoringFunction() = default;
  // Output order matches input order.
  virtual std::vector<double> score_batch(const std::vector<std::string>& smiles) = 0;
  double score(const std::string& smiles) { return score_batch({smiles}).front(); }
};

// Throws ConfigError for an incomplete task (missing target, bad weights...).
std::unique_ptr<ScoringFunction> make_scoring_function(const ScoringTask& task);

double clamp01(double v);

// True when the tokens of `fragment` occur contiguously in the tokens of
// `smiles`. Untokenizable input never matches.
bool contains_token_pattern(const std::string& smiles, const std::vector<std::string>& fragment_tokens);

}  // namespace chemrl::scoring
