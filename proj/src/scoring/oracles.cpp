// SPDX-License-Identifier: Apache-2.0
#include "chemrl/scoring/oracles.hpp"

#include <cmath>
#include <numeric>

#include "chemrl/chem/descriptors.hpp"
#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/lang/tokenizer.hpp"
#include "chemrl/scoring/external.hpp"

namespace chemrl::scoring {
namespace {

// Oracles that look at one parsed molecule at a time.
class PerMolecule : public ScoringFunction {
 public:
  std::vector<double> score_batch(const std::vector<std::string>& smiles) override {
    std::vector<double> out;
    out.reserve(smiles.size());
    for (const auto& s : smiles) {
      const auto mol = chem::try_parse(s);
      out.push_back(mol ? clamp01(value(s, *mol)) : 0.0);
    }
    return out;
  }

 protected:
  virtual double value(const std::string& smiles, const chem::MolGraph& mol) = 0;
};

class Similarity final : public PerMolecule {
 public:
  explicit Similarity(const std::string& target) {
    const auto mol = chem::try_parse(target);
    if (!mol) throw ConfigError("task.target", "target SMILES does not parse: " + target);
    target_ = chem::fingerprint(*mol);
  }

 protected:
  double value(const std::string&, const chem::MolGraph& mol) override {
    return chem::tanimoto(chem::fingerprint(mol), target_);
  }

 private:
  chem::Fingerprint target_;
};

class MolWeight final : public PerMolecule {
 public:
  MolWeight(double target, double width) : target_(target), width_(width) {
    if (!(width > 0)) throw ConfigError("task.mw_width", "must be > 0");
  }

 protected:
  double value(const std::string&, const chem::MolGraph& mol) override {
    double mw;
    try {
      mw = chem::molecular_weight(mol);
    } catch (const Error&) {
      return 0.0;
    }
    const double d = mw - target_;
    return std::exp(-d * d / (2 * width_ * width_));
  }

 private:
  double target_, width_;
};

class Validity final : public PerMolecule {
 protected:
  double value(const std::string&, const chem::MolGraph&) override { return 1.0; }
};

class Pattern final : public PerMolecule {
 public:
  explicit Pattern(const std::string& pattern) {
    try {
      tokens_ = lang::tokenize(pattern);
    } catch (const Error& e) {
      throw ConfigError("task.pattern", e.what());
    }
    if (tokens_.empty()) throw ConfigError("task.pattern", "empty pattern");
  }

 protected:
  double value(const std::string& smiles, const chem::MolGraph&) override {
    return contains_token_pattern(smiles, tokens_) ? 1.0 : 0.0;
  }

 private:
  std::vector<std::string> tokens_;
};

class Composite final : public ScoringFunction {
 public:
  explicit Composite(const ScoringTask& task) : geometric_(task.geometric) {
    if (task.components.empty()) throw ConfigError("task.components", "composite needs components");
    for (const auto& c : task.components) parts_.push_back(make_scoring_function(c));
    weights_ = task.weights.empty() ? std::vector<double>(parts_.size(), 1.0) : task.weights;
    if (weights_.size() != parts_.size()) throw ConfigError("task.weights", "one weight per component");
    for (double w : weights_)
      if (!(w >= 0)) throw ConfigError("task.weights", "weights must be >= 0");
    total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (!(total_ > 0)) throw ConfigError("task.weights", "weights sum to 0");
  }

  std::vector<double> score_batch(const std::vector<std::string>& smiles) override {
    std::vector<double> acc(smiles.size(), 0.0);
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      if (weights_[k] == 0.0) continue;
      const auto s = parts_[k]->score_batch(smiles);
      for (std::size_t i = 0; i < s.size(); ++i) {
        acc[i] += geometric_ ? weights_[k] * std::log(s[i]) : weights_[k] * s[i];
      }
    }
    for (auto& v : acc) v = clamp01(geometric_ ? std::exp(v / total_) : v / total_);
    return acc;
  }

 private:
  bool geometric_;
  std::vector<std::unique_ptr<ScoringFunction>> parts_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

}  // namespace

double clamp01(double v) {
  if (std::isnan(v)) return 0.0;
  return std::min(1.0, std::max(0.0, v));
}

bool contains_token_pattern(const std::string& smiles, const std::vector<std::string>& frag) {
  std::vector<std::string> toks;
  try {
    toks = lang::tokenize(smiles);
  } catch (const Error&) {
    return false;
  }
  if (frag.empty() || frag.size() > toks.size()) return false;
  return std::search(toks.begin(), toks.end(), frag.begin(), frag.end()) != toks.end();
}

std::string to_string(OracleKind k) {
  switch (k) {
    case OracleKind::SimilarityToTarget: return "similarity";
    case OracleKind::MolWeightTarget: return "mol_weight";
    case OracleKind::ValidityOnly: return "validity";
    case OracleKind::TokenPattern: return "token_pattern";
    case OracleKind::Composite: return "composite";
    case OracleKind::ExternalProcess: return "external";
  }
  return "?";
}

OracleKind oracle_kind_from_string(const std::string& s) {
  for (auto k : {OracleKind::SimilarityToTarget, OracleKind::MolWeightTarget, OracleKind::ValidityOnly,
                 OracleKind::TokenPattern, OracleKind::Composite, OracleKind::ExternalProcess}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("task.oracle", "unknown oracle '" + s + "'");
}

std::unique_ptr<ScoringFunction> make_scoring_function(const ScoringTask& t) {
  switch (t.kind) {
    case OracleKind::SimilarityToTarget: return std::make_unique<Similarity>(t.target);
    case OracleKind::MolWeightTarget: return std::make_unique<MolWeight>(t.target_mw, t.mw_width);
    case OracleKind::ValidityOnly: return std::make_unique<Validity>();
    case OracleKind::TokenPattern: return std::make_unique<Pattern>(t.pattern);
    case OracleKind::Composite: return std::make_unique<Composite>(t);
    case OracleKind::ExternalProcess: return std::make_unique<ExternalScorer>(t.command, t.timeout_s);
  }
  throw ConfigError("task.oracle", "unhandled oracle kind");
}

}  // namespace chemrl::scoring
