// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "chemrl/scoring/oracles.hpp"

namespace chemrl::scoring {

// Child process scorer. Requests go to its stdin as one JSON object per line,
// {"id": n, "smiles": "..."}, followed by a blank line. The child answers
// with {"id": n, "score": x} lines in any order and ends the batch with a
// blank line. Ids increase over the session.
//
// Errors: ExternalScorerTimeout when a batch takes longer than the timeout,
// ExternalScorerProtocolError for malformed lines, unknown, duplicate or
// missing ids, or a child that exits.
class ExternalScorer final : public ScoringFunction {
 public:
  ExternalScorer(std::vector<std::string> argv, double timeout_s);
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  std::vector<double> score_batch(const std::vector<std::string>& smiles) override;

 private:
  void start();
  void stop();
  std::string read_line(double deadline);

  std::vector<std::string> argv_;
  double timeout_s_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  long next_id_ = 0;
};

}  // namespace chemrl::scoring
