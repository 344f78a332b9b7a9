// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace chemrl::lang {

// One generation episode. `tokens` excludes GO and includes EOS when it was
// emitted. Prompt tokens are teacher-forced: their log-probabilities are
// recorded but `actionable` is false for them.
struct Trajectory {
  std::vector<int> tokens;
  std::vector<char> actionable;
  std::vector<double> agent_log_probs;
  std::vector<double> prior_log_probs;  // empty until evaluated
  bool truncated = false;
  std::string smiles;

  std::size_t length() const { return tokens.size(); }

  // Sum of agent log-probabilities over actionable steps.
  double agent_log_prob() const;
  double prior_log_prob() const;

  bool has_reward() const { return reward_.has_value(); }
  double reward() const;  // throws RewardUnset
  // Terminal reward; throws RewardAlreadySet on a second call.
  void set_reward(double r);
  // Used by replay, which re-issues stored episodes with their stored reward.
  void reset_reward() { reward_.reset(); }

 private:
  std::optional<double> reward_;
};

enum class PromptMode { DeNovo, Prefix, Scaffold };

struct PromptSpec {
  PromptMode mode = PromptMode::DeNovo;
  std::string prefix;  // Prefix mode
  // Scaffold mode: template with '*' attachment markers, plus one prompt per
  // marker. A '*' inside a prompt is replaced by the completions already
  // chosen for earlier markers, in order.
  std::string scaffold;
  std::vector<std::string> attachment_prompts;

  static PromptSpec de_novo() { return {}; }
  static PromptSpec with_prefix(std::string p) {
    PromptSpec s;
    s.mode = PromptMode::Prefix;
    s.prefix = std::move(p);
    return s;
  }
};

}  // namespace chemrl::lang
