// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "chemrl/common/rng.hpp"
#include "chemrl/lang/trajectory.hpp"
#include "chemrl/lang/vocabulary.hpp"
#include "chemrl/model/params.hpp"

namespace chemrl::lang {

// Samples `batch_size` episodes. Each starts from GO, teacher-forces the
// prompt tokens (Prefix mode; recorded with actionable = false), then
// samples until EOS or until `max_len` tokens (prompt included) have been
// produced, in which case the episode is marked truncated.
//
// Throws PromptTokenUnknown when the prefix does not tokenize into the
// vocabulary, and Error("InvalidPrompt") for Scaffold mode (use
// decorate_scaffold) or a prefix of max_len tokens or more.
std::vector<Trajectory> rollout(const model::PolicyParams& policy, const Vocabulary& vocab,
                                std::size_t batch_size, int max_len, Rng& rng,
                                const PromptSpec& prompt = PromptSpec::de_novo());

// Per-episode prompts. When `stop_on_branch_close` is set, sampling also
// ends (without EOS) on a ')' that closes a branch left open by the prompt.
std::vector<Trajectory> rollout_prompted(const model::PolicyParams& policy, const Vocabulary& vocab,
                                         const std::vector<std::vector<int>>& prompts, int max_len,
                                         Rng& rng, bool stop_on_branch_close = false);

// Encodes a prompt string, mapping tokenizer/vocabulary failures to
// PromptTokenUnknown.
std::vector<int> encode_prompt(const Vocabulary& vocab, std::string_view text);

struct Decoration {
  std::string smiles;                     // template with every marker filled
  std::vector<std::string> prompts;       // conditioned prompt used per marker
  std::vector<std::string> completions;   // text spliced in per marker
  std::vector<Trajectory> segments;       // one episode per marker
  bool empty_completion = false;          // some marker received ""
};

// Fills the template's '*' markers left to right. For marker i the prompt is
// attachment_prompts[i] with its own '*' markers replaced by the completions
// already chosen for markers 0..i-1; the sampled continuation (up to EOS or
// the ')' closing the prompt's open branch) is spliced in at the marker.
//
// Throws InvalidPrompt for a template without markers or a prompt count
// mismatch, and SpliceProducesUntokenizableString when an assembled string
// no longer tokenizes.
std::vector<Decoration> decorate_scaffold(const model::PolicyParams& policy, const Vocabulary& vocab,
                                          const PromptSpec& scaffold, std::size_t samples, int max_len,
                                          Rng& rng);

}  // namespace chemrl::lang
