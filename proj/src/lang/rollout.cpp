// SPDX-License-Identifier: Apache-2.0
#include "chemrl/lang/rollout.hpp"

#include "chemrl/common/error.hpp"
#include "chemrl/lang/tokenizer.hpp"
#include "chemrl/model/gru_kernels.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/model/softmax.hpp"

namespace chemrl::lang {
namespace {

int sample_action(const Eigen::VectorXd& log_probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  int last_positive = 0;
  for (Eigen::Index a = 0; a < log_probs.size(); ++a) {
    const double p = std::exp(log_probs(a));
    if (p <= 0.0) continue;
    last_positive = static_cast<int>(a);
    cum += p;
    if (u < cum) return static_cast<int>(a);
  }
  return last_positive;
}

int branch_depth(const Vocabulary& vocab, const std::vector<int>& ids) {
  int depth = 0;
  for (int id : ids) {
    const auto& t = vocab.token(id);
    if (t == "(") ++depth;
    if (t == ")") --depth;
  }
  return depth;
}

}  // namespace

std::vector<int> encode_prompt(const Vocabulary& vocab, std::string_view text) {
  try {
    return vocab.encode_smiles(text);
  } catch (const Error& e) {
    throw Error("PromptTokenUnknown", "prompt '" + std::string(text) + "': " + e.what());
  }
}

std::vector<Trajectory> rollout_prompted(const model::PolicyParams& policy, const Vocabulary& vocab,
                                         const std::vector<std::vector<int>>& prompts, int max_len, Rng& rng,
                                         bool stop_on_branch_close) {
  if (max_len < 1) throw Error("InvalidPrompt", "max_len must be >= 1");
  if (policy.shape.vocab_size != static_cast<int>(vocab.size()))
    throw Error("ShapeMismatch", "policy and vocabulary disagree on action-space size");
  const std::size_t n = prompts.size();
  for (const auto& p : prompts) {
    if (static_cast<int>(p.size()) >= max_len) throw Error("InvalidPrompt", "prompt is not shorter than max_len");
  }
  std::vector<Trajectory> out(n);
  std::vector<int> open_depth(n, 0), depth(n, 0);
  if (stop_on_branch_close) {
    for (std::size_t b = 0; b < n; ++b) open_depth[b] = depth[b] = branch_depth(vocab, prompts[b]);
  }
  std::vector<char> done(n, 0);
  std::vector<int> inputs(n, kGoId);
  const int close_paren = vocab.contains(")") ? vocab.id(")") : -1;
  const int open_paren = vocab.contains("(") ? vocab.id("(") : -1;
  model::StepState state(policy, n);
  std::size_t remaining = n;
  for (int t = 0; t < max_len && remaining > 0; ++t) {
    const model::Matrix logits = model::step(policy, inputs, state);
    for (std::size_t b = 0; b < n; ++b) {
      if (done[b]) {
        inputs[b] = kPadId;
        continue;
      }
      const Eigen::VectorXd lp = model::log_softmax(logits.col(static_cast<Eigen::Index>(b)));
      auto& traj = out[b];
      int token;
      bool actionable = true;
      if (static_cast<std::size_t>(t) < prompts[b].size()) {
        token = prompts[b][t];
        actionable = false;
      } else {
        token = model::token_of_action(sample_action(lp, rng));
      }
      traj.tokens.push_back(token);
      traj.actionable.push_back(actionable ? 1 : 0);
      traj.agent_log_probs.push_back(lp(model::action_index(token)));
      inputs[b] = token;
      bool finished = token == kEosId;
      if (stop_on_branch_close && actionable && open_depth[b] > 0) {
        if (token == open_paren) ++depth[b];
        if (token == close_paren && --depth[b] < open_depth[b]) finished = true;
      }
      if (finished) {
        done[b] = 1;
        --remaining;
      }
    }
  }
  for (std::size_t b = 0; b < n; ++b) {
    out[b].truncated = !done[b];
    out[b].smiles = vocab.decode(out[b].tokens);
  }
  return out;
}

std::vector<Trajectory> rollout(const model::PolicyParams& policy, const Vocabulary& vocab, std::size_t batch_size,
                                int max_len, Rng& rng, const PromptSpec& prompt) {
  std::vector<int> prefix;
  switch (prompt.mode) {
    case PromptMode::DeNovo: break;
    case PromptMode::Prefix: prefix = encode_prompt(vocab, prompt.prefix); break;
    case PromptMode::Scaffold: throw Error("InvalidPrompt", "scaffold prompts go through decorate_scaffold");
  }
  return rollout_prompted(policy, vocab, std::vector<std::vector<int>>(batch_size, prefix), max_len, rng);
}

std::vector<Decoration> decorate_scaffold(const model::PolicyParams& policy, const Vocabulary& vocab,
                                          const PromptSpec& spec, std::size_t samples, int max_len, Rng& rng) {
  if (spec.mode != PromptMode::Scaffold) throw Error("InvalidPrompt", "decorate_scaffold needs Scaffold mode");
  const auto markers = static_cast<std::size_t>(std::count(spec.scaffold.begin(), spec.scaffold.end(), '*'));
  if (markers == 0) throw Error("InvalidPrompt", "scaffold template has no '*' attachment marker");
  if (spec.attachment_prompts.size() != markers)
    throw Error("InvalidPrompt", "need one prompt per attachment marker");

  // Replaces the first `count` '*' markers of `text` with `fills`.
  auto splice = [](std::string text, const std::vector<std::string>& fills, std::size_t count) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < count; ++k) {
      pos = text.find('*', pos);
      if (pos == std::string::npos) break;
      text.replace(pos, 1, fills[k]);
      pos += fills[k].size();
    }
    return text;
  };

  std::vector<Decoration> out(samples);
  for (std::size_t i = 0; i < markers; ++i) {
    std::vector<std::vector<int>> prompts(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      const auto& raw = spec.attachment_prompts[i];
      if (static_cast<std::size_t>(std::count(raw.begin(), raw.end(), '*')) > i)
        throw Error("InvalidPrompt", "prompt " + std::to_string(i) + " references a later marker");
      const auto text = splice(raw, out[s].completions, i);
      try {
        prompts[s] = vocab.encode_smiles(text);
      } catch (const Error& e) {
        throw Error("SpliceProducesUntokenizableString", "prompt '" + text + "': " + e.what());
      }
      out[s].prompts.push_back(text);
    }
    auto segs = rollout_prompted(policy, vocab, prompts, max_len, rng, /*stop_on_branch_close=*/true);
    for (std::size_t s = 0; s < samples; ++s) {
      auto& seg = segs[s];
      std::vector<int> sampled;
      for (std::size_t t = prompts[s].size(); t < seg.tokens.size(); ++t) sampled.push_back(seg.tokens[t]);
      // A closing ')' that ended the branch is not part of the completion.
      if (!seg.truncated && !sampled.empty() && sampled.back() != kEosId) sampled.pop_back();
      const auto completion = vocab.decode(sampled);
      if (completion.empty()) out[s].empty_completion = true;
      out[s].completions.push_back(completion);
      out[s].segments.push_back(std::move(seg));
    }
  }
  for (auto& d : out) {
    d.smiles = splice(spec.scaffold, d.completions, markers);
    try {
      tokenize(d.smiles);
    } catch (const Error& e) {
      throw Error("SpliceProducesUntokenizableString", "'" + d.smiles + "': " + e.what());
    }
  }
  return out;
}

}  // namespace chemrl::lang
