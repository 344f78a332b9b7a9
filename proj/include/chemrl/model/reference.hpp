// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "chemrl/model/params.hpp"

// Serial, loop-based forward pass over one sequence. Kept as the reference
// the chunked kernels are tested and benchmarked against; it shares no code
// with gru_kernels.cpp.
namespace chemrl::model::reference {

struct SequenceOutput {
  std::vector<std::vector<double>> logits;  // [t][action]
  std::vector<double> values;               // [t], empty without critic
};

SequenceOutput forward_sequence(const PolicyParams& params, const std::vector<int>& inputs);

std::vector<SequenceOutput> forward_batch(const PolicyParams& params,
                                          const std::vector<std::vector<int>>& inputs);

}  // namespace chemrl::model::reference
