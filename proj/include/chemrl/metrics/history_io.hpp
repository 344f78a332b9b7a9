// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "chemrl/metrics/metrics.hpp"

namespace chemrl::metrics {

inline constexpr std::string_view kHistoryHeader = "oracle_call,smiles,reward,valid,unique_so_far,algorithm,seed";

// Rewards are written in shortest round-trip form, so reading a history
// back reproduces every reward bit for bit.
std::string format_history_csv(const RunHistory& history, const std::string& algorithm, std::uint64_t seed);

// Throws SchemaMismatch naming the row (1-based, header = row 1) and column,
// EmptyHistory when there are no data rows.
RunHistory parse_history_csv(std::string_view text);

struct HistoryTable {
  RunHistory history;
  std::string algorithm;
  std::uint64_t seed = 0;
};

// As parse_history_csv, also returning the algorithm and seed columns, which
// must be constant across rows.
HistoryTable parse_history_table(std::string_view text);

}  // namespace chemrl::metrics
