// SPDX-License-Identifier: Apache-2.0
#include "chemrl/metrics/history_io.hpp"

#include <charconv>
#include <set>

#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"

namespace chemrl::metrics {
namespace {

[[noreturn]] void schema(std::size_t row, const std::string& what) {
  throw Error("SchemaMismatch", "row " + std::to_string(row) + ": " + what);
}

template <class T>
T number(std::string_view s, std::size_t row, const char* column) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) schema(row, std::string("column ") + column + " is not a number");
  return v;
}

}  // namespace

std::string format_history_csv(const RunHistory& history, const std::string& algorithm, std::uint64_t seed) {
  std::string out(kHistoryHeader);
  out += "\n";
  std::set<std::string> keys;
  for (const auto& r : history) {
    keys.insert(r.key);
    out += std::to_string(r.oracle_call) + "," + csv_field(r.smiles) + "," + format_double(r.reward) + "," +
           (r.valid ? "1" : "0") + "," + std::to_string(keys.size()) + "," + csv_field(algorithm) + "," +
           std::to_string(seed) + "\n";
  }
  return out;
}

HistoryTable parse_history_table(std::string_view text) {
  HistoryTable table;
  RunHistory& h = table.history;
  std::size_t row = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header) {
      if (line != kHistoryHeader) schema(row, "expected header '" + std::string(kHistoryHeader) + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) schema(row, "expected 7 columns, found " + std::to_string(f.size()));
    HistoryRecord r;
    r.oracle_call = number<long>(f[0], row, "oracle_call");
    r.smiles = f[1];
    r.reward = number<double>(f[2], row, "reward");
    if (f[3] != "0" && f[3] != "1") schema(row, "column valid must be 0 or 1");
    if (r.oracle_call != static_cast<long>(h.size()) + 1) schema(row, "oracle_call indices must be 1..N contiguous");
    if (!(r.reward >= 0.0 && r.reward <= 1.0)) schema(row, "column reward outside [0, 1]");
    number<long>(f[4], row, "unique_so_far");
    const auto seed = number<std::uint64_t>(f[6], row, "seed");
    if (h.empty()) {
      table.algorithm = f[5];
      table.seed = seed;
    } else if (f[5] != table.algorithm || seed != table.seed) {
      schema(row, "columns algorithm and seed must be constant within a history");
    }
    const auto fresh = make_record(r.oracle_call, r.smiles, r.reward);
    r.valid = fresh.valid;
    r.key = fresh.key;
    h.push_back(std::move(r));
  }
  if (!header) schema(1, "missing header");
  if (h.empty()) throw Error("EmptyHistory", "history has no records");
  return table;
}

RunHistory parse_history_csv(std::string_view text) { return parse_history_table(text).history; }

}  // namespace chemrl::metrics
