// SPDX-License-Identifier: Apache-2.0
#include "chemrl/chem/tables.hpp"

#include <charconv>
#include <fstream>

#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"

namespace chemrl::chem {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<TableRow> load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("MissingDataTable", "cannot open " + path.string());
  std::vector<TableRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw Error("BadDataTable", path.string() + ":" + std::to_string(lineno) + ": expected 2 columns");
    const auto pattern = trim(fields[0]);
    const auto value_text = trim(fields[1]);
    if (pattern == "pattern" && value_text == "value") continue;
    double v = 0;
    auto res = std::from_chars(value_text.data(), value_text.data() + value_text.size(), v);
    if (res.ec != std::errc() || res.ptr != value_text.data() + value_text.size())
      throw Error("BadDataTable", path.string() + ":" + std::to_string(lineno) + ": bad number");
    rows.push_back({pattern, v});
  }
  return rows;
}

DescriptorTables load_descriptor_tables(const std::filesystem::path& dir) {
  DescriptorTables t;
  for (const auto& r : load_table(dir / "atomic_weights.csv")) t.weights.by_element[r.pattern] = r.value;
  const auto logp_path = dir / "logp_contributions.csv";
  for (const auto& r : load_table(logp_path)) t.logp.by_pattern[r.pattern] = r.value;
  // The version is carried in a "# version: X" comment.
  std::ifstream in(logp_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# version:", 0) == 0) {
      t.logp.version = trim(line.substr(10));
      break;
    }
  }
  return t;
}

const DescriptorTables& default_tables() {
  static const DescriptorTables tables = load_descriptor_tables(chemrl::data_dir());
  return tables;
}

}  // namespace chemrl::chem
