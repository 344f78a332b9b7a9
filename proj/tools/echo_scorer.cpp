// SPDX-License-Identifier: Apache-2.0
// Test double for the external scorer protocol.
//   echo_scorer [--score X] [--reverse] [--drop-last] [--duplicate] [--garbage] [--sleep S]
#include <chrono>
#include <iostream>
#include <json.hpp>
#include <string>
#include <thread>
#include <vector>

int main(int argc, char** argv) {
  double score = 0.5, sleep_s = 0.0;
  bool reverse = false, drop_last = false, duplicate = false, garbage = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--score" && i + 1 < argc) score = std::stod(argv[++i]);
    else if (a == "--sleep" && i + 1 < argc) sleep_s = std::stod(argv[++i]);
    else if (a == "--reverse") reverse = true;
    else if (a == "--drop-last") drop_last = true;
    else if (a == "--duplicate") duplicate = true;
    else if (a == "--garbage") garbage = true;
  }
  std::vector<long> ids;
  for (std::string line; std::getline(std::cin, line);) {
    if (!line.empty()) {
      ids.push_back(nlohmann::json::parse(line)["id"].get<long>());
      continue;
    }
    if (sleep_s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
    if (reverse) std::reverse(ids.begin(), ids.end());
    if (drop_last && !ids.empty()) ids.pop_back();
    if (duplicate && !ids.empty()) ids.push_back(ids.front());
    if (garbage) std::cout << "not json\n";
    for (long id : ids) std::cout << nlohmann::json{{"id", id}, {"score", score}}.dump() << "\n";
    std::cout << "\n" << std::flush;
    ids.clear();
  }
  return 0;
}
