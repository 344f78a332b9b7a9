// SPDX-License-Identifier: Apache-2.0
#include "chemrl/scoring/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <json.hpp>
#include <map>

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/common/error.hpp"

namespace chemrl::scoring {
namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

[[noreturn]] void protocol_error(const std::string& what) { throw Error("ExternalScorerProtocolError", what); }

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      protocol_error("scorer closed its input");
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

ExternalScorer::ExternalScorer(std::vector<std::string> argv, double timeout_s)
    : argv_(std::move(argv)), timeout_s_(timeout_s) {
  if (argv_.empty()) throw ConfigError("task.command", "external scorer needs a command");
  if (!(timeout_s_ > 0)) throw ConfigError("task.timeout", "must be > 0");
  // A scorer that dies must surface as a protocol error, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
  start();
}

ExternalScorer::~ExternalScorer() { stop(); }

void ExternalScorer::start() {
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw Error("IoError", "pipe() failed");
  const pid_t pid = ::fork();
  if (pid < 0) throw Error("IoError", "fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

void ExternalScorer::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Give a well-behaved child a moment to exit on EOF.
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(5000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ExternalScorer::read_line(double deadline) {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const double left = deadline - now_s();
    if (left <= 0) {
      stop();
      throw Error("ExternalScorerTimeout", "no complete response within " + std::to_string(timeout_s_) + " s");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(std::ceil(left * 1000)));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) continue;
    char buf[4096];
    const ssize_t n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) protocol_error("scorer exited before finishing the batch");
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalScorer::score_batch(const std::vector<std::string>& all) {
  // Unparseable strings score 0 without a round trip.
  std::vector<double> result(all.size(), 0.0);
  std::vector<std::size_t> sent;
  std::vector<std::string> smiles;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (chem::is_valid(all[i])) {
      sent.push_back(i);
      smiles.push_back(all[i]);
    }
  }
  if (smiles.empty()) return result;
  if (pid_ < 0) protocol_error("scorer is not running");
  const long first = next_id_;
  std::string req;
  for (const auto& s : smiles) {
    req += nlohmann::json{{"id", next_id_++}, {"smiles", s}}.dump() + "\n";
  }
  req += "\n";
  write_all(to_child_, req);

  const double deadline = now_s() + timeout_s_;
  std::map<long, double> got;
  for (;;) {
    const auto line = read_line(deadline);
    if (line.empty()) break;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      protocol_error("malformed response line: " + line);
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("score") || !j["id"].is_number_integer() ||
        !j["score"].is_number())
      protocol_error("response needs integer id and numeric score: " + line);
    const long id = j["id"].get<long>();
    const double score = j["score"].get<double>();
    if (id < first || id >= next_id_) protocol_error("unknown id " + std::to_string(id));
    if (!std::isfinite(score)) protocol_error("non-finite score for id " + std::to_string(id));
    if (!got.emplace(id, score).second) protocol_error("duplicate id " + std::to_string(id));
  }
  for (long id = first; id < next_id_; ++id) {
    const auto it = got.find(id);
    if (it == got.end()) protocol_error("missing id " + std::to_string(id));
    result[sent[static_cast<std::size_t>(id - first)]] = clamp01(it->second);
  }
  return result;
}

}  // namespace chemrl::scoring
