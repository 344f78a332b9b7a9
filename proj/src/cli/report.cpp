// SPDX-License-Identifier: Apache-2.0
#include "chemrl/cli/report.hpp"

#include <json.hpp>

#include "chemrl/cli/config.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"

namespace chemrl::cli {
namespace {

using Json = nlohmann::ordered_json;

const std::vector<std::string> kTaskFields = {"name",    "oracle",   "target",     "target_mw", "mw_width",
                                              "pattern", "components", "weights", "geometric", "command",
                                              "timeout"};
const std::vector<std::string> kAlgoKeys = {
    "algo.sigma",         "algo.rho",          "algo.kappa",          "algo.beta",        "algo.clip_eps",
    "algo.ppo_epochs",    "algo.ppo_minibatches", "algo.replay",      "algo.replay_capacity", "algo.replay_sample",
    "algo.entropy_coef",  "algo.value_coef",   "algo.baseline",       "algo.baseline_decay", "algo.lr",
    "algo.grad_clip",     "algo.batch_size",   "algo.max_len"};

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<std::string> split_names(const std::string& key, const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) {
      auto name = cur.substr(b, e - b + 1);
      for (char ch : name)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
          throw ConfigError(key, "name '" + name + "' may only use letters, digits, '_' and '-'");
      if (contains(out, name)) throw ConfigError(key, "duplicate name '" + name + "'");
      out.push_back(name);
    }
    cur.clear();
  };
  for (char ch : v) {
    if (ch == ',') flush();
    else cur += ch;
  }
  flush();
  return out;
}

Json metric_object(const metrics::MetricBundle& b) {
  Json m = Json::object();
  for (const auto& [name, v] : b.fields()) {
    if (name == "oracle_calls") m[name] = b.oracle_calls;
    else if (v) m[name] = *v;
    else m[name] = nullptr;
  }
  return m;
}

std::string csv_value(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

SuiteSpec load_suite(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError("suite", "no such file '" + path.string() + "'");
  const auto kv = parse_kv(read_file(path), path.string());
  SuiteSpec s;
  s.name = kv.count("name") ? kv.at("name") : path.stem().string();
  if (!kv.count("algorithms")) throw ConfigError("suite.algorithms", "is required");
  if (!kv.count("tasks")) throw ConfigError("suite.tasks", "is required");
  const auto algos = split_names("suite.algorithms", kv.at("algorithms"));
  const auto tasks = split_names("suite.tasks", kv.at("tasks"));
  if (algos.empty()) throw ConfigError("suite.algorithms", "no algorithms listed");
  if (tasks.empty()) throw ConfigError("suite.tasks", "no tasks listed");

  for (const auto& [key, value] : kv) {
    if (key == "name" || key == "algorithms" || key == "tasks") continue;
    bool ok = false;
    for (const auto& a : algos) {
      const auto p = "algorithm." + a + ".";
      if (key.rfind(p, 0) == 0) ok = key == p + "preset" || contains(kAlgoKeys, key.substr(p.size()));
    }
    for (const auto& t : tasks) {
      const auto p = "task." + t + ".";
      if (key.rfind(p, 0) == 0) ok = contains(kTaskFields, key.substr(p.size()));
    }
    if (!ok) throw ConfigError("suite." + key, "unknown suite key");
  }

  for (const auto& label : algos) {
    SuiteAlgorithm a;
    a.label = label;
    const auto p = "algorithm." + label + ".";
    a.preset = kv.count(p + "preset") ? kv.at(p + "preset") : label;
    try {
      rl::preset(a.preset);
    } catch (const ConfigError&) {
      throw ConfigError("suite." + p + "preset", "unknown preset '" + a.preset + "'");
    }
    for (const auto& k : kAlgoKeys)
      if (kv.count(p + k)) a.overrides[k] = kv.at(p + k);
    s.algorithms.push_back(std::move(a));
  }
  for (const auto& name : tasks) {
    auto t = scoring_task(kv, "task." + name + ".");
    t.name = name;
    s.tasks.push_back(std::move(t));
  }
  return s;
}

std::filesystem::path cell_dir(const std::filesystem::path& out, const std::string& task, const std::string& algo,
                               std::uint64_t seed) {
  return out / task / algo / ("seed_" + std::to_string(seed));
}

std::string metrics_json(const metrics::MetricBundle& bundle, const std::string& task, const std::string& algorithm,
                         std::uint64_t seed) {
  Json j;
  j["schema"] = kMetricsSchema;
  j["task"] = task;
  j["algorithm"] = algorithm;
  j["seed"] = seed;
  j["metrics"] = metric_object(bundle);
  return j.dump(2) + "\n";
}

metrics::MetricBundle parse_metrics_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaMismatch", std::string("metrics file: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kMetricsSchema || !j.contains("metrics"))
    throw Error("SchemaMismatch", std::string("metrics file: expected schema ") + kMetricsSchema);
  const auto& m = j["metrics"];
  auto opt = [&](const char* name) -> std::optional<double> {
    if (!m.contains(name)) throw Error("SchemaMismatch", std::string("metrics file: missing ") + name);
    if (m[name].is_null()) return std::nullopt;
    return m[name].get<double>();
  };
  metrics::MetricBundle b;
  try {
    b.oracle_calls = m.at("oracle_calls").get<long>();
    b.validity = m.at("validity").get<double>();
    b.uniqueness = m.at("uniqueness").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaMismatch", std::string("metrics file: ") + e.what());
  }
  b.topk_avg = opt("topk_avg");
  b.topk_auc = opt("topk_auc");
  b.diverse_topk_avg = opt("diverse_topk_avg");
  b.diverse_topk_auc = opt("diverse_topk_auc");
  b.sediv = opt("sediv");
  b.filter_pass_fraction = opt("filter_pass_fraction");
  b.filtered_diverse_topk_avg = opt("filtered_diverse_topk_avg");
  b.filtered_diverse_topk_auc = opt("filtered_diverse_topk_auc");
  b.filtered_sediv = opt("filtered_sediv");
  return b;
}

std::string evaluation_json(const std::vector<EvaluatedRun>& runs) {
  Json j;
  j["schema"] = "chemrl-evaluation/1";
  Json arr = Json::array();
  for (const auto& r : runs) {
    Json x;
    x["history"] = r.history;
    x["algorithm"] = r.algorithm;
    x["seed"] = r.seed;
    x["metrics"] = metric_object(r.bundle);
    arr.push_back(std::move(x));
  }
  j["runs"] = arr;
  Json summary = Json::object();
  for (const auto& [name, v] : metrics::MetricBundle{}.fields()) {
    std::vector<std::optional<double>> col;
    for (const auto& r : runs)
      for (const auto& [n2, v2] : r.bundle.fields())
        if (n2 == name) col.push_back(v2);
    const auto s = metrics::summarize(col);
    Json x;
    x["mean"] = s.mean ? Json(*s.mean) : Json(nullptr);
    x["std"] = s.std ? Json(*s.std) : Json(nullptr);
    x["n"] = s.n;
    summary[name] = x;
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

Report build_report(const SuiteSpec& suite, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                    long budget) {
  std::vector<std::string> metric_names;
  for (const auto& [name, v] : metrics::MetricBundle{}.fields()) metric_names.push_back(name);

  Json j;
  j["schema"] = kReportSchema;
  j["suite"] = suite.name;
  j["note"] = kSuiteNote;
  j["seed_derivation"] = kSeedDerivation;
  j["budget"] = budget;
  j["seeds"] = seeds;
  Json task_names = Json::array(), algo_names = Json::array();
  for (const auto& t : suite.tasks) task_names.push_back(t.name);
  for (const auto& a : suite.algorithms) algo_names.push_back(a.label);
  j["tasks"] = task_names;
  j["algorithms"] = algo_names;
  j["metrics"] = metric_names;

  // algorithm -> task -> bundles of successful seeds
  std::map<std::string, std::map<std::string, std::vector<metrics::MetricBundle>>> ok;
  std::map<std::string, std::map<std::string, std::size_t>> failed;
  Json runs = Json::array();
  for (const auto& t : suite.tasks) {
    for (const auto& a : suite.algorithms) {
      for (auto seed : seeds) {
        const auto dir = cell_dir(out, t.name, a.label, seed);
        Json r;
        r["task"] = t.name;
        r["algorithm"] = a.label;
        r["seed"] = seed;
        std::error_code ec;
        if (std::filesystem::is_regular_file(dir / "metrics.json", ec)) {
          const auto b = parse_metrics_json(read_file(dir / "metrics.json"));
          r["status"] = "ok";
          r["metrics"] = metric_object(b);
          ok[a.label][t.name].push_back(b);
        } else {
          std::string why = "no artifacts";
          if (std::filesystem::is_regular_file(dir / "FAILED", ec)) {
            why = read_file(dir / "FAILED");
            while (!why.empty() && (why.back() == '\n' || why.back() == '\r')) why.pop_back();
          }
          r["status"] = "failed";
          r["error"] = why;
          ++failed[a.label][t.name];
        }
        runs.push_back(std::move(r));
      }
    }
  }
  j["runs"] = runs;

  auto summary_json = [&](const metrics::Summary& s) {
    Json x;
    x["mean"] = s.mean ? Json(*s.mean) : Json(nullptr);
    x["std"] = s.std ? Json(*s.std) : Json(nullptr);
    x["n"] = s.n;
    return x;
  };

  std::map<std::string, metrics::SuiteSummary> summaries;
  for (const auto& a : suite.algorithms) summaries[a.label] = metrics::summarize_runs(ok[a.label]);

  Json cells = Json::array();
  for (const auto& t : suite.tasks) {
    for (const auto& a : suite.algorithms) {
      const std::size_t n_ok = ok[a.label][t.name].size();
      const std::size_t n_failed = failed[a.label][t.name];
      Json c;
      c["task"] = t.name;
      c["algorithm"] = a.label;
      c["status"] = n_ok == 0 ? "failed" : (n_failed == 0 ? "ok" : "partial");
      c["seeds_ok"] = n_ok;
      c["seeds_failed"] = n_failed;
      Json m = Json::object();
      if (n_ok > 0)
        for (const auto& name : metric_names) m[name] = summary_json(summaries[a.label].per_task.at(t.name).at(name));
      c["metrics"] = m;
      cells.push_back(std::move(c));
    }
  }
  j["cells"] = cells;

  Json totals = Json::array();
  for (const auto& a : suite.algorithms) {
    bool complete = true;
    for (const auto& t : suite.tasks) complete = complete && ok[a.label][t.name].size() == seeds.size();
    Json x;
    x["algorithm"] = a.label;
    x["complete"] = complete;
    Json m = Json::object();
    for (const auto& name : metric_names) {
      const auto it = summaries[a.label].suite.find(name);
      if (it == summaries[a.label].suite.end()) {
        m[name] = summary_json(metrics::Summary{});
      } else {
        m[name] = summary_json(it->second);
      }
    }
    x["sum_over_tasks"] = m;
    totals.push_back(std::move(x));
  }
  j["totals"] = totals;

  Report rep;
  rep.json = j.dump(2) + "\n";

  // Metric rows x algorithm columns, one block per task plus the suite sum.
  std::string csv = "task,metric";
  for (const auto& a : suite.algorithms) csv += "," + csv_field(a.label + "_mean") + "," + csv_field(a.label + "_std");
  csv += "\n";
  for (const auto& t : suite.tasks) {
    for (const auto& name : metric_names) {
      csv += csv_field(t.name) + "," + name;
      for (const auto& a : suite.algorithms) {
        if (ok[a.label][t.name].empty()) {
          csv += ",failed,failed";
          continue;
        }
        const auto& s = summaries[a.label].per_task.at(t.name).at(name);
        csv += "," + csv_value(s.mean) + "," + csv_value(s.std);
      }
      csv += "\n";
    }
  }
  for (const auto& name : metric_names) {
    csv += "sum_over_tasks," + name;
    for (const auto& a : suite.algorithms) {
      const auto& sm = summaries[a.label].suite;
      const auto it = sm.find(name);
      bool complete = true;
      for (const auto& t : suite.tasks) complete = complete && !ok[a.label][t.name].empty();
      if (!complete || it == sm.end()) {
        csv += complete ? ",," : ",failed,failed";
        continue;
      }
      csv += "," + csv_value(it->second.mean) + "," + csv_value(it->second.std);
    }
    csv += "\n";
  }
  rep.csv = csv;
  return rep;
}

}  // namespace chemrl::cli
