// SPDX-License-Identifier: Apache-2.0
#include "chemrl/cli/commands.hpp"

#include <CLI11.hpp>

#include <ostream>

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/cli/config.hpp"
#include "chemrl/cli/report.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/lang/rollout.hpp"
#include "chemrl/metrics/history_io.hpp"
#include "chemrl/model/checkpoint.hpp"
#include "chemrl/rl/train_loop.hpp"

namespace chemrl::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kPartialMarker = "PARTIAL";
constexpr const char* kPartialText = "run in progress or interrupted; artifacts here are incomplete\n";

class Log {
 public:
  Log(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  template <class... T>
  void operator()(const T&... parts) {
    if (quiet_) return;
    (err_ << ... << parts) << '\n';
  }

 private:
  std::ostream& err_;
  bool quiet_;
};

struct Flags {
  std::string config, out, algo, corpus, prior, suite, checkpoint, prefix, scaffold;
  std::vector<long> seeds;
  long budget = 0, count = 0, max_len = 0;
  bool quiet = false, dump = false, report_validity = false;
  std::vector<std::string> sets, prompts, histories;
};

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

fs::path require_out(const Config& c) {
  if (c.str("out").empty()) throw ConfigError("out", "an output directory is required");
  return c.str("out");
}

void require_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw ConfigError(key, "is required");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError(key, "no such file '" + path + "'");
}

model::Checkpoint load_model(const std::string& key, const std::string& path) {
  require_file(key, path);
  try {
    return model::load_checkpoint(path);
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

std::uint64_t single_seed(const Config& c) {
  const auto s = c.seeds();
  if (s.size() != 1) throw ConfigError("seeds", "'" + to_string(c.command()) + "' takes exactly one seed");
  return s.front();
}

void check_prefix(const lang::PromptSpec& p, const lang::Vocabulary& vocab, int max_len) {
  if (p.mode != lang::PromptMode::Prefix) return;
  std::vector<int> ids;
  try {
    ids = lang::encode_prompt(vocab, p.prefix);
  } catch (const Error& e) {
    throw ConfigError("prompt.prefix", e.what());
  }
  if (static_cast<long>(ids.size()) >= max_len)
    throw ConfigError("prompt.prefix", "prefix leaves no room below the maximum length");
}

// Removes the marker only when the run completes.
class PartialMarker {
 public:
  explicit PartialMarker(fs::path dir) : path_(std::move(dir) / kPartialMarker) { write_file_atomic(path_, kPartialText); }
  void done() { fs::remove(path_); }

 private:
  fs::path path_;
};

struct CellInputs {
  const model::Checkpoint* prior = nullptr;
  rl::AlgoConfig algo;
  std::string algo_label;
  scoring::ScoringTask task;
  scoring::DiversitySettings diversity;
  metrics::MetricOptions metric_opts;
  std::optional<metrics::FilterSpec> filters;
  lang::PromptSpec prompt;
};

metrics::MetricBundle run_cell(const CellInputs& in, std::uint64_t seed, const fs::path& dir, Log& log) {
  fs::create_directories(dir);
  fs::remove(dir / "metrics.json");
  fs::remove(dir / "FAILED");
  PartialMarker marker(dir);
  auto scorer = scoring::make_scoring_function(in.task);
  rl::RunSpec spec;
  spec.prior = in.prior;
  spec.scorer = scorer.get();
  spec.diversity = in.diversity;
  spec.algo = in.algo;
  spec.seed = seed;
  spec.prompt = in.prompt;
  long next_report = in.algo.budget / 10;
  spec.on_batch = [&](long calls) {
    if (calls >= next_report || calls == in.algo.budget) {
      log("  ", in.task.name, "/", in.algo_label, "/seed ", seed, ": ", calls, "/", in.algo.budget, " oracle calls");
      next_report = calls + std::max(1L, in.algo.budget / 10);
    }
  };
  const auto res = rl::train_loop(spec);
  write_file_atomic(dir / "history.csv", metrics::format_history_csv(res.history, in.algo_label, seed));
  model::save_checkpoint(res.agent, dir / "agent.ckpt");
  auto opts = in.metric_opts;
  opts.seed = seed;
  const auto bundle = metrics::compute_metrics(res.history, opts, in.filters);
  write_file_atomic(dir / "metrics.json", metrics_json(bundle, in.task.name, in.algo_label, seed));
  marker.done();
  return bundle;
}

int cmd_pretrain(const Config& cfg, const Flags& f, std::ostream& out, Log& log) {
  auto p = pretrain_config(cfg);
  p.seed = single_seed(cfg);
  const auto dir = require_out(cfg);
  if (f.dump) {
    out << cfg.dump();
    return kExitOk;
  }
  fs::create_directories(dir);
  PartialMarker marker(dir);
  write_file_atomic(dir / "config.resolved", cfg.dump());
  log("pretraining on ", p.corpus.string());
  const auto res = pretrain::pretrain_run(p);
  for (const auto& e : res.log)
    log("  epoch ", e.epoch, ": train_nll ", e.train_nll, " valid_nll ", e.valid_nll, " validity ",
        e.sampled_validity);
  log("best epoch ", res.best_epoch, "; wrote ", (dir / "prior.ckpt").string());
  marker.done();
  return kExitOk;
}

int cmd_optimize(const Config& cfg, const Flags& f, std::ostream& out, Log& log) {
  const auto dir = require_out(cfg);
  const auto prior = load_model("prior", cfg.str("prior"));
  CellInputs in;
  in.prior = &prior;
  in.algo_label = cfg.str("algo");
  in.algo = algo_config(cfg, in.algo_label);
  in.task = scoring_task(cfg.values(), "task.");
  in.diversity = diversity_settings(cfg);
  in.metric_opts = metric_options(cfg);
  in.filters = filter_spec(cfg);
  in.prompt = prompt_spec(cfg);
  check_prefix(in.prompt, prior.vocab, in.algo.max_len);
  const auto seeds = cfg.seeds();
  if (f.dump) {
    out << cfg.dump();
    return kExitOk;
  }
  fs::create_directories(dir);
  write_file_atomic(dir / "config.resolved", cfg.dump());
  for (auto seed : seeds) {
    const auto cell = dir / ("seed_" + std::to_string(seed));
    const auto b = run_cell(in, seed, cell, log);
    log("seed ", seed, ": top-", in.metric_opts.k, " auc ", b.topk_auc.value_or(0.0), ", validity ", b.validity,
        " -> ", cell.string());
  }
  return kExitOk;
}

int cmd_benchmark(const Config& cfg, const Flags& f, std::ostream& out, Log& log) {
  const auto dir = require_out(cfg);
  if (cfg.str("suite").empty()) throw ConfigError("suite", "a suite file is required");
  auto suite = load_suite(cfg.str("suite"));
  if (const auto only = cfg.list("benchmark.algorithms"); !only.empty()) {
    std::vector<SuiteAlgorithm> kept;
    for (const auto& label : only) {
      const auto it = std::find_if(suite.algorithms.begin(), suite.algorithms.end(),
                                   [&](const SuiteAlgorithm& a) { return a.label == label; });
      if (it == suite.algorithms.end()) throw ConfigError("benchmark.algorithms", "'" + label + "' is not in the suite");
      kept.push_back(*it);
    }
    suite.algorithms = std::move(kept);
  }
  const auto prior = load_model("prior", cfg.str("prior"));
  std::vector<rl::AlgoConfig> algos;
  for (const auto& a : suite.algorithms) algos.push_back(algo_config(cfg, a.preset, a.overrides));
  const auto diversity = diversity_settings(cfg);
  const auto mopts = metric_options(cfg);
  const auto filters = filter_spec(cfg);
  const auto seeds = cfg.seeds();
  const long budget = cfg.integer("budget");
  if (f.dump) {
    out << cfg.dump();
    return kExitOk;
  }

  fs::create_directories(dir);
  PartialMarker marker(dir);
  write_file_atomic(dir / "config.resolved", cfg.dump());
  std::size_t failures = 0;
  for (const auto& task : suite.tasks) {
    for (std::size_t i = 0; i < suite.algorithms.size(); ++i) {
      CellInputs in;
      in.prior = &prior;
      in.algo = algos[i];
      in.algo_label = suite.algorithms[i].label;
      in.task = task;
      in.diversity = diversity;
      in.metric_opts = mopts;
      in.filters = filters;
      for (auto seed : seeds) {
        const auto cell = cell_dir(dir, task.name, in.algo_label, seed);
        try {
          run_cell(in, seed, cell, log);
        } catch (const std::exception& e) {
          ++failures;
          fs::create_directories(cell);
          write_file_atomic(cell / "FAILED", std::string(e.what()) + "\n");
          fs::remove(cell / kPartialMarker);
          log("cell ", task.name, "/", in.algo_label, "/seed ", seed, " failed: ", e.what());
        }
      }
    }
  }
  const auto rep = build_report(suite, seeds, dir, budget);
  write_file_atomic(dir / "report.json", rep.json);
  write_file_atomic(dir / "report.csv", rep.csv);
  marker.done();
  log("report: ", (dir / "report.json").string(), " (", failures, " failed run(s))");
  return kExitOk;
}

int cmd_evaluate(const Config& cfg, const Flags& f, std::ostream& out, Log& log) {
  if (f.histories.empty()) throw ConfigError("histories", "at least one history file is required");
  for (const auto& h : f.histories) require_file("histories", h);
  const auto mopts = metric_options(cfg);
  const auto filters = filter_spec(cfg);
  const auto& dir = cfg.str("out");
  if (f.dump) {
    out << cfg.dump();
    return kExitOk;
  }
  std::vector<EvaluatedRun> runs;
  for (const auto& h : f.histories) {
    auto table = metrics::parse_history_table(read_file(h));
    auto opts = mopts;
    opts.seed = table.seed;
    runs.push_back({h, table.algorithm, table.seed, metrics::compute_metrics(table.history, opts, filters)});
    log("evaluated ", h, " (", table.history.size(), " records)");
  }
  const auto text = evaluation_json(runs);
  if (!dir.empty()) {
    fs::create_directories(dir);
    write_file_atomic(fs::path(dir) / "evaluation.json", text);
  }
  out << text;
  return kExitOk;
}

int cmd_generate(const Config& cfg, const Flags& f, std::ostream& out, Log& log, std::ostream& err) {
  const auto ckpt = load_model("checkpoint", cfg.str("checkpoint"));
  const long count = cfg.integer("generate.count");
  const long max_len = cfg.integer("generate.max_len");
  if (count < 1) throw ConfigError("generate.count", "must be >= 1");
  if (max_len < 1) throw ConfigError("generate.max_len", "must be >= 1");
  const auto prompt = prompt_spec(cfg);
  check_prefix(prompt, ckpt.vocab, static_cast<int>(max_len));
  const auto seed = single_seed(cfg);
  const bool report = cfg.boolean("generate.report_validity");
  if (f.dump) {
    out << cfg.dump();
    return kExitOk;
  }
  Rng rng = make_stream(seed, "generate");
  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(count));
  try {
    if (prompt.mode == lang::PromptMode::Scaffold) {
      for (const auto& d : lang::decorate_scaffold(ckpt.params, ckpt.vocab, prompt, static_cast<std::size_t>(count),
                                                   static_cast<int>(max_len), rng))
        lines.push_back(d.smiles);
    } else {
      constexpr long kChunkSize = 256;
      for (long done = 0; done < count; done += kChunkSize) {
        const auto n = static_cast<std::size_t>(std::min(kChunkSize, count - done));
        for (const auto& t : lang::rollout(ckpt.params, ckpt.vocab, n, static_cast<int>(max_len), rng, prompt))
          lines.push_back(t.smiles);
      }
    }
  } catch (const Error& e) {
    if (e.code() == "InvalidPrompt" || e.code() == "PromptTokenUnknown")
      throw ConfigError(prompt.mode == lang::PromptMode::Scaffold ? "prompt.attachments" : "prompt.prefix", e.what());
    throw;
  }
  std::size_t valid = 0;
  for (const auto& s : lines) {
    out << s << '\n';
    if (report && chem::is_valid(s)) ++valid;
  }
  out.flush();
  log("generated ", lines.size(), " molecule(s)");
  if (report) err << "valid_fraction " << static_cast<double>(valid) / static_cast<double>(lines.size()) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"chemrl: chemical language models fine-tuned with reinforcement learning"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Flags f;

  auto shared = [&](CLI::App* s, bool budget, bool algo) {
    s->add_option("--config", f.config, "key = value configuration file");
    s->add_option("--seed", f.seeds, "Run seed (repeatable)");
    s->add_option("--out", f.out, "Output directory");
    s->add_flag("--quiet", f.quiet, "No progress output");
    s->add_flag("--dump-config", f.dump, "Print the resolved configuration and exit");
    s->add_option("--set", f.sets, "Override one configuration key (key=value, repeatable)");
    if (budget) s->add_option("--budget", f.budget, "Oracle-call budget");
    if (algo) s->add_option("--algo", f.algo, "Algorithm preset");
  };

  auto* pre = app.add_subcommand("pretrain", "Train a prior on a SMILES corpus");
  shared(pre, false, false);
  pre->add_option("--corpus", f.corpus, "Corpus file, one SMILES per line");

  auto* opt = app.add_subcommand("optimize", "Fine-tune a prior against a scoring task");
  shared(opt, true, true);
  opt->add_option("--prior", f.prior, "Prior checkpoint");

  auto* bench = app.add_subcommand("benchmark", "Run a suite of tasks x algorithms x seeds");
  shared(bench, true, true);
  bench->add_option("--suite", f.suite, "Suite file");
  bench->add_option("--prior", f.prior, "Prior checkpoint");

  auto* eval = app.add_subcommand("evaluate", "Recompute metrics from history files");
  shared(eval, true, false);
  eval->add_option("histories", f.histories, "History CSV files");

  auto* gen = app.add_subcommand("generate", "Sample molecules from a checkpoint");
  shared(gen, false, false);
  gen->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
  gen->add_option("--count", f.count, "Number of molecules");
  gen->add_option("--max-len", f.max_len, "Maximum tokens per molecule");
  gen->add_option("--prefix", f.prefix, "Prefix prompt");
  gen->add_option("--scaffold", f.scaffold, "Scaffold with '*' attachment points");
  gen->add_option("--prompt", f.prompts, "Attachment prompt, one per '*' (repeatable)");
  gen->add_flag("--report-validity", f.report_validity, "Print the valid fraction to standard error");

  std::vector<std::string> argv_store{"chemrl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Command cmd = Command::Pretrain;
  CLI::App* sub = app.get_subcommands().front();
  if (sub == opt) cmd = Command::Optimize;
  else if (sub == bench) cmd = Command::Benchmark;
  else if (sub == eval) cmd = Command::Evaluate;
  else if (sub == gen) cmd = Command::Generate;

  try {
    Config cfg(cmd);
    if (!f.config.empty()) cfg.load_file(f.config);
    for (const auto& s : f.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set", "expected key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    auto given = [&](const char* name) { return sub->count(name) > 0; };
    if (given("--seed")) {
      std::vector<std::string> s;
      for (long v : f.seeds) s.push_back(std::to_string(v));
      cfg.set("seeds", join(s));
    }
    if (given("--out")) cfg.set("out", f.out);
    if (f.quiet) cfg.set("quiet", "true");
    if (cmd != Command::Pretrain && cmd != Command::Generate && given("--budget"))
      cfg.set(cmd == Command::Evaluate ? "metrics.budget" : "budget", std::to_string(f.budget));
    if ((cmd == Command::Optimize || cmd == Command::Benchmark) && given("--algo"))
      cfg.set(cmd == Command::Optimize ? "algo" : "benchmark.algorithms", f.algo);
    if (cmd == Command::Pretrain && given("--corpus")) cfg.set("corpus", f.corpus);
    if ((cmd == Command::Optimize || cmd == Command::Benchmark) && given("--prior")) cfg.set("prior", f.prior);
    if (cmd == Command::Benchmark && given("--suite")) cfg.set("suite", f.suite);
    if (cmd == Command::Generate) {
      if (given("--checkpoint")) cfg.set("checkpoint", f.checkpoint);
      if (given("--count")) cfg.set("generate.count", std::to_string(f.count));
      if (given("--max-len")) cfg.set("generate.max_len", std::to_string(f.max_len));
      if (given("--prefix")) cfg.set("prompt.prefix", f.prefix);
      if (given("--scaffold")) cfg.set("prompt.scaffold", f.scaffold);
      if (given("--prompt")) cfg.set("prompt.attachments", join(f.prompts));
      if (f.report_validity) cfg.set("generate.report_validity", "true");
    }

    Log log(err, cfg.boolean("quiet"));
    switch (cmd) {
      case Command::Pretrain: return cmd_pretrain(cfg, f, out, log);
      case Command::Optimize: return cmd_optimize(cfg, f, out, log);
      case Command::Benchmark: return cmd_benchmark(cfg, f, out, log);
      case Command::Evaluate: return cmd_evaluate(cfg, f, out, log);
      case Command::Generate: return cmd_generate(cfg, f, out, log, err);
    }
  } catch (const ConfigError& e) {
    err << "chemrl: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "chemrl: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace chemrl::cli
