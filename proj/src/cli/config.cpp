// SPDX-License-Identifier: Apache-2.0
#include "chemrl/cli/config.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/pretrain/corpus.hpp"

namespace chemrl::cli {
namespace {

constexpr unsigned kPre = 1, kOpt = 2, kBench = 4, kEval = 8, kGen = 16;
constexpr unsigned kRun = kOpt | kBench;
constexpr unsigned kAll = kPre | kOpt | kBench | kEval | kGen;

struct KeyDef {
  const char* name;
  const char* def;
  unsigned mask;
};

// Empty algo.* defaults mean "take the value from the preset".
const KeyDef kKeys[] = {
    {"out", "", kAll},
    {"seeds", "0", kAll},
    {"quiet", "false", kAll},

    {"corpus", "", kPre},
    {"pretrain.epochs", "10", kPre},
    {"pretrain.batch_size", "64", kPre},
    {"pretrain.lr", "0.001", kPre},
    {"pretrain.max_len", "100", kPre},
    {"pretrain.clip", "5", kPre},
    {"pretrain.valid_fraction", "0.1", kPre},
    {"pretrain.validity_samples", "100", kPre},
    {"model.embedding", "64", kPre},
    {"model.hidden", "128", kPre},
    {"model.layers", "1", kPre},

    {"prior", "", kRun},
    {"suite", "", kBench},
    {"benchmark.algorithms", "", kBench},
    {"algo", "reinforce", kOpt},
    {"budget", "10000", kRun},
    {"algo.sigma", "", kRun},
    {"algo.rho", "", kRun},
    {"algo.kappa", "", kRun},
    {"algo.beta", "", kRun},
    {"algo.clip_eps", "", kRun},
    {"algo.ppo_epochs", "", kRun},
    {"algo.ppo_minibatches", "", kRun},
    {"algo.replay", "", kRun},
    {"algo.replay_capacity", "", kRun},
    {"algo.replay_sample", "", kRun},
    {"algo.entropy_coef", "", kRun},
    {"algo.value_coef", "", kRun},
    {"algo.baseline", "", kRun},
    {"algo.baseline_decay", "", kRun},
    {"algo.lr", "", kRun},
    {"algo.grad_clip", "", kRun},
    {"algo.batch_size", "", kRun},
    {"algo.max_len", "", kRun},

    {"task.name", "task", kOpt},
    {"task.oracle", "similarity", kOpt},
    {"task.target", "", kOpt},
    {"task.target_mw", "300", kOpt},
    {"task.mw_width", "50", kOpt},
    {"task.pattern", "", kOpt},
    {"task.components", "", kOpt},
    {"task.weights", "", kOpt},
    {"task.geometric", "false", kOpt},
    {"task.command", "", kOpt},
    {"task.timeout", "30", kOpt},

    {"diversity.enabled", "false", kRun},
    {"diversity.threshold", "0.35", kRun},
    {"diversity.bucket_size", "25", kRun},
    {"diversity.min_score", "0.5", kRun},

    {"metrics.k", "10", kRun | kEval},
    {"metrics.report_every", "100", kRun | kEval},
    {"metrics.diverse_threshold", "0.35", kRun | kEval},
    {"metrics.sediv_threshold", "0.65", kRun | kEval},
    {"metrics.sediv_sample", "1000", kRun | kEval},
    {"metrics.budget", "", kEval},
    {"filters.enabled", "true", kRun | kEval},
    {"filters.reference", "", kRun | kEval},

    {"prompt.prefix", "", kOpt | kGen},
    {"prompt.scaffold", "", kGen},
    {"prompt.attachments", "", kGen},

    {"checkpoint", "", kGen},
    {"generate.count", "10", kGen},
    {"generate.max_len", "100", kGen},
    {"generate.report_validity", "false", kGen},
};

unsigned mask_of(Command c) {
  switch (c) {
    case Command::Pretrain: return kPre;
    case Command::Optimize: return kOpt;
    case Command::Benchmark: return kBench;
    case Command::Evaluate: return kEval;
    case Command::Generate: return kGen;
  }
  return 0;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || p != end || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

long parse_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || p != end) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::string* lookup(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() || it->second.empty() ? nullptr : &it->second;
}

double kv_real(const std::map<std::string, std::string>& kv, const std::string& key, double def) {
  const auto* v = lookup(kv, key);
  return v ? parse_real(key, *v) : def;
}

void require_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw ConfigError(key, "is required");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError(key, "no such file '" + path + "'");
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Pretrain: return "pretrain";
    case Command::Optimize: return "optimize";
    case Command::Benchmark: return "benchmark";
    case Command::Evaluate: return "evaluate";
    case Command::Generate: return "generate";
  }
  return "?";
}

std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(n), "expected 'key = value'");
    const auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(n), "empty key");
    if (!out.emplace(key, trim(std::string_view(t).substr(eq + 1))).second)
      throw ConfigError(key, "set twice in " + origin);
  }
  return out;
}

Config::Config(Command command) : command_(command) {
  const unsigned m = mask_of(command);
  for (const auto& k : kKeys)
    if (k.mask & m) values_.emplace(k.name, k.def);
}

bool Config::known(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError(key, "unknown key for '" + to_string(command_) + "'");
  values_[key] = value;
  explicit_[key] = true;
}

void Config::load_file(const std::filesystem::path& path) {
  require_file("config", path.string());
  for (const auto& [k, v] : parse_kv(read_file(path), path.string())) set(k, v);
}

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown key for '" + to_string(command_) + "'");
  return it->second;
}

double Config::real(const std::string& key) const { return parse_real(key, str(key)); }
long Config::integer(const std::string& key) const { return parse_int(key, str(key)); }
bool Config::boolean(const std::string& key) const { return parse_bool(key, str(key)); }
std::vector<std::string> Config::list(const std::string& key) const { return split_list(str(key)); }

std::vector<std::uint64_t> Config::seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : list("seeds")) {
    const long v = parse_int("seeds", s);
    if (v < 0) throw ConfigError("seeds", "seeds must be non-negative");
    if (std::find(out.begin(), out.end(), static_cast<std::uint64_t>(v)) != out.end())
      throw ConfigError("seeds", "duplicate seed " + s);
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("seeds", "at least one seed is required");
  return out;
}

std::string Config::dump() const {
  std::map<std::string, std::string> shown = values_;
  if (command_ == Command::Optimize) {
    const auto a = algo_config(*this, str("algo"));
    shown["algo.sigma"] = format_double(a.sigma);
    shown["algo.rho"] = format_double(a.rho);
    shown["algo.kappa"] = format_double(a.kappa);
    shown["algo.beta"] = format_double(a.beta);
    shown["algo.clip_eps"] = format_double(a.clip_eps);
    shown["algo.ppo_epochs"] = std::to_string(a.ppo_epochs);
    shown["algo.ppo_minibatches"] = std::to_string(a.ppo_minibatches);
    shown["algo.replay"] = a.replay ? "true" : "false";
    shown["algo.replay_capacity"] = std::to_string(a.replay_capacity);
    shown["algo.replay_sample"] = std::to_string(a.replay_sample);
    shown["algo.entropy_coef"] = format_double(a.entropy_coef);
    shown["algo.value_coef"] = format_double(a.value_coef);
    shown["algo.baseline"] = a.baseline ? "true" : "false";
    shown["algo.baseline_decay"] = format_double(a.baseline_decay);
    shown["algo.lr"] = format_double(a.lr);
    shown["algo.grad_clip"] = format_double(a.grad_clip);
    shown["algo.batch_size"] = std::to_string(a.batch_size);
    shown["algo.max_len"] = std::to_string(a.max_len);
  }
  std::string out = "# chemrl " + to_string(command_) + " configuration\n";
  for (const auto& [k, v] : shown) out += k + " = " + v + "\n";
  return out;
}

rl::AlgoConfig algo_config(const Config& c, const std::string& preset_name,
                           const std::map<std::string, std::string>& overrides) {
  rl::AlgoConfig a = rl::preset(preset_name);
  auto get = [&](const std::string& key) -> const std::string* {
    if (const auto* v = lookup(overrides, key)) return v;
    return c.known(key) ? lookup(c.values(), key) : nullptr;
  };
  auto real = [&](const char* key, double& dst) {
    if (const auto* v = get(key)) dst = parse_real(key, *v);
  };
  auto integer = [&](const char* key, auto& dst) {
    if (const auto* v = get(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(parse_int(key, *v));
  };
  auto flag = [&](const char* key, bool& dst) {
    if (const auto* v = get(key)) dst = parse_bool(key, *v);
  };
  real("algo.sigma", a.sigma);
  real("algo.rho", a.rho);
  real("algo.kappa", a.kappa);
  real("algo.beta", a.beta);
  real("algo.clip_eps", a.clip_eps);
  integer("algo.ppo_epochs", a.ppo_epochs);
  integer("algo.ppo_minibatches", a.ppo_minibatches);
  flag("algo.replay", a.replay);
  integer("algo.replay_capacity", a.replay_capacity);
  integer("algo.replay_sample", a.replay_sample);
  real("algo.entropy_coef", a.entropy_coef);
  real("algo.value_coef", a.value_coef);
  flag("algo.baseline", a.baseline);
  real("algo.baseline_decay", a.baseline_decay);
  real("algo.lr", a.lr);
  real("algo.grad_clip", a.grad_clip);
  integer("algo.batch_size", a.batch_size);
  integer("algo.max_len", a.max_len);
  integer("budget", a.budget);
  a.validate();
  return a;
}

scoring::ScoringTask scoring_task(const std::map<std::string, std::string>& kv, const std::string& prefix) {
  scoring::ScoringTask t;
  const auto key = [&](const char* field) { return prefix + field; };
  t.name = lookup(kv, key("name")) ? *lookup(kv, key("name")) : "task";
  const auto* oracle = lookup(kv, key("oracle"));
  if (!oracle) throw ConfigError(key("oracle"), "is required");
  try {
    t.kind = scoring::oracle_kind_from_string(*oracle);
  } catch (const ConfigError&) {
    throw ConfigError(key("oracle"), "unknown oracle '" + *oracle + "'");
  }
  if (const auto* v = lookup(kv, key("target"))) t.target = *v;
  t.target_mw = kv_real(kv, key("target_mw"), t.target_mw);
  t.mw_width = kv_real(kv, key("mw_width"), t.mw_width);
  if (const auto* v = lookup(kv, key("pattern"))) t.pattern = *v;
  t.timeout_s = kv_real(kv, key("timeout"), t.timeout_s);
  if (const auto* v = lookup(kv, key("geometric"))) t.geometric = parse_bool(key("geometric"), *v);
  if (const auto* v = lookup(kv, key("command"))) {
    std::stringstream ss(*v);
    std::string w;
    while (ss >> w) t.command.push_back(w);
  }

  auto check_primitive = [&](scoring::OracleKind kind) {
    using scoring::OracleKind;
    switch (kind) {
      case OracleKind::SimilarityToTarget:
        if (t.target.empty()) throw ConfigError(key("target"), "similarity needs a target SMILES");
        if (!chem::is_valid(t.target)) throw ConfigError(key("target"), "target '" + t.target + "' does not parse");
        break;
      case OracleKind::MolWeightTarget:
        if (!(t.mw_width > 0)) throw ConfigError(key("mw_width"), "must be > 0");
        if (!(t.target_mw > 0)) throw ConfigError(key("target_mw"), "must be > 0");
        break;
      case OracleKind::TokenPattern:
        if (t.pattern.empty()) throw ConfigError(key("pattern"), "token_pattern needs a pattern");
        break;
      case OracleKind::ExternalProcess:
        if (t.command.empty()) throw ConfigError(key("command"), "external oracle needs a command");
        if (!find_executable(t.command.front()))
          throw ConfigError(key("command"), "executable '" + t.command.front() + "' not found");
        if (!(t.timeout_s > 0)) throw ConfigError(key("timeout"), "must be > 0");
        break;
      case OracleKind::ValidityOnly:
        break;
      case OracleKind::Composite:
        throw ConfigError(key("components"), "composites cannot nest");
    }
  };

  if (t.kind == scoring::OracleKind::Composite) {
    const auto* comps = lookup(kv, key("components"));
    if (!comps) throw ConfigError(key("components"), "composite needs components");
    for (const auto& name : split_list(*comps)) {
      scoring::ScoringTask sub = t;
      try {
        sub.kind = scoring::oracle_kind_from_string(name);
      } catch (const ConfigError&) {
        throw ConfigError(key("components"), "unknown oracle '" + name + "'");
      }
      check_primitive(sub.kind);
      sub.name = name;
      t.components.push_back(std::move(sub));
    }
    if (t.components.empty()) throw ConfigError(key("components"), "composite needs components");
    if (const auto* w = lookup(kv, key("weights"))) {
      for (const auto& x : split_list(*w)) {
        const double v = parse_real(key("weights"), x);
        if (v < 0) throw ConfigError(key("weights"), "weights must be >= 0");
        t.weights.push_back(v);
      }
      if (t.weights.size() != t.components.size())
        throw ConfigError(key("weights"), "need one weight per component");
      double sum = 0;
      for (double v : t.weights) sum += v;
      if (!(sum > 0)) throw ConfigError(key("weights"), "weights sum to zero");
    }
  } else {
    check_primitive(t.kind);
  }
  return t;
}

scoring::DiversitySettings diversity_settings(const Config& c) {
  scoring::DiversitySettings d;
  d.enabled = c.boolean("diversity.enabled");
  d.threshold = c.real("diversity.threshold");
  d.bucket_size = static_cast<int>(c.integer("diversity.bucket_size"));
  d.min_score = c.real("diversity.min_score");
  if (d.threshold < 0 || d.threshold > 1) throw ConfigError("diversity.threshold", "must be in [0, 1]");
  if (d.bucket_size < 1) throw ConfigError("diversity.bucket_size", "must be >= 1");
  if (d.min_score < 0 || d.min_score > 1) throw ConfigError("diversity.min_score", "must be in [0, 1]");
  return d;
}

metrics::MetricOptions metric_options(const Config& c) {
  metrics::MetricOptions m;
  m.k = static_cast<int>(c.integer("metrics.k"));
  m.report_every = static_cast<int>(c.integer("metrics.report_every"));
  m.diverse_threshold = c.real("metrics.diverse_threshold");
  m.sediv_threshold = c.real("metrics.sediv_threshold");
  const long sample = c.integer("metrics.sediv_sample");
  if (m.k < 1) throw ConfigError("metrics.k", "must be >= 1");
  if (m.report_every < 1) throw ConfigError("metrics.report_every", "must be >= 1");
  if (m.diverse_threshold < 0 || m.diverse_threshold > 1)
    throw ConfigError("metrics.diverse_threshold", "must be in [0, 1]");
  if (m.sediv_threshold < 0 || m.sediv_threshold > 1) throw ConfigError("metrics.sediv_threshold", "must be in [0, 1]");
  if (sample < 1) throw ConfigError("metrics.sediv_sample", "must be >= 1");
  m.sediv_sample = static_cast<std::size_t>(sample);
  if (c.known("metrics.budget") && !c.str("metrics.budget").empty()) {
    m.budget = c.integer("metrics.budget");
    if (*m.budget < 1) throw ConfigError("metrics.budget", "must be >= 1");
  } else if (c.known("budget")) {
    m.budget = c.integer("budget");
  }
  return m;
}

std::optional<metrics::FilterSpec> filter_spec(const Config& c) {
  if (!c.boolean("filters.enabled")) return std::nullopt;
  metrics::FilterSpec f;
  const auto& ref = c.str("filters.reference");
  if (!ref.empty()) {
    require_file("filters.reference", ref);
    const auto corpus = pretrain::load_corpus(ref, pretrain::CorpusOptions{.max_len = 1 << 20, .valid_fraction = 0.0});
    f.reference = scoring::reference_stats(corpus.smiles);
    if (f.reference->count == 0) throw ConfigError("filters.reference", "no parseable molecules in '" + ref + "'");
  }
  return f;
}

pretrain::PretrainConfig pretrain_config(const Config& c) {
  pretrain::PretrainConfig p;
  require_file("corpus", c.str("corpus"));
  p.corpus = c.str("corpus");
  p.out_dir = c.str("out");
  p.epochs = static_cast<int>(c.integer("pretrain.epochs"));
  p.batch_size = static_cast<int>(c.integer("pretrain.batch_size"));
  p.lr = c.real("pretrain.lr");
  p.max_len = static_cast<int>(c.integer("pretrain.max_len"));
  p.clip = c.real("pretrain.clip");
  p.valid_fraction = c.real("pretrain.valid_fraction");
  const long vs = c.integer("pretrain.validity_samples");
  p.embedding = static_cast<int>(c.integer("model.embedding"));
  p.hidden = static_cast<int>(c.integer("model.hidden"));
  p.layers = static_cast<int>(c.integer("model.layers"));
  if (p.epochs < 0) throw ConfigError("pretrain.epochs", "must be >= 0");
  if (p.batch_size < 1) throw ConfigError("pretrain.batch_size", "must be >= 1");
  if (!(p.lr > 0)) throw ConfigError("pretrain.lr", "must be > 0");
  if (p.max_len < 2) throw ConfigError("pretrain.max_len", "must be >= 2");
  if (!(p.clip > 0)) throw ConfigError("pretrain.clip", "must be > 0");
  if (p.valid_fraction < 0 || p.valid_fraction >= 1) throw ConfigError("pretrain.valid_fraction", "must be in [0, 1)");
  if (vs < 0) throw ConfigError("pretrain.validity_samples", "must be >= 0");
  p.validity_samples = static_cast<std::size_t>(vs);
  if (p.embedding < 1) throw ConfigError("model.embedding", "must be >= 1");
  if (p.hidden < 1) throw ConfigError("model.hidden", "must be >= 1");
  if (p.layers < 1) throw ConfigError("model.layers", "must be >= 1");
  return p;
}

lang::PromptSpec prompt_spec(const Config& c) {
  const auto& prefix = c.str("prompt.prefix");
  const bool scaffold = c.known("prompt.scaffold") && !c.str("prompt.scaffold").empty();
  if (!prefix.empty() && scaffold) throw ConfigError("prompt.scaffold", "cannot be combined with prompt.prefix");
  if (scaffold) {
    lang::PromptSpec s;
    s.mode = lang::PromptMode::Scaffold;
    s.scaffold = c.str("prompt.scaffold");
    s.attachment_prompts = c.list("prompt.attachments");
    const auto markers = static_cast<std::size_t>(std::count(s.scaffold.begin(), s.scaffold.end(), '*'));
    if (markers == 0) throw ConfigError("prompt.scaffold", "needs at least one '*' attachment point");
    if (markers != s.attachment_prompts.size())
      throw ConfigError("prompt.attachments", std::to_string(markers) + " attachment point(s) but " +
                                                  std::to_string(s.attachment_prompts.size()) + " prompt(s)");
    return s;
  }
  if (c.known("prompt.attachments") && !c.str("prompt.attachments").empty())
    throw ConfigError("prompt.attachments", "only valid together with prompt.scaffold");
  if (!prefix.empty()) return lang::PromptSpec::with_prefix(prefix);
  return lang::PromptSpec::de_novo();
}

std::optional<std::filesystem::path> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto ok = [](const std::filesystem::path& p) {
    std::error_code ec;
    return std::filesystem::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (name.find('/') != std::string::npos) {
    if (ok(name)) return std::filesystem::path(name);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::stringstream ss(path ? path : "");
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    const auto p = std::filesystem::path(dir.empty() ? "." : dir) / name;
    if (ok(p)) return p;
  }
  return std::nullopt;
}

}  // namespace chemrl::cli
