#include "qfil/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qfil {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: bad number for " + key + ": " + v);
  return x;
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  const std::int64_t x = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  return x;
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    }
    kv[key] = value;
  }
  return kv;
}

KeyValues parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "env") {
    cfg.env = value;
  } else if (key == "n") {
    cfg.data_n = static_cast<std::size_t>(parse_int(value, key));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
  } else if (key == "regime") {
    if (value == "one-step") {
      cfg.regime = Regime::kOneStep;
    } else if (value == "iterative") {
      cfg.regime = Regime::kIterative;
    } else {
      throw std::invalid_argument("config: regime must be one-step or iterative");
    }
  } else if (key == "filter.variant") {
    if (value == "none") cfg.filter.variant = FilterVariant::kNone;
    else if (value == "qfil") cfg.filter.variant = FilterVariant::kQfil;
    else if (value == "expadv") cfg.filter.variant = FilterVariant::kExpAdv;
    else if (value == "pctbc") cfg.filter.variant = FilterVariant::kPctBc;
    else throw std::invalid_argument("config: unknown filter.variant: " + value);
  } else if (key == "filter.tau") {
    cfg.filter.tau = parse_double(value, key);
  } else if (key == "filter.samples") {
    cfg.filter.quantile_samples = static_cast<int>(parse_int(value, key));
  } else if (key == "filter.geq") {
    cfg.filter.geq = parse_bool(value, key);
  } else if (key == "filter.cache") {
    cfg.filter.cache_weights = parse_bool(value, key);
  } else if (key == "filter.exact") {
    cfg.filter.exact_actions = parse_bool(value, key);
  } else if (key == "filter.alpha") {
    cfg.filter.alpha = parse_double(value, key);
  } else if (key == "filter.clip") {
    cfg.filter.clip = parse_double(value, key);
  } else if (key == "filter.value_samples") {
    cfg.filter.value_samples = static_cast<int>(parse_int(value, key));
  } else if (key == "filter.keep_fraction") {
    cfg.filter.keep_fraction = parse_double(value, key);
  } else if (key == "behavior.steps") {
    cfg.behavior_hyper.steps = static_cast<int>(parse_int(value, key));
  } else if (key == "behavior.batch") {
    cfg.behavior_hyper.batch = static_cast<int>(parse_int(value, key));
  } else if (key == "behavior.lr") {
    cfg.behavior_hyper.lr = parse_double(value, key);
  } else if (key == "q.steps") {
    cfg.q_hyper.steps = static_cast<int>(parse_int(value, key));
  } else if (key == "q.batch") {
    cfg.q_hyper.batch = static_cast<int>(parse_int(value, key));
  } else if (key == "q.lr") {
    cfg.q_hyper.lr = parse_double(value, key);
  } else if (key == "policy.steps") {
    cfg.policy_hyper.steps = static_cast<int>(parse_int(value, key));
  } else if (key == "policy.batch") {
    cfg.policy_hyper.batch = static_cast<int>(parse_int(value, key));
  } else if (key == "policy.lr") {
    cfg.policy_hyper.lr = parse_double(value, key);
  } else if (key == "iterative.units") {
    cfg.iterative_units = static_cast<int>(parse_int(value, key));
  } else if (key == "iterative.snapshots") {
    cfg.eval_snapshots = static_cast<int>(parse_int(value, key));
  } else if (key == "iterative.warm_start") {
    cfg.warm_start_q = parse_bool(value, key);
  } else if (key == "gamma") {
    cfg.gamma = parse_double(value, key);
  } else if (key == "grid.max_steps") {
    cfg.grid_max_steps = static_cast<int>(parse_int(value, key));
  } else if (key == "eval.states") {
    cfg.eval_states = static_cast<int>(parse_int(value, key));
  } else if (key == "eval.mode") {
    if (value == "modal") cfg.eval_mode = EvalMode::kModal;
    else if (value == "sampled") cfg.eval_mode = EvalMode::kSampled;
    else throw std::invalid_argument("config: eval.mode must be modal or sampled");
  } else if (key == "diagnostics") {
    cfg.compute_diagnostics = parse_bool(value, key);
  } else {
    throw std::invalid_argument("config: unknown key: " + key);
  }
}

RunConfig make_run_config(const KeyValues& file_kv, const std::vector<std::string>& overrides) {
  RunConfig cfg;  // built-in defaults
  for (const auto& [k, v] : file_kv) apply_key(cfg, k, v);
  for (const std::string& ov : overrides) {  // CLI overrides win
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("override must be key=value: " + ov);
    }
    apply_key(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = static_cast<std::uint64_t>(std::stoull(text.substr(0, dots)));
    const auto hi = static_cast<std::uint64_t>(std::stoull(text.substr(dots + 2)));
    if (hi < lo) throw std::invalid_argument("seed range: hi < lo");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (!tok.empty()) seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
    }
  }
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw std::invalid_argument("seeds must be distinct");
    }
  }
  return seeds;
}

ExperimentSpec make_experiment(const std::string& name, const RunConfig& base) {
  ExperimentSpec spec;
  spec.name = name;
  if (name == "bandit-biasvar") {
    for (std::uint64_t s = 1; s <= 50; ++s) spec.seeds.push_back(s);
    for (std::size_t n : {100UL, 1000UL, 10000UL}) {
      RunConfig bc = base;
      bc.env = "bandit";
      bc.data_n = n;
      bc.regime = Regime::kOneStep;
      bc.filter.variant = FilterVariant::kNone;
      spec.grid.push_back(bc);
      for (double tau : {0.5, 0.75, 0.9, 0.95}) {
        RunConfig c = bc;
        c.filter.variant = FilterVariant::kQfil;
        c.filter.tau = tau;
        spec.grid.push_back(c);
      }
    }
  } else if (name == "grid-onestep" || name == "grid-iterative") {
    for (std::uint64_t s = 1; s <= 3; ++s) spec.seeds.push_back(s);
    RunConfig g = base;
    g.env = "grid8";
    g.data_n = 500;  // behavior episodes
    g.regime = name == "grid-onestep" ? Regime::kOneStep : Regime::kIterative;
    g.behavior_hyper = TrainHyper{5000, 64, 1e-3};
    g.q_hyper = TrainHyper{20000, 64, 1e-3};
    g.policy_hyper = TrainHyper{5000, 64, 1e-3};
    g.iterative_units = 10000;
    g.filter.exact_actions = true;
    for (double tau : {0.75, 0.9}) {
      RunConfig c = g;
      c.filter.variant = FilterVariant::kQfil;
      c.filter.tau = tau;
      spec.grid.push_back(c);
    }
  } else if (name == "custom") {
    spec.seeds.push_back(base.seed);
    spec.grid.push_back(base);
  } else {
    throw std::invalid_argument("unknown experiment: " + name);
  }
  return spec;
}

}  // namespace qfil
