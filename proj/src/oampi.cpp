#include "qfil/oampi.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "qfil/oracle.hpp"

namespace qfil {

namespace {

const char* variant_name(FilterVariant v) {
  switch (v) {
    case FilterVariant::kNone: return "none";
    case FilterVariant::kQfil: return "qfil";
    case FilterVariant::kExpAdv: return "expadv";
    case FilterVariant::kPctBc: return "pctbc";
  }
  return "?";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001B3ULL;
  return h;
}

}  // namespace

std::string RunConfig::canonical_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "env=" << env << ";n=" << data_n
     << ";regime=" << (regime == Regime::kOneStep ? "one-step" : "iterative")
     << ";variant=" << variant_name(filter.variant) << ";tau=" << filter.tau
     << ";M=" << filter.quantile_samples << ";geq=" << filter.geq
     << ";cache=" << filter.cache_weights << ";exact=" << filter.exact_actions
     << ";alpha=" << filter.alpha << ";clip=" << filter.clip
     << ";vm=" << filter.value_samples << ";keep=" << filter.keep_fraction
     << ";bh=" << behavior_hyper.steps << "," << behavior_hyper.batch << "," << behavior_hyper.lr
     << ";qh=" << q_hyper.steps << "," << q_hyper.batch << "," << q_hyper.lr
     << ";ph=" << policy_hyper.steps << "," << policy_hyper.batch << "," << policy_hyper.lr
     << ";units=" << iterative_units << ";warm=" << warm_start_q
     << ";gamma=" << gamma << ";maxsteps=" << grid_max_steps
     << ";evaln=" << eval_states
     << ";evalmode=" << (eval_mode == EvalMode::kModal ? "modal" : "sampled");
  return os.str();
}

std::string RunConfig::config_hash() const {
  std::ostringstream os;
  os << std::hex << fnv1a(canonical_string());
  return os.str();
}

namespace {

struct Pipeline {
  Dataset ds;
  Policy behavior;
  QNetwork q;
};

Dataset make_dataset(const RunConfig& cfg) {
  RngStream data_rng(cfg.seed, "data");
  if (cfg.env == "bandit") return BanditEnv::generate(cfg.data_n, data_rng);
  if (cfg.env == "grid8") {
    return grid_generate(GridMdp::make_default(), cfg.data_n, data_rng, cfg.grid_max_steps);
  }
  throw std::invalid_argument("unknown env: " + cfg.env);
}

Pipeline fit_base(const RunConfig& cfg) {
  Dataset ds = make_dataset(cfg);
  RngStream binit(cfg.seed, "behavior-init");
  RngStream bbatch(cfg.seed, "behavior-batch");
  Policy behavior = fit_behavior(ds, cfg.behavior_hyper, binit, bbatch);
  RngStream qinit(cfg.seed, "q-init");
  RngStream qbatch(cfg.seed, "q-batch");
  QNetwork q = fit_q_sarsa(ds, cfg.q_hyper, cfg.gamma, qinit, qbatch);
  return Pipeline{std::move(ds), std::move(behavior), std::move(q)};
}

// Initial filter weights plus the per-epoch refresh hook (qfil only).
struct FilterState {
  std::optional<WeightVector> weights;  // nullopt: unfiltered imitation
  WeightRefreshFn refresh;
};

FilterState make_filter(const RunConfig& cfg, const Pipeline& p, RngStream& filter_rng,
                        RunResult& out) {
  FilterState fs;
  switch (cfg.filter.variant) {
    case FilterVariant::kNone:
      return fs;
    case FilterVariant::kQfil: {
      fs.weights = qfil_weights(p.ds, p.q, p.behavior, cfg.filter, filter_rng);
      if (!cfg.filter.cache_weights) {
        fs.refresh = [&cfg, &p, &filter_rng, &out]() {
          WeightVector w = qfil_weights(p.ds, p.q, p.behavior, cfg.filter, filter_rng);
          double mean = 0.0;
          for (double x : w) mean += x;
          out.keep_rate_trace.push_back(mean / static_cast<double>(w.size()));
          return w;
        };
      }
      break;
    }
    case FilterVariant::kExpAdv:
      fs.weights = expadv_weights(p.ds, p.q.as_fn(), p.behavior.sampler(), cfg.filter.alpha,
                                  cfg.filter.clip, cfg.filter.value_samples, filter_rng);
      break;
    case FilterVariant::kPctBc:
      fs.weights = pctbc_weights(p.ds, cfg.filter.keep_fraction);
      break;
  }
  double mean = 0.0;
  for (double x : *fs.weights) mean += x > 0.0 ? 1.0 : 0.0;
  out.keep_rate = mean / static_cast<double>(fs.weights->size());
  out.keep_rate_trace.push_back(out.keep_rate);
  return fs;
}

TabularPolicy extract_tabular(const Policy& pol, const GridMdp& mdp) {
  TabularPolicy tp(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) {
    const double raw[1] = {static_cast<double>(s)};
    const std::vector<double> probs = pol.categorical_head(raw).probs();
    for (int a = 0; a < GridMdp::kNumActions; ++a) tp[s][a] = probs[a];
  }
  return tp;
}

void eval_policies(const RunConfig& cfg, const Pipeline& p, const Policy& learned,
                   RunResult& out) {
  if (cfg.env == "bandit") {
    RngStream eval_pi(cfg.seed, "eval-pi");
    RngStream eval_beta(cfg.seed, "eval-beta");
    const auto sample = [&learned](std::span<const double> s, RngStream& r) {
      return learned.sample_action(s, r);
    };
    const auto modal = [&learned](std::span<const double> s) {
      return learned.modal_action(s);
    };
    const EvalResult er = bandit_eval(sample, modal, cfg.eval_states, eval_pi, cfg.eval_mode);
    out.mean_return = er.mean;
    out.stderr_return = er.stderr_mean;
    const auto bsample = [&p](std::span<const double> s, RngStream& r) {
      return p.behavior.sample_action(s, r);
    };
    const auto bmodal = [&p](std::span<const double> s) {
      return p.behavior.modal_action(s);
    };
    out.behavior_return =
        bandit_eval(bsample, bmodal, cfg.eval_states, eval_beta, cfg.eval_mode).mean;
  } else {
    const GridMdp mdp = GridMdp::make_default();
    out.mean_return = grid_exact_eval(mdp, extract_tabular(learned, mdp)).j;
    out.stderr_return = 0.0;
    out.behavior_return = grid_exact_eval(mdp, extract_tabular(p.behavior, mdp)).j;
  }
}

void run_diagnostics(const RunConfig& cfg, const Pipeline& p, RunResult& out) {
  if (!cfg.compute_diagnostics || cfg.filter.variant != FilterVariant::kQfil) return;
  RngStream diag(cfg.seed, "diagnostics");
  const DiagnosticsReport rep =
      prop1_diagnostics(p.ds, p.q.as_fn(), p.behavior.sampler(), cfg.filter.tau,
                        cfg.filter.quantile_samples, diag);
  out.w1_term = rep.w1_term;
}

RunResult init_result(const RunConfig& cfg) {
  RunResult out;
  out.seed = cfg.seed;
  out.config_hash = cfg.config_hash();
  out.env = cfg.env;
  out.data_n = cfg.data_n;
  out.variant = variant_name(cfg.filter.variant);
  out.tau = cfg.filter.tau;
  out.regime = cfg.regime == Regime::kOneStep ? "one-step" : "iterative";
  out.keep_rate = 1.0;
  return out;
}

}  // namespace

RunResult run_one_step(const RunConfig& cfg) {
  RunResult out = init_result(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  Pipeline p = fit_base(cfg);
  RngStream filter_rng(cfg.seed, "filter");
  FilterState fs = make_filter(cfg, p, filter_rng, out);
  RngStream pbatch(cfg.seed, "policy-batch");
  Policy learned = weighted_imitation(
      p.ds, fs.weights ? &*fs.weights : nullptr, Policy(p.behavior.env(), p.behavior.params()),
      cfg.policy_hyper, pbatch, fs.refresh);
  eval_policies(cfg, p, learned, out);
  run_diagnostics(cfg, p, out);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RunResult run_iterative(const RunConfig& cfg) {
  RunResult out = init_result(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  Pipeline p = fit_base(cfg);
  RngStream filter_rng(cfg.seed, "filter");
  RngStream pbatch(cfg.seed, "policy-batch");
  RngStream qbatch2(cfg.seed, "q-iter-batch");
  RngStream next_action_rng(cfg.seed, "q-iter-action");

  PolicyTrainState pi(Policy(p.behavior.env(), p.behavior.params()), cfg.policy_hyper.lr);
  QTrainState qpi(cfg.warm_start_q
                      ? QNetwork(p.q.env(), p.q.params())
                      : [&] {
                          RngStream qinit2(cfg.seed, "q-iter-init");
                          return QNetwork::init(p.ds.env(), qinit2);
                        }(),
                  cfg.q_hyper.lr);

  const auto compute_weights = [&]() {
    return qfil_weights(p.ds, qpi.q, p.behavior, cfg.filter, filter_rng);
  };
  WeightVector weights;
  if (cfg.filter.variant == FilterVariant::kQfil) {
    weights = compute_weights();
    out.keep_rate = 0.0;
    for (double w : weights) out.keep_rate += w;
    out.keep_rate /= static_cast<double>(weights.size());
    out.keep_rate_trace.push_back(out.keep_rate);
  } else if (cfg.filter.variant != FilterVariant::kNone) {
    throw std::invalid_argument("run_iterative: only qfil or none filters are supported");
  }
  const bool filtered = cfg.filter.variant == FilterVariant::kQfil;
  const std::size_t epoch = steps_per_epoch(p.ds.size(), cfg.policy_hyper.batch);
  const int snap_every =
      cfg.eval_snapshots > 0 ? std::max(1, cfg.iterative_units / cfg.eval_snapshots) : 0;
  const GridMdp mdp = GridMdp::make_default();

  for (int unit = 0; unit < cfg.iterative_units; ++unit) {
    if (filtered && !cfg.filter.cache_weights && unit > 0 &&
        unit % static_cast<int>(epoch) == 0) {
      WeightVector next = compute_weights();
      double mean = 0.0;
      for (double w : next) mean += w;
      mean /= static_cast<double>(next.size());
      out.keep_rate_trace.push_back(mean);
      if (mean > 0.0) weights = std::move(next);
    }
    const auto pidx = p.ds.sample_indices(cfg.policy_hyper.batch, pbatch);
    policy_nll_step(pi, p.ds, pidx, filtered ? &weights : nullptr);
    for (int k = 0; k < 2; ++k) {
      const auto qidx = p.ds.sample_indices(cfg.q_hyper.batch, qbatch2);
      q_backup_offpolicy_step(qpi, p.ds, qidx, pi.policy, cfg.gamma, next_action_rng);
    }
    if (snap_every > 0 && (unit + 1) % snap_every == 0 && cfg.env == "grid8") {
      out.eval_trace.push_back(grid_exact_eval(mdp, extract_tabular(pi.policy, mdp)).j);
    }
  }
  // Final evaluation uses the SARSA pipeline objects for the behavior side.
  p.q = std::move(qpi.q);
  eval_policies(cfg, p, pi.policy, out);
  run_diagnostics(cfg, p, out);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RunResult run_config(const RunConfig& cfg) {
  try {
    return cfg.regime == Regime::kOneStep ? run_one_step(cfg) : run_iterative(cfg);
  } catch (const std::exception& e) {
    RunResult out = init_result(cfg);
    out.failed = true;
    out.error = e.what();
    return out;
  }
}

std::vector<RunResult> sweep(const std::vector<RunConfig>& grid,
                             const std::vector<std::uint64_t>& seeds, int workers) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty config grid");
  std::vector<RunConfig> jobs;
  jobs.reserve(grid.size() * seeds.size());
  for (const RunConfig& cfg : grid) {
    for (std::uint64_t seed : seeds) {
      RunConfig c = cfg;
      c.seed = seed;
      jobs.push_back(std::move(c));
    }
  }
  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  const int n_workers = std::max(1, workers);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        results[i] = run_config(jobs[i]);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

CellStats aggregate_cell(const std::vector<RunResult>& results, const std::string& config_hash) {
  CellStats cs;
  cs.config_hash = config_hash;
  double sum = 0.0, sumsq = 0.0;
  for (const RunResult& r : results) {
    if (r.config_hash != config_hash) continue;
    ++cs.n_runs;
    if (r.failed) {
      ++cs.n_failed;
      continue;
    }
    sum += r.mean_return;
    sumsq += r.mean_return * r.mean_return;
  }
  const std::size_t n_ok = cs.n_runs - cs.n_failed;
  if (n_ok > 0) {
    cs.mean = sum / static_cast<double>(n_ok);
    const double var = std::max(0.0, sumsq / static_cast<double>(n_ok) - cs.mean * cs.mean);
    cs.stddev = std::sqrt(var * static_cast<double>(n_ok) /
                          std::max<double>(1.0, static_cast<double>(n_ok - 1)));
    cs.stderr_mean = cs.stddev / std::sqrt(static_cast<double>(n_ok));
  }
  return cs;
}

}  // namespace qfil
