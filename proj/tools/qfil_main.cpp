// Command-line driver: dataset generation, experiment sweeps, plot-data
// export, and filter diagnostics. See README.md for the config format.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "qfil/config.hpp"
#include "qfil/envs.hpp"
#include "qfil/oracle.hpp"
#include "qfil/records.hpp"

namespace fs = std::filesystem;

namespace {

fs::path out_root() {
  if (const char* env = std::getenv("QFIL_OUT_ROOT")) return fs::path(env);
  return fs::path(".");
}

qfil::Dataset generate_dataset(const std::string& env, std::size_t n, std::uint64_t seed) {
  qfil::RngStream rng(seed, "data");
  if (env == "bandit") return qfil::BanditEnv::generate(n, rng);
  if (env == "grid8") {
    return qfil::grid_generate(qfil::GridMdp::make_default(), n, rng);
  }
  throw CLI::ValidationError("--env", "unknown env: " + env);
}

int cmd_generate(const std::string& env, std::size_t n, std::uint64_t seed,
                 const std::string& out, const std::string& csv) {
  const qfil::Dataset ds = generate_dataset(env, n, seed);
  ds.save(out_root() / out);
  if (!csv.empty()) ds.export_csv(out_root() / csv);
  std::cout << "wrote " << ds.size() << " transitions (" << ds.num_episodes()
            << " episodes) to " << (out_root() / out).string() << "\n";
  return 0;
}

int cmd_run(const std::string& experiment, const std::string& config_path,
            const std::string& seeds_text, const std::string& out_dir,
            const std::vector<std::string>& overrides, int workers) {
  qfil::KeyValues kv;
  if (!config_path.empty()) kv = qfil::parse_config_file(config_path);
  const qfil::RunConfig base = qfil::make_run_config(kv, overrides);
  qfil::ExperimentSpec spec = qfil::make_experiment(experiment, base);
  if (!seeds_text.empty()) spec.seeds = qfil::parse_seed_list(seeds_text);

  const fs::path dir = out_root() / out_dir;
  fs::create_directories(dir);
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());

  const std::vector<qfil::RunResult> results = qfil::sweep(spec.grid, spec.seeds, workers);
  qfil::append_records(dir / "results.jsonl", results);
  qfil::write_summary_csv(dir / "summary.csv", results);

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.failed ? 1 : 0;
  std::cout << qfil::summary_table(results);
  std::cout << "runs: " << results.size() << "  failed: " << failed << "\n"
            << "records: " << (dir / "results.jsonl").string() << "\n";
  return failed == results.size() ? 2 : 0;
}

int cmd_plotdata(const std::string& records, const std::string& kind, const std::string& out) {
  const std::vector<qfil::RunResult> rs = qfil::read_records(records);
  std::vector<std::size_t> ns;
  std::vector<double> taus;
  for (const auto& r : rs) {
    if (r.variant != "qfil") continue;
    if (std::find(ns.begin(), ns.end(), r.data_n) == ns.end()) ns.push_back(r.data_n);
    if (std::find(taus.begin(), taus.end(), r.tau) == taus.end()) taus.push_back(r.tau);
  }
  std::sort(ns.begin(), ns.end());
  std::sort(taus.begin(), taus.end());
  const qfil::PlotKind pk = kind == "mean" ? qfil::PlotKind::kMean : qfil::PlotKind::kStd;
  const std::string csv = qfil::plot_matrix_csv(rs, pk, ns, taus);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(out_root() / out);
    os << csv;
    std::cout << "wrote " << (out_root() / out).string() << "\n";
  }
  return 0;
}

int cmd_diagnose(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& out) {
  qfil::KeyValues kv;
  if (!config_path.empty()) kv = qfil::parse_config_file(config_path);
  qfil::RunConfig cfg = qfil::make_run_config(kv, overrides);
  cfg.compute_diagnostics = true;
  if (cfg.filter.variant != qfil::FilterVariant::kQfil) {
    cfg.filter.variant = qfil::FilterVariant::kQfil;
  }
  const qfil::RunResult r = qfil::run_config(cfg);
  if (r.failed) {
    std::cerr << "run failed: " << r.error << "\n";
    return 2;
  }
  nlohmann::json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["tau"] = r.tau;
  j["one_minus_tau"] = 1.0 - r.tau;
  j["keep_rate"] = r.keep_rate;
  j["w1_term"] = r.w1_term ? *r.w1_term : 0.0;
  j["mean_return"] = r.mean_return;
  j["behavior_return"] = r.behavior_return;
  const std::string text = j.dump(2);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream os(out_root() / out);
    os << text << "\n";
    std::cout << "wrote " << (out_root() / out).string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantile-filtered imitation learning experiments"};
  app.require_subcommand(1);

  // generate
  std::string g_env = "bandit", g_out = "dataset.qfds", g_csv;
  std::size_t g_n = 10000;
  std::uint64_t g_seed = 1;
  CLI::App* gen = app.add_subcommand("generate", "generate a behavior dataset");
  gen->add_option("--env", g_env, "bandit or grid8");
  gen->add_option("--n", g_n, "transitions (bandit) or episodes (grid8)");
  gen->add_option("--seed", g_seed, "generation seed");
  gen->add_option("--out", g_out, "output dataset path");
  gen->add_option("--csv", g_csv, "optional CSV export path");

  // run
  std::string r_experiment = "custom", r_config, r_seeds, r_out = "out";
  std::vector<std::string> r_overrides;
  int r_workers = 0;
  CLI::App* run = app.add_subcommand("run", "run an experiment sweep");
  run->add_option("--experiment", r_experiment,
                  "bandit-biasvar | grid-onestep | grid-iterative | custom");
  run->add_option("--config", r_config, "key=value config file");
  run->add_option("--seeds", r_seeds, "seed list: 1..50 or 1,2,7");
  run->add_option("--out", r_out, "output directory (under QFIL_OUT_ROOT)");
  run->add_option("--override", r_overrides, "key=value overrides (repeatable)");
  run->add_option("--workers", r_workers, "worker threads (default: hardware)");

  // plotdata
  std::string p_records, p_kind = "mean", p_out;
  CLI::App* plot = app.add_subcommand("plotdata", "pivot records into an N x tau matrix");
  plot->add_option("--records", p_records, "results.jsonl path")->required();
  plot->add_option("--kind", p_kind, "mean or std")->check(CLI::IsMember({"mean", "std"}));
  plot->add_option("--out", p_out, "output CSV (stdout when omitted)");

  // diagnose
  std::string d_config, d_out;
  std::vector<std::string> d_overrides;
  CLI::App* diag = app.add_subcommand("diagnose", "train one run and report filter diagnostics");
  diag->add_option("--config", d_config, "key=value config file");
  diag->add_option("--override", d_overrides, "key=value overrides (repeatable)");
  diag->add_option("--out", d_out, "output JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(g_env, g_n, g_seed, g_out, g_csv);
    if (run->parsed()) return cmd_run(r_experiment, r_config, r_seeds, r_out, r_overrides, r_workers);
    if (plot->parsed()) return cmd_plotdata(p_records, p_kind, p_out);
    if (diag->parsed()) return cmd_diagnose(d_config, d_overrides, d_out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
