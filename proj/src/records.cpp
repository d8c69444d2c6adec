#include "qfil/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace qfil {

using nlohmann::json;

std::string result_to_json(const RunResult& r) {
  json j;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["env"] = r.env;
  j["n"] = r.data_n;
  j["variant"] = r.variant;
  j["tau"] = r.tau;
  j["regime"] = r.regime;
  j["failed"] = r.failed;
  if (r.failed) j["error"] = r.error;
  j["mean_return"] = r.mean_return;
  j["stderr_return"] = r.stderr_return;
  j["behavior_return"] = r.behavior_return;
  j["keep_rate"] = r.keep_rate;
  j["keep_rate_trace"] = r.keep_rate_trace;
  j["eval_trace"] = r.eval_trace;
  if (r.w1_term) j["w1_term"] = *r.w1_term;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump();
}

RunResult result_from_json(const std::string& line) {
  const json j = json::parse(line);
  RunResult r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.env = j.at("env").get<std::string>();
  r.data_n = j.at("n").get<std::size_t>();
  r.variant = j.at("variant").get<std::string>();
  r.tau = j.at("tau").get<double>();
  r.regime = j.at("regime").get<std::string>();
  r.failed = j.at("failed").get<bool>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  r.mean_return = j.at("mean_return").get<double>();
  r.stderr_return = j.at("stderr_return").get<double>();
  r.behavior_return = j.at("behavior_return").get<double>();
  r.keep_rate = j.at("keep_rate").get<double>();
  r.keep_rate_trace = j.at("keep_rate_trace").get<std::vector<double>>();
  r.eval_trace = j.at("eval_trace").get<std::vector<double>>();
  if (j.contains("w1_term")) r.w1_term = j.at("w1_term").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

void append_records(const std::filesystem::path& path, const std::vector<RunResult>& results) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("records: cannot open " + path.string());
  for (const RunResult& r : results) os << result_to_json(r) << '\n';
}

std::vector<RunResult> read_records(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("records: cannot open " + path.string());
  std::vector<RunResult> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(result_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("records: bad record at line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

namespace {

struct CellKey {
  std::string env;
  std::size_t n;
  std::string variant;
  double tau;
  std::string regime;
  bool operator<(const CellKey& o) const {
    return std::tie(env, n, variant, tau, regime) <
           std::tie(o.env, o.n, o.variant, o.tau, o.regime);
  }
};

struct CellAgg {
  std::size_t runs = 0, failed = 0;
  double sum = 0.0, sumsq = 0.0;
  double mean() const { return runs > failed ? sum / static_cast<double>(runs - failed) : 0.0; }
  double stddev() const {
    const std::size_t k = runs - failed;
    if (k < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - static_cast<double>(k) * m * m) /
                                         static_cast<double>(k - 1));
    return std::sqrt(var);
  }
};

std::map<CellKey, CellAgg> aggregate(const std::vector<RunResult>& results) {
  std::map<CellKey, CellAgg> cells;
  for (const RunResult& r : results) {
    CellAgg& agg = cells[CellKey{r.env, r.data_n, r.variant, r.tau, r.regime}];
    ++agg.runs;
    if (r.failed) {
      ++agg.failed;
      continue;
    }
    agg.sum += r.mean_return;
    agg.sumsq += r.mean_return * r.mean_return;
  }
  return cells;
}

}  // namespace

std::string summary_table(const std::vector<RunResult>& results) {
  std::ostringstream os;
  os << "env,n,variant,tau,regime,seeds,failed,mean,std,stderr\n";
  os.precision(10);
  for (const auto& [key, agg] : aggregate(results)) {
    const std::size_t k = agg.runs - agg.failed;
    os << key.env << ',' << key.n << ',' << key.variant << ',' << key.tau << ','
       << key.regime << ',' << agg.runs << ',' << agg.failed << ',' << agg.mean() << ','
       << agg.stddev() << ','
       << (k > 0 ? agg.stddev() / std::sqrt(static_cast<double>(k)) : 0.0) << '\n';
  }
  return os.str();
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<RunResult>& results) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("summary: cannot open " + path.string());
  os << summary_table(results);
}

std::string plot_matrix_csv(const std::vector<RunResult>& results, PlotKind kind,
                            const std::vector<std::size_t>& ns, const std::vector<double>& taus) {
  const auto cells = aggregate(results);
  std::vector<std::string> missing;
  std::ostringstream os;
  os.precision(10);
  os << "n\\tau";
  for (double t : taus) os << ',' << t;
  os << '\n';
  for (std::size_t n : ns) {
    os << n;
    for (double t : taus) {
      const CellAgg* found = nullptr;
      for (const auto& [key, agg] : cells) {
        if (key.n == n && key.tau == t && key.variant == "qfil") {
          found = &agg;
          break;
        }
      }
      if (found == nullptr || found->runs == found->failed) {
        missing.push_back("(" + std::to_string(n) + ", " + std::to_string(t) + ")");
        os << ',';
        continue;
      }
      if (kind == PlotKind::kStd && found->runs - found->failed < 2) {
        throw std::runtime_error("plot matrix: std undefined with a single seed for n=" +
                                 std::to_string(n));
      }
      os << ',' << (kind == PlotKind::kMean ? found->mean() : found->stddev());
    }
    os << '\n';
  }
  if (!missing.empty()) {
    std::string what = "plot matrix: missing cells:";
    for (const std::string& m : missing) what += " " + m;
    throw std::runtime_error(what);
  }
  return os.str();
}

}  // namespace qfil
