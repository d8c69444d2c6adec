#ifndef QFIL_CONFIG_HPP_
#define QFIL_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qfil/oampi.hpp"

namespace qfil {

// Flat key=value configuration with dotted section keys, e.g.
//   filter.variant=qfil
//   filter.tau=0.9
// '#' starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::filesystem::path& path);

// Applies keys onto a config. Unknown keys are an error (catches typos).
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig make_run_config(const KeyValues& file_kv,
                          const std::vector<std::string>& overrides);

// Seed list syntax: "1..50" (inclusive range) or "1,2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct ExperimentSpec {
  std::string name;                 // bandit-biasvar | grid-onestep | grid-iterative | custom
  std::vector<RunConfig> grid;
  std::vector<std::uint64_t> seeds;
};

// Built-in experiment grids (desk-scale protocol defaults). `base` carries
// config-file and override adjustments applied to every cell.
ExperimentSpec make_experiment(const std::string& name, const RunConfig& base);

}  // namespace qfil

#endif  // QFIL_CONFIG_HPP_
