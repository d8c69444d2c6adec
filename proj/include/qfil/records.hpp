#ifndef QFIL_RECORDS_HPP_
#define QFIL_RECORDS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "qfil/oampi.hpp"

namespace qfil {

// Newline-delimited JSON records, append-only. Summaries are always
// regenerated from records, never edited in place.
void append_records(const std::filesystem::path& path, const std::vector<RunResult>& results);
std::vector<RunResult> read_records(const std::filesystem::path& path);

std::string result_to_json(const RunResult& r);
RunResult result_from_json(const std::string& line);

// Summary table: one row per (env, n, variant, tau, regime) cell with
// across-seed mean/std/stderr and failure counts.
void write_summary_csv(const std::filesystem::path& path, const std::vector<RunResult>& results);
std::string summary_table(const std::vector<RunResult>& results);

// Pivoted matrix for plotting: rows = dataset sizes, columns = taus,
// cells = across-seed mean or std of return. Missing cells are an error
// listing the absent (n, tau) pairs; std requires at least two seeds.
enum class PlotKind { kMean, kStd };
std::string plot_matrix_csv(const std::vector<RunResult>& results, PlotKind kind,
                            const std::vector<std::size_t>& ns, const std::vector<double>& taus);

}  // namespace qfil

#endif  // QFIL_RECORDS_HPP_
