#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rtgym {

// Reads <run_dir>/manifest.json and summary.csv and writes CSV tables into
// `out_dir` (default <run_dir>/report):
//   scores.csv, grid_<game>.csv, pvalues.csv, pvalue_grid_<game>.csv,
//   budget_sweep.csv, token_cdf.csv, plot_pressure.csv, plot_token_trace.csv
// Throws IncompleteRun naming every cell with missing episodes. Cells whose
// episodes failed are reported with their failure count and no mean.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir,
                                                std::filesystem::path out_dir = {});

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace rtgym
