#ifndef SIV_RESULTS_IO_HPP
#define SIV_RESULTS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "siv/sequences.hpp"

namespace siv {

struct OutputFiles {
  std::filesystem::path csv;
  std::filesystem::path derived_json;
  std::filesystem::path config_echo;
  std::vector<std::filesystem::path> plot_files;
};

// Persists one experiment: a CSV with unit-carrying column names, a JSON
// sidecar with the derived scalars and the config hash, one two-column
// whitespace-separated plot file per curve, and the resolved config echo.
// Identical inputs produce byte-identical files.
OutputFiles write_results(const ExperimentResult& result,
                          const std::filesystem::path& dir,
                          const std::string& resolved_config_json);

// Columns of a CSV produced by write_results (header + numeric rows).
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[column][row]

  // Index of a named column, or -1.
  int column_index(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace siv

#endif
