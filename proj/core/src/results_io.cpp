#include "siv/results_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "siv/config.hpp"
#include "siv/errors.hpp"

namespace siv {

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError("cannot write output file: " + path.string());
  return out;
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  }
  return out;
}

}  // namespace

OutputFiles write_results(const ExperimentResult& result,
                          const std::filesystem::path& dir,
                          const std::string& resolved_config_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SimulationError("cannot create output directory " + dir.string() +
                                ": " + ec.message());

  OutputFiles files;

  files.csv = dir / (result.experiment + ".csv");
  {
    std::ofstream out = open_output(files.csv);
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
      if (c) out << ",";
      out << result.columns[c];
    }
    out << "\n";
    for (std::size_t row = 0; row < result.rows(); ++row) {
      for (std::size_t c = 0; c < result.data.size(); ++c) {
        if (c) out << ",";
        out << format_number(result.data[c][row]);
      }
      out << "\n";
    }
  }

  files.derived_json = dir / "derived.json";
  {
    nlohmann::json doc;
    doc["experiment"] = result.experiment;
    doc["columns"] = result.columns;
    doc["rows"] = result.rows();
    doc["config_hash"] = fnv1a_hex(resolved_config_json);
    nlohmann::json derived = nlohmann::json::object();
    for (const auto& [key, value] : result.derived) derived[key] = value;
    doc["derived"] = derived;
    std::ofstream out = open_output(files.derived_json);
    out << doc.dump(2) << "\n";
  }

  // Two-column plot data: the sweep axis against each observable column,
  // plus any auxiliary curves.
  for (std::size_t c = 1; c < result.data.size(); ++c) {
    const std::filesystem::path path =
        dir / ("plot_" + sanitize(result.columns[c]) + ".dat");
    std::ofstream out = open_output(path);
    for (std::size_t row = 0; row < result.rows(); ++row) {
      out << format_number(result.data[0][row]) << " "
          << format_number(result.data[c][row]) << "\n";
    }
    files.plot_files.push_back(path);
  }
  for (const Curve& curve : result.extras) {
    const std::filesystem::path path = dir / ("plot_" + sanitize(curve.name) + ".dat");
    std::ofstream out = open_output(path);
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
      out << format_number(curve.x[i]) << " " << format_number(curve.y[i]) << "\n";
    }
    files.plot_files.push_back(path);
  }

  files.config_echo = dir / "config_resolved.json";
  {
    std::ofstream out = open_output(files.config_echo);
    out << resolved_config_json;
  }
  return files;
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SimulationError("cannot read CSV file: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SimulationError("empty CSV file: " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
  }
  table.data.resize(table.columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= table.columns.size())
        throw SimulationError("too many cells in " + path.string() + " line " +
                              std::to_string(line_no));
      try {
        table.data[col].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw SimulationError("non-numeric cell '" + cell + "' in " + path.string() +
                              " line " + std::to_string(line_no));
      }
      ++col;
    }
    if (col != table.columns.size())
      throw SimulationError("missing cells in " + path.string() + " line " +
                            std::to_string(line_no));
  }
  return table;
}

}  // namespace siv
