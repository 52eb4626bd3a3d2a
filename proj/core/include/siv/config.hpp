#ifndef SIV_CONFIG_HPP
#define SIV_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siv/model.hpp"
#include "siv/sequences.hpp"

namespace siv {

// Sweep axis: "start:stop:count" with a `pi` literal (e.g. "0:10pi:101"),
// a comma-separated explicit list, or a JSON array. Resolved values are
// stored in the unit natural to the experiment (rad, ps or uW).
struct SweepSpec {
  std::vector<double> values;
  bool explicit_list = false;
  double start = 0.0;
  double stop = 0.0;
  int count = 0;

  static SweepSpec parse(const std::string& text);
  static SweepSpec from_values(std::vector<double> v);

  // Range form rendered with plain numbers; empty for explicit lists.
  std::string canonical() const;
};

struct RunConfig {
  std::string experiment = "rabi";
  Transition transition = Transition::C;
  std::optional<SweepSpec> sweep;
  std::string output_dir = "out";
  double tolerance = 1e-9;
  unsigned seed = 0;
  int threads = 0;
  double pump_trace_duration = 0.0;  // s; 0 = sequence pump duration
  std::string fit_target;
  std::string fit_param;
  std::string data_path;
  int fit_restarts = 0;

  void validate() const;
};

// A fully resolved configuration: the observables the model was built from,
// the derived physical parameters, sequence settings, run settings, and the
// canonical JSON echo (with its hash) that reproduces all of it.
struct LoadedConfig {
  ModelObservables observables;
  SivParameters params;
  SequenceConfig seq;
  RunConfig run;
  std::string resolved_json;
  std::string config_hash;
};

// Parses a JSON config document. Every physical quantity carries its unit in
// the key name; unknown keys are hard errors listing the valid keys. Missing
// keys fall back to the measured defaults. An empty document yields the full
// default configuration.
LoadedConfig config_from_json_text(const std::string& text);

// Reads and parses a config file (empty file = empty document).
LoadedConfig load_config(const std::filesystem::path& path);

// Recomputes params, the canonical echo and the hash after fields of the
// loaded config were modified (CLI overrides).
void finalize_config(LoadedConfig& cfg);

// FNV-1a 64-bit hash, hex-encoded; used to stamp outputs with their config.
std::string fnv1a_hex(std::string_view text);

}  // namespace siv

#endif
