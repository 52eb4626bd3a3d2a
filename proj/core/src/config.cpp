#include "siv/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "siv/errors.hpp"

namespace siv {

using nlohmann::json;

namespace {

const std::set<std::string> kTopKeys = {"model", "sequence", "run"};

const std::set<std::string> kModelKeys = {
    "delta_g_ghz",
    "delta_e_ghz",
    "zpl_frequency_thz",
    "temperature_k",
    "t1_orbit_ns",
    "t2_star_lower_ps",
    "t2_star_upper_ps",
    "gamma_pure_mhz",
    "radiative_lifetime_ns",
    "branching_lower_excited_to_lower_ground",
    "branching_upper_excited_to_lower_ground",
};

const std::set<std::string> kSequenceKeys = {
    "rep_rate_mhz",
    "pump_duration_ns",
    "readout_duration_ns",
    "pump_rabi_mhz",
    "pre_raman_gap_ns",
    "post_raman_gap_ns",
    "background_slope_counts_per_w",
    "collection_scale_counts",
    "resonant_pulse_length_ps",
    "raman_pulse_length_ps",
    "raman_detuning_ghz",
    "drive_ratio",
    "include_upper_lambda",
    "rabi_calib_w_to_rad2_per_s2",
    "raman_calib_w_to_rad2_per_s2",
    "steady_state",
    "max_cycles",
    "steady_state_tol",
    "etalon_finesse",
    "etalon_fsr_ghz",
    "etalon_linewidth_ghz",
    "pulse_picker_suppression",
};

const std::set<std::string> kRunKeys = {
    "experiment", "transition", "sweep", "output_dir", "tolerance",
    "seed", "threads", "pump_trace_duration_ns", "fit_target", "fit_param",
    "data_path", "fit_restarts",
};

std::string join_keys(const std::set<std::string>& keys) {
  std::string out;
  for (const std::string& k : keys) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

void check_section_keys(const json& section, const std::string& name,
                        const std::set<std::string>& valid) {
  if (!section.is_object())
    throw ConfigError("config section '" + name + "' must be an object");
  for (const auto& item : section.items()) {
    if (!valid.count(item.key())) {
      throw ConfigError("unknown key '" + name + "." + item.key() +
                        "'; valid keys: " + join_keys(valid));
    }
  }
}

double num(const json& section, const std::string& section_name, const char* key) {
  const json& v = section.at(key);
  if (!v.is_number())
    throw ConfigError("key '" + section_name + "." + key + "' must be a number");
  return v.get<double>();
}

bool boolean(const json& section, const std::string& section_name, const char* key) {
  const json& v = section.at(key);
  if (!v.is_boolean())
    throw ConfigError("key '" + section_name + "." + key + "' must be a boolean");
  return v.get<bool>();
}

std::string str_field(const json& section, const std::string& section_name, const char* key) {
  const json& v = section.at(key);
  if (!v.is_string())
    throw ConfigError("key '" + section_name + "." + key + "' must be a string");
  return v.get<std::string>();
}

void set_default(json& section, const char* key, const json& value) {
  if (!section.contains(key)) section[key] = value;
}

std::string default_sweep(const std::string& experiment, Transition transition) {
  if (experiment == "rabi")
    return transition == Transition::B ? "0:6pi:121" : "0:10pi:201";
  if (experiment == "ramsey") return "40:4440:41";
  if (experiment == "raman-rabi") return "0:8:81";
  if (experiment == "raman-ramsey") return "0:104:131";
  return {};
}

void fill_defaults(json& doc) {
  for (const char* section : {"model", "sequence", "run"}) {
    if (!doc.contains(section)) doc[section] = json::object();
  }
  json& model = doc["model"];
  set_default(model, "delta_g_ghz", 48.0);
  set_default(model, "delta_e_ghz", 259.0);
  set_default(model, "zpl_frequency_thz", 406.8);
  set_default(model, "temperature_k", 5.0);
  set_default(model, "t1_orbit_ns", 35.0);
  set_default(model, "t2_star_lower_ps", 578.0);
  set_default(model, "t2_star_upper_ps", 279.0);
  set_default(model, "gamma_pure_mhz", 160.0);
  set_default(model, "radiative_lifetime_ns", 1.7);
  set_default(model, "branching_lower_excited_to_lower_ground", 0.5);
  set_default(model, "branching_upper_excited_to_lower_ground", 0.5);

  json& run = doc["run"];
  set_default(run, "experiment", "rabi");
  set_default(run, "transition", "C");
  set_default(run, "output_dir", "out");
  set_default(run, "tolerance", 1e-9);
  set_default(run, "seed", 0);
  set_default(run, "threads", 0);
  set_default(run, "pump_trace_duration_ns", 0.0);
  set_default(run, "fit_target", "");
  set_default(run, "fit_param", "");
  set_default(run, "data_path", "");
  set_default(run, "fit_restarts", 0);

  const std::string experiment =
      run["experiment"].is_string() ? run["experiment"].get<std::string>() : "";
  const std::string fit_target =
      run["fit_target"].is_string() ? run["fit_target"].get<std::string>() : "";
  json& seq = doc["sequence"];
  const bool raman = experiment == "raman-rabi" || experiment == "raman-ramsey" ||
                     (experiment == "fit" && fit_target == "raman-rabi");
  set_default(seq, "rep_rate_mhz", raman ? 1.0 : 80.0);
  set_default(seq, "pump_duration_ns", 200.0);
  set_default(seq, "readout_duration_ns", 200.0);
  set_default(seq, "pump_rabi_mhz", 62.3);  // fitted to the 22% pumping floor
  set_default(seq, "pre_raman_gap_ns", 2.0);
  set_default(seq, "post_raman_gap_ns", 2.0);
  set_default(seq, "background_slope_counts_per_w", 0.0);
  set_default(seq, "collection_scale_counts", 1.0);
  set_default(seq, "resonant_pulse_length_ps", 12.0);
  set_default(seq, "raman_pulse_length_ps", 1.0);
  set_default(seq, "raman_detuning_ghz", 500.0);
  set_default(seq, "drive_ratio", 0.7);
  set_default(seq, "include_upper_lambda", true);
  set_default(seq, "rabi_calib_w_to_rad2_per_s2", 0.0);
  set_default(seq, "raman_calib_w_to_rad2_per_s2", 0.0);
  set_default(seq, "steady_state", true);
  set_default(seq, "max_cycles", 400);
  set_default(seq, "steady_state_tol", 1e-6);
  set_default(seq, "etalon_finesse", 50.0);
  set_default(seq, "etalon_fsr_ghz", 1000.0);
  set_default(seq, "etalon_linewidth_ghz", 20.0);
  set_default(seq, "pulse_picker_suppression", 1000.0);

  if (!run.contains("sweep")) {
    const std::string transition =
        run["transition"].is_string() ? run["transition"].get<std::string>() : "C";
    const std::string sweep =
        default_sweep(experiment, transition == "B" || transition == "b"
                                      ? Transition::B
                                      : Transition::C);
    if (!sweep.empty()) run["sweep"] = sweep;
  }
}

double parse_sweep_number(const std::string& raw) {
  std::string s = raw;
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw ConfigError("empty number in sweep specification");
  double factor = 1.0;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    factor = pi;
    s = s.substr(0, s.size() - 2);
    if (s.empty() || s == "+") s = "1";
    if (s == "-") s = "-1";
  }
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("invalid number '" + raw + "' in sweep specification");
  }
  if (consumed != s.size())
    throw ConfigError("invalid number '" + raw + "' in sweep specification");
  return value * factor;
}

}  // namespace

SweepSpec SweepSpec::parse(const std::string& text) {
  SweepSpec out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3)
      throw ConfigError("sweep range must be start:stop:count, got '" + text + "'");
    out.start = parse_sweep_number(parts[0]);
    out.stop = parse_sweep_number(parts[1]);
    try {
      out.count = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("invalid sweep count in '" + text + "'");
    }
    if (out.count < 2) throw ConfigError("sweep count must be >= 2");
    out.values.resize(static_cast<std::size_t>(out.count));
    for (int i = 0; i < out.count; ++i) {
      out.values[static_cast<std::size_t>(i)] =
          out.start + (out.stop - out.start) * static_cast<double>(i) /
                          static_cast<double>(out.count - 1);
    }
    return out;
  }
  std::vector<double> values;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) values.push_back(parse_sweep_number(part));
  return from_values(std::move(values));
}

SweepSpec SweepSpec::from_values(std::vector<double> v) {
  if (v.size() < 2) throw ConfigError("explicit sweep lists need at least 2 values");
  SweepSpec out;
  out.values = std::move(v);
  out.explicit_list = true;
  out.count = static_cast<int>(out.values.size());
  return out;
}

std::string SweepSpec::canonical() const {
  if (explicit_list) return {};
  std::ostringstream ss;
  ss.precision(17);
  ss << start << ":" << stop << ":" << count;
  return ss.str();
}

void RunConfig::validate() const {
  static const std::set<std::string> experiments = {
      "rabi", "ramsey", "pump", "raman-rabi", "raman-ramsey", "fit"};
  if (!experiments.count(experiment))
    throw ConfigError("unknown experiment '" + experiment +
                      "'; valid: rabi, ramsey, pump, raman-rabi, raman-ramsey, fit");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (!(tolerance >= 1e-12 && tolerance <= 1e-4))
    throw ConfigError("tolerance must lie in [1e-12, 1e-4]");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (fit_restarts < 0) throw ConfigError("fit_restarts must be >= 0");
  if (experiment == "fit") {
    if (fit_target != "raman-rabi" && fit_target != "pump")
      throw ConfigError("fit target must be raman-rabi or pump");
    if (fit_param != "ratio" && fit_param != "pump-rabi")
      throw ConfigError("fit param must be ratio or pump-rabi");
    if (data_path.empty()) throw ConfigError("fit requires a data file path");
    if (!std::filesystem::exists(data_path))
      throw ConfigError("fit data file does not exist: " + data_path);
  }
}

LoadedConfig config_from_json_text(const std::string& text) {
  json doc;
  const bool blank =
      std::all_of(text.begin(), text.end(),
                  [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!kTopKeys.count(item.key()))
      throw ConfigError("unknown section '" + item.key() +
                        "'; valid sections: " + join_keys(kTopKeys));
  }
  fill_defaults(doc);
  check_section_keys(doc["model"], "model", kModelKeys);
  check_section_keys(doc["sequence"], "sequence", kSequenceKeys);
  check_section_keys(doc["run"], "run", kRunKeys);

  LoadedConfig cfg;
  const json& m = doc["model"];
  cfg.observables.delta_g = two_pi * 1e9 * num(m, "model", "delta_g_ghz");
  cfg.observables.delta_e = two_pi * 1e9 * num(m, "model", "delta_e_ghz");
  cfg.observables.zpl_frequency = 1e12 * num(m, "model", "zpl_frequency_thz");
  cfg.observables.temperature = num(m, "model", "temperature_k");
  cfg.observables.t1_orbit = 1e-9 * num(m, "model", "t1_orbit_ns");
  cfg.observables.t2_star_lower = 1e-12 * num(m, "model", "t2_star_lower_ps");
  cfg.observables.t2_star_upper = 1e-12 * num(m, "model", "t2_star_upper_ps");
  cfg.observables.gamma_pure = two_pi * 1e6 * num(m, "model", "gamma_pure_mhz");
  const double lifetime_ns = num(m, "model", "radiative_lifetime_ns");
  if (!(lifetime_ns > 0.0)) throw ConfigError("radiative_lifetime_ns must be > 0");
  cfg.observables.gamma_rad = 1.0 / (1e-9 * lifetime_ns);
  const double b_lower = num(m, "model", "branching_lower_excited_to_lower_ground");
  const double b_upper = num(m, "model", "branching_upper_excited_to_lower_ground");
  if (b_lower < 0.0 || b_lower > 1.0 || b_upper < 0.0 || b_upper > 1.0)
    throw ConfigError("branching fractions must lie in [0, 1]");
  cfg.observables.branching << b_lower, 1.0 - b_lower, b_upper, 1.0 - b_upper;

  const json& s = doc["sequence"];
  cfg.seq.rep_rate = 1e6 * num(s, "sequence", "rep_rate_mhz");
  cfg.seq.pump_duration = 1e-9 * num(s, "sequence", "pump_duration_ns");
  cfg.seq.readout_duration = 1e-9 * num(s, "sequence", "readout_duration_ns");
  cfg.seq.pump_rabi = two_pi * 1e6 * num(s, "sequence", "pump_rabi_mhz");
  cfg.seq.pre_raman_gap = 1e-9 * num(s, "sequence", "pre_raman_gap_ns");
  cfg.seq.post_raman_gap = 1e-9 * num(s, "sequence", "post_raman_gap_ns");
  cfg.seq.background_slope = num(s, "sequence", "background_slope_counts_per_w");
  cfg.seq.collection_scale = num(s, "sequence", "collection_scale_counts");
  cfg.seq.resonant_pulse_length = 1e-12 * num(s, "sequence", "resonant_pulse_length_ps");
  cfg.seq.raman_pulse_length = 1e-12 * num(s, "sequence", "raman_pulse_length_ps");
  cfg.seq.raman_detuning = two_pi * 1e9 * num(s, "sequence", "raman_detuning_ghz");
  cfg.seq.ratio.r = num(s, "sequence", "drive_ratio");
  cfg.seq.include_upper_lambda = boolean(s, "sequence", "include_upper_lambda");
  cfg.seq.rabi_calib = num(s, "sequence", "rabi_calib_w_to_rad2_per_s2");
  cfg.seq.raman_calib = num(s, "sequence", "raman_calib_w_to_rad2_per_s2");
  cfg.seq.steady_state = boolean(s, "sequence", "steady_state");
  cfg.seq.max_cycles = static_cast<int>(num(s, "sequence", "max_cycles"));
  cfg.seq.steady_state_tol = num(s, "sequence", "steady_state_tol");
  cfg.seq.etalon_finesse = num(s, "sequence", "etalon_finesse");
  cfg.seq.etalon_fsr = 1e9 * num(s, "sequence", "etalon_fsr_ghz");
  cfg.seq.etalon_linewidth = 1e9 * num(s, "sequence", "etalon_linewidth_ghz");
  cfg.seq.pulse_picker_suppression = num(s, "sequence", "pulse_picker_suppression");

  const json& r = doc["run"];
  cfg.run.experiment = str_field(r, "run", "experiment");
  cfg.run.transition = transition_from_string(str_field(r, "run", "transition"));
  if (r.contains("sweep")) {
    const json& sweep = r.at("sweep");
    if (sweep.is_string()) {
      cfg.run.sweep = SweepSpec::parse(sweep.get<std::string>());
    } else if (sweep.is_array()) {
      std::vector<double> values;
      for (const json& v : sweep) {
        if (!v.is_number()) throw ConfigError("sweep array entries must be numbers");
        values.push_back(v.get<double>());
      }
      cfg.run.sweep = SweepSpec::from_values(std::move(values));
    } else {
      throw ConfigError("run.sweep must be a string or an array of numbers");
    }
  }
  cfg.run.output_dir = str_field(r, "run", "output_dir");
  cfg.run.tolerance = num(r, "run", "tolerance");
  cfg.run.seed = static_cast<unsigned>(num(r, "run", "seed"));
  cfg.run.threads = static_cast<int>(num(r, "run", "threads"));
  cfg.run.pump_trace_duration = 1e-9 * num(r, "run", "pump_trace_duration_ns");
  cfg.run.fit_target = str_field(r, "run", "fit_target");
  cfg.run.fit_param = str_field(r, "run", "fit_param");
  cfg.run.data_path = str_field(r, "run", "data_path");
  cfg.run.fit_restarts = static_cast<int>(num(r, "run", "fit_restarts"));

  cfg.run.validate();
  cfg.seq.tol = cfg.run.tolerance;
  cfg.seq.threads = cfg.run.threads;
  cfg.params = params_from_observables(cfg.observables);
  cfg.seq.validate();

  cfg.resolved_json = doc.dump(2) + "\n";
  cfg.config_hash = fnv1a_hex(cfg.resolved_json);
  return cfg;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

void finalize_config(LoadedConfig& cfg) {
  cfg.seq.tol = cfg.run.tolerance;
  cfg.seq.threads = cfg.run.threads;
  cfg.params = params_from_observables(cfg.observables);
  cfg.config_hash = fnv1a_hex(cfg.resolved_json);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace siv
