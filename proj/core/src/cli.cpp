#include "siv/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "siv/config.hpp"
#include "siv/errors.hpp"
#include "siv/fitting.hpp"
#include "siv/results_io.hpp"
#include "siv/sequences.hpp"

namespace siv {

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string sweep;
  std::string transition;
  std::string target;
  std::string param;
  std::string data;
  double tol = 0.0;
  double ratio = -1.0;
  double duration_ns = 0.0;
  long threads = -1;
  long seed = -1;
  long restarts = -1;
  bool steady_state = true;
};

// Merges the CLI flags into the JSON config document; the merged document is
// then resolved exactly like a file-only run, so CLI runs are reproducible
// from the echoed config.
std::string merged_config_text(const CliOptions& o, const std::string& experiment,
                               const CLI::App* sub) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file: " + o.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (!text.empty()) {
      try {
        doc = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
      }
    }
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  }
  auto passed = [sub](const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  doc["run"]["experiment"] = experiment;
  if (passed("--transition")) doc["run"]["transition"] = o.transition;
  if (passed("--sweep")) doc["run"]["sweep"] = o.sweep;
  if (passed("--out")) doc["run"]["output_dir"] = o.out_dir;
  if (passed("--tol")) doc["run"]["tolerance"] = o.tol;
  if (passed("--threads")) doc["run"]["threads"] = o.threads;
  if (passed("--seed")) doc["run"]["seed"] = o.seed;
  if (passed("--steady-state") || passed("--single-shot"))
    doc["sequence"]["steady_state"] = o.steady_state;
  if (o.ratio >= 0.0) doc["sequence"]["drive_ratio"] = o.ratio;
  if (passed("--duration-ns")) doc["run"]["pump_trace_duration_ns"] = o.duration_ns;
  if (passed("--target")) doc["run"]["fit_target"] = o.target;
  if (passed("--param")) doc["run"]["fit_param"] = o.param;
  if (passed("--data")) doc["run"]["data_path"] = o.data;
  if (passed("--restarts")) doc["run"]["fit_restarts"] = o.restarts;
  return doc.dump();
}

std::vector<double> scaled(const std::vector<double>& v, double factor) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
  return out;
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double w = (xq - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + w * (y[j] - y[j - 1]);
}

ExperimentResult run_fit_experiment(const LoadedConfig& cfg) {
  const CsvTable table = read_csv(cfg.run.data_path);
  ExperimentResult res;
  res.experiment = "fit";

  if (cfg.run.fit_target == "raman-rabi") {
    const int pcol = table.column_index("power_w");
    const int ocol = table.column_index("population_upper_ground");
    if (pcol < 0 || ocol < 0)
      throw ConfigError(
          "raman-rabi fit data needs columns power_w and population_upper_ground");
    const std::vector<double>& powers = table.data[static_cast<std::size_t>(pcol)];
    const std::vector<double>& measured = table.data[static_cast<std::size_t>(ocol)];

    FitProblem prob;
    prob.residual = [&](const Eigen::VectorXd& x) {
      const ExperimentResult sim =
          run_raman_rabi(powers, DriveRatio{x(0)}, cfg.params, cfg.seq);
      const std::vector<double>& model = sim.data[2];
      Eigen::VectorXd r(static_cast<Eigen::Index>(model.size()));
      for (std::size_t i = 0; i < model.size(); ++i)
        r(static_cast<Eigen::Index>(i)) = model[i] - measured[i];
      return r;
    };
    prob.initial = Eigen::VectorXd::Constant(1, 0.5);
    prob.lower = Eigen::VectorXd::Constant(1, 0.05);
    prob.upper = Eigen::VectorXd::Constant(1, 2.0);
    prob.max_evals = 80;
    prob.tol = 1e-10;
    prob.restarts = cfg.run.fit_restarts;
    prob.seed = cfg.run.seed;
    const FitResult fit = fit_least_squares(prob);

    const ExperimentResult best =
        run_raman_rabi(powers, DriveRatio{fit.parameters(0)}, cfg.params, cfg.seq);
    res.columns = {"power_w", "data_population", "model_population"};
    res.data = {powers, measured, best.data[2]};
    res.derived["fitted_ratio"] = fit.parameters(0);
    res.derived["residual_norm"] = fit.residual_norm;
    res.derived["evaluations"] = fit.evaluations;
    res.derived["converged"] = fit.converged ? 1.0 : 0.0;
    return res;
  }

  // pump-rabi against a rho22(t) pump trace.
  const int tcol = table.column_index("time_ns");
  const int ocol = table.column_index("population_upper_ground");
  if (tcol < 0 || ocol < 0)
    throw ConfigError("pump fit data needs columns time_ns and population_upper_ground");
  const std::vector<double>& t_ns = table.data[static_cast<std::size_t>(tcol)];
  const std::vector<double>& measured = table.data[static_cast<std::size_t>(ocol)];
  const double duration = t_ns.back() * 1e-9;

  FitProblem prob;
  prob.residual = [&](const Eigen::VectorXd& x) {
    SequenceConfig seq = cfg.seq;
    seq.pump_rabi = std::pow(10.0, x(0));
    const ExperimentResult sim = run_pump(cfg.params, seq, duration);
    Eigen::VectorXd r(static_cast<Eigen::Index>(t_ns.size()));
    for (std::size_t i = 0; i < t_ns.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) =
          interpolate(sim.data[0], sim.data[1], t_ns[i]) - measured[i];
    }
    return r;
  };
  prob.initial = Eigen::VectorXd::Constant(1, 8.5);  // log10(rad/s)
  prob.lower = Eigen::VectorXd::Constant(1, 7.0);
  prob.upper = Eigen::VectorXd::Constant(1, 10.5);
  prob.max_evals = 80;
  prob.tol = 1e-10;
  prob.restarts = cfg.run.fit_restarts;
  prob.seed = cfg.run.seed;
  const FitResult fit = fit_least_squares(prob);
  const double pump_rabi = std::pow(10.0, fit.parameters(0));

  SequenceConfig seq = cfg.seq;
  seq.pump_rabi = pump_rabi;
  const ExperimentResult best = run_pump(cfg.params, seq, duration);
  std::vector<double> model(t_ns.size());
  for (std::size_t i = 0; i < t_ns.size(); ++i)
    model[i] = interpolate(best.data[0], best.data[1], t_ns[i]);
  res.columns = {"time_ns", "data_population", "model_population"};
  res.data = {t_ns, measured, model};
  res.derived["fitted_pump_rabi_mhz"] = pump_rabi / (two_pi * 1e6);
  res.derived["residual_norm"] = fit.residual_norm;
  res.derived["evaluations"] = fit.evaluations;
  res.derived["converged"] = fit.converged ? 1.0 : 0.0;
  return res;
}

ExperimentResult dispatch(const LoadedConfig& cfg) {
  const std::string& exp = cfg.run.experiment;
  if (exp == "fit") return run_fit_experiment(cfg);
  if (exp == "pump") {
    const double duration = cfg.run.pump_trace_duration > 0.0
                                ? cfg.run.pump_trace_duration
                                : cfg.seq.pump_duration;
    return run_pump(cfg.params, cfg.seq, duration);
  }
  if (!cfg.run.sweep)
    throw ConfigError("experiment '" + exp + "' needs a sweep specification");
  const std::vector<double>& sweep = cfg.run.sweep->values;
  if (exp == "rabi") return run_rabi_areas(cfg.run.transition, sweep, cfg.params, cfg.seq);
  if (exp == "ramsey")
    return run_ramsey_optical(cfg.run.transition, scaled(sweep, 1e-12), cfg.params,
                              cfg.seq);
  if (exp == "raman-rabi")
    return run_raman_rabi(scaled(sweep, 1e-6), cfg.seq.ratio, cfg.params, cfg.seq);
  if (exp == "raman-ramsey")
    return run_raman_ramsey(scaled(sweep, 1e-12), cfg.seq.ratio, cfg.params, cfg.seq);
  throw ConfigError("unknown experiment: " + exp);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "sivsim: pulsed-driving simulator for the four-level SiV- orbital system"};
  app.require_subcommand(1);

  CliOptions o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--tol", o.tol, "integrator tolerance");
    sub->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    sub->add_option("--seed", o.seed, "seed for optional multi-start fits");
  };

  CLI::App* rabi = app.add_subcommand(
      "rabi", "one-photon Rabi oscillations; sweep is the pulse area in rad");
  CLI::App* ramsey = app.add_subcommand(
      "ramsey", "one-photon Ramsey envelopes; sweep is the delay in ps");
  CLI::App* pump = app.add_subcommand("pump", "optical pumping trace on transition D");
  CLI::App* raman_rabi = app.add_subcommand(
      "raman-rabi", "two-photon Raman Rabi; sweep is the average power in uW");
  CLI::App* raman_ramsey = app.add_subcommand(
      "raman-ramsey", "Raman Ramsey fringes; sweep is the delay in ps");
  CLI::App* fit = app.add_subcommand("fit", "least-squares parameter estimation");

  for (CLI::App* sub : {rabi, ramsey, pump, raman_rabi, raman_ramsey, fit}) {
    add_common(sub);
  }
  for (CLI::App* sub : {rabi, ramsey}) {
    sub->add_option("--transition", o.transition, "driven transition (B or C)");
    sub->add_option("--sweep", o.sweep, "start:stop:count (pi literal) or list");
  }
  rabi->add_flag("--steady-state,!--single-shot", o.steady_state,
                 "iterate the repetition cycle to its steady state");
  for (CLI::App* sub : {raman_rabi, raman_ramsey}) {
    sub->add_option("--sweep", o.sweep, "start:stop:count or list");
    sub->add_option("--ratio", o.ratio, "D:C drive ratio of the Raman beam");
  }
  pump->add_option("--duration-ns", o.duration_ns, "pump trace duration in ns");
  fit->add_option("--target", o.target, "fit target: raman-rabi or pump");
  fit->add_option("--param", o.param, "fit parameter: ratio or pump-rabi");
  fit->add_option("--data", o.data, "CSV data file");
  fit->add_option("--restarts", o.restarts, "seeded multi-start count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::pair<CLI::App*, const char*> kSubs[] = {
      {rabi, "rabi"},           {ramsey, "ramsey"},
      {pump, "pump"},           {raman_rabi, "raman-rabi"},
      {raman_ramsey, "raman-ramsey"}, {fit, "fit"},
  };

  try {
    std::string experiment;
    const CLI::App* sub = nullptr;
    for (const auto& [s, name] : kSubs) {
      if (s->parsed()) {
        experiment = name;
        sub = s;
        break;
      }
    }
    const LoadedConfig cfg = config_from_json_text(merged_config_text(o, experiment, sub));
    const ExperimentResult result = dispatch(cfg);
    const OutputFiles files =
        write_results(result, cfg.run.output_dir, cfg.resolved_json);
    std::printf("%s: %zu sweep points -> %s\n", result.experiment.c_str(),
                result.rows(), files.csv.string().c_str());
    for (const auto& [key, value] : result.derived) {
      std::printf("  %s = %.10g\n", key.c_str(), value);
    }
    return 0;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const SimulationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace siv
