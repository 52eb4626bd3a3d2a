// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Budgets and tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "siv/cli.hpp"
#include "siv/config.hpp"
#include "siv/engine.hpp"
#include "siv/fitting.hpp"
#include "siv/results_io.hpp"
#include "siv/sequences.hpp"

using namespace siv;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what;
    if (!cond) {
      ok = false;
      detail << " [FAILED]";
    }
  }

  void expect_close(double actual, double expected, double rel_tol,
                    const std::string& name) {
    const double rel = std::abs(actual / expected - 1.0);
    std::ostringstream what;
    what << name << " = " << actual << " (target " << expected << ", rel err "
         << rel << ", tol " << rel_tol << ")";
    expect(rel <= rel_tol, what.str());
  }

  void expect_below(double actual, double bound, const std::string& name) {
    std::ostringstream what;
    what << name << " = " << actual << " (bound " << bound << ")";
    expect(actual <= bound, what.str());
  }
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = a + (b - a) * i / double(n - 1);
  return v;
}

double max_positivity_violation(const Trajectory& traj) {
  double worst = 0.0;
  for (const DensityMatrix& rho : traj.states)
    worst = std::min(worst, density::min_eigenvalue(rho));
  return worst;
}

double max_trace_error(const Trajectory& traj) {
  double worst = 0.0;
  for (const DensityMatrix& rho : traj.states)
    worst = std::max(worst, density::trace_error(rho));
  return worst;
}

SequenceConfig default_seq(int threads = 0) {
  SequenceConfig seq;
  seq.threads = threads;
  return seq;
}

// --------------------------------------------------------------------------
// 1. Physics oracles: closed-form Rabi, trace drift, positivity floor.

void criterion1(Check& c) {
  SivParameters closed = SivParameters::defaults();
  closed.gamma_rad = 0.0;
  closed.gamma_pure = 0.0;
  closed.gamma_g_up = closed.gamma_g_down = 0.0;
  closed.gamma_e_up = closed.gamma_e_down = 0.0;

  const RotatingFrame frame{transition_frequency(closed, Transition::C), 0};
  PulseEnvelope drive;
  drive.shape = PulseShape::Square;
  drive.duration_fwhm = 4e-9;
  drive.peak_rabi = two_pi * 5e9;
  drive.reference = Transition::C;
  drive.t_center = 2e-9;
  drive.coupling[static_cast<int>(Transition::C)] = 1.0;

  DensityMatrix rho = DensityMatrix::Zero();
  rho(0, 0) = 1.0;
  IntegratorOptions opt;
  opt.samples = 200;
  const Trajectory traj =
      integrate_segment(rho, closed, frame, {&drive, 1}, 0.0, 2e-9, opt);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double theta = drive.peak_rabi * traj.times[k];
    const double expected = std::pow(std::sin(0.5 * theta), 2);
    worst = std::max(worst, std::abs(traj.states[k](2, 2).real() - expected));
  }
  c.expect_below(worst, 1e-6, "max |p_e - sin^2(theta/2)|");

  // Golden dissipative runs: thermal relaxation and a detuned Raman pulse.
  const SivParameters params = SivParameters::defaults();
  DensityMatrix excited = DensityMatrix::Zero();
  excited(1, 1) = 1.0;
  IntegratorOptions opt2;
  opt2.samples = 100;
  const Trajectory relax = integrate_segment(excited, params,
                                             {params.zpl_frequency, 1}, {}, 0.0,
                                             200e-9, opt2);
  PulseEnvelope raman;
  raman.shape = PulseShape::Sech;
  raman.duration_fwhm = 1.5e-12;
  raman.peak_rabi = 8e11;
  raman.reference = Transition::C;
  raman.carrier_detuning = two_pi * 500e9;
  raman.t_center = 12e-12;
  raman.coupling = {1.0, 0.7, 1.0, 0.7};
  const Trajectory pulse =
      integrate_segment(thermal_ground_state(params), params,
                        {transition_frequency(params, Transition::D), 2},
                        {&raman, 1}, 0.0, 24e-12, opt2);

  double drift = std::max({max_trace_error(traj), max_trace_error(relax),
                           max_trace_error(pulse)});
  double positivity = std::min({max_positivity_violation(traj),
                                max_positivity_violation(relax),
                                max_positivity_violation(pulse)});
  c.expect_below(drift, 1e-9, "max trace drift");
  std::ostringstream pos_msg;
  pos_msg << "positivity floor " << positivity << " >= -1e-8";
  c.expect(positivity >= -1e-8, pos_msg.str());
}

// --------------------------------------------------------------------------
// 2. Thermalization: Boltzmann ratio and 35 ns relaxation constant.

void criterion2(Check& c) {
  const SivParameters params = SivParameters::defaults();
  const RotatingFrame frame{params.zpl_frequency, 0};
  DensityMatrix rho = DensityMatrix::Zero();
  rho(0, 0) = 1.0;

  IntegratorOptions opt;
  opt.samples = 120;
  const double t1 = 35e-9;
  const Trajectory traj = integrate_segment(rho, params, frame, {}, 0.0, 10.0 * t1, opt);
  const DensityMatrix& last = traj.states.back();
  const double ratio = last(1, 1).real() / last(0, 0).real();
  const double target = boltzmann_factor(params.delta_g, params.temperature);
  c.expect_close(ratio, target, 1e-4, "p2/p1 after 10 T1");

  const double p2_eq = target / (1.0 + target);
  std::vector<double> t, dev;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (traj.times[k] > 3.0 * t1) break;
    t.push_back(traj.times[k]);
    dev.push_back(p2_eq - traj.states[k](1, 1).real());
  }
  const ExpDecayFit fit = fit_exponential_decay(t, dev);
  c.expect_close(fit.time_constant, t1, 1e-2, "relaxation time constant");
}

// --------------------------------------------------------------------------
// 3. One-photon Rabi traces.

void rabi_criterion(Check& c, Transition x, double max_area, int points) {
  const SivParameters params = SivParameters::defaults();
  const SequenceConfig seq = default_seq();
  const std::vector<double> areas = linspace(0.0, max_area, points);
  const ExperimentResult res = run_rabi_areas(x, areas, params, seq);

  // Visibility and extrema are evaluated on the analysis trace (linear
  // power-baseline through the minima subtracted), matching how the measured
  // counts were reduced before the contrast was quoted.
  const auto extrema = find_extrema(res.data[0], res.data[2]);
  const double visibility = oscillation_visibility(extrema);
  std::string label(to_string(x));
  c.expect(visibility > 0.9,
           "transition " + label + " oscillation visibility " +
               std::to_string(visibility) + " > 0.9 (raw trace: " +
               std::to_string(res.derived.at("min_oscillation_visibility")) + ")");

  // Single-point area calibration at the first maximum, then every extremum
  // must sit at an integer multiple of pi within 2%.
  double first_max = 0.0;
  for (const auto& e : extrema) {
    if (e.is_max) {
      first_max = e.x;
      break;
    }
  }
  c.expect(first_max > 0.0, "transition " + label + " has a first maximum");
  if (first_max == 0.0) return;
  const double scale = pi / first_max;
  double worst = 0.0;
  for (const auto& e : extrema) {
    const double theta = e.x * scale;
    const double k = std::round(theta / pi);
    if (k < 1.0) continue;
    worst = std::max(worst, std::abs(theta / (k * pi) - 1.0));
  }
  c.expect_below(worst, 0.02,
                 "transition " + label + " extrema offset from k*pi (rel)");
}

void criterion3_c(Check& c) { rabi_criterion(c, Transition::C, 10.0 * pi, 201); }
void criterion3_b(Check& c) { rabi_criterion(c, Transition::B, 6.0 * pi, 121); }

// --------------------------------------------------------------------------
// 4. Optical Ramsey coherence times and linewidths.

void ramsey_criterion(Check& c, Transition x, double t2_target, double max_delay,
                      double linewidth_target, double ple_linewidth) {
  const SivParameters params = SivParameters::defaults();
  const SequenceConfig seq = default_seq();
  const std::vector<double> delays = linspace(40e-12, max_delay, 41);
  const ExperimentResult res = run_ramsey_optical(x, delays, params, seq);

  const double t2 = res.derived.at("t2_star_ps") * 1e-12;
  const std::string label(to_string(x));
  c.expect_close(t2, t2_target, 0.05, "T2*(" + label + ")");
  const double linewidth = 1.0 / (two_pi * t2);
  c.expect_close(linewidth, linewidth_target, 0.05, "linewidth(" + label + ")");
  c.expect_close(linewidth, ple_linewidth, 0.03, "linewidth(" + label + ") vs PLE");
}

void criterion4(Check& c) {
  ramsey_criterion(c, Transition::C, 578e-12, 4440e-12, 275e6, 270e6);
  ramsey_criterion(c, Transition::B, 279e-12, 2500e-12, 570e6, 574e6);
}

// --------------------------------------------------------------------------
// 5. Optical pumping floor with the fitted pump drive.

void criterion5(Check& c) {
  const SivParameters params = SivParameters::defaults();
  const SequenceConfig seq = default_seq();
  const ExperimentResult res = run_pump(params, seq, seq.pump_duration);

  const double floor = res.derived.at("floor_population");
  c.expect(std::abs(floor - 0.22) <= 0.02,
           "pumped floor = " + std::to_string(floor) + " within 0.22 +- 0.02");
  bool monotone = true;
  const std::vector<double>& rho22 = res.data[1];
  for (std::size_t i = 1; i < rho22.size(); ++i) {
    if (rho22[i] > rho22[i - 1] + 1e-9) monotone = false;
  }
  c.expect(monotone, "rho22 decays monotonically during the pump");

  // Round-trip identifiability of the pump drive from its own trace.
  FitProblem prob;
  prob.residual = [&](const Eigen::VectorXd& v) {
    SequenceConfig trial = seq;
    trial.pump_rabi = std::pow(10.0, v(0));
    const ExperimentResult sim = run_pump(params, trial, seq.pump_duration);
    Eigen::VectorXd r(static_cast<Eigen::Index>(rho22.size()));
    for (std::size_t i = 0; i < rho22.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = sim.data[1][i] - rho22[i];
    return r;
  };
  prob.initial = Eigen::VectorXd::Constant(1, std::log10(seq.pump_rabi) - 0.2);
  prob.lower = Eigen::VectorXd::Constant(1, std::log10(seq.pump_rabi) - 1.0);
  prob.upper = Eigen::VectorXd::Constant(1, std::log10(seq.pump_rabi) + 1.0);
  prob.max_evals = 60;
  prob.tol = 1e-14;
  const FitResult fit = fit_least_squares(prob);
  c.expect_close(std::pow(10.0, fit.parameters(0)), seq.pump_rabi, 0.05,
                 "refitted pump_rabi");
}

// --------------------------------------------------------------------------
// 6. Raman Rabi: oscillation reach, adiabatic-elimination oracle, ratio fit.

void criterion6(Check& c) {
  const SivParameters params = SivParameters::defaults();
  SequenceConfig seq = default_seq();
  seq.rep_rate = 1e6;

  // (a) Two-photon oscillation out to a nominal area of 2 pi.
  {
    const std::vector<double> areas = linspace(0.0, 2.0 * pi, 41);
    const ExperimentResult res = run_raman_rabi_areas(areas, seq.ratio, params, seq);
    const auto extrema = find_extrema(res.data[0], res.data[1]);
    const double floor = res.derived.at("pump_floor_population");
    double reach = 0.0;
    for (double v : res.data[1]) reach = std::max(reach, v);
    // One full two-photon flop across the sweep: a transfer maximum followed
    // by a return minimum that stays above the pumped floor.
    const bool full_flop = extrema.size() >= 2 && extrema.front().is_max &&
                           !extrema.back().is_max && extrema.back().y > floor;
    c.expect(full_flop, "two-photon trace completes a transfer-return cycle (" +
                            std::to_string(extrema.size()) + " extrema)");
    c.expect(reach > floor + 0.3,
             "population transfer reaches " + std::to_string(reach));
  }

  // (b) Quasi-CW two-photon oscillation against Omega_C Omega_D / (2 Delta).
  {
    const double omega = two_pi * 50e9;
    const double detuning = two_pi * 500e9;
    const double expected = raman_effective_rabi(omega, omega, detuning).value;

    PulseEnvelope leg_c;
    leg_c.shape = PulseShape::Square;
    leg_c.duration_fwhm = 2e-9;
    leg_c.peak_rabi = omega;
    leg_c.reference = Transition::C;
    leg_c.carrier_detuning = detuning;
    leg_c.t_center = 1e-9;
    leg_c.coupling[static_cast<int>(Transition::C)] = 1.0;
    PulseEnvelope leg_d = leg_c;
    leg_d.reference = Transition::D;
    leg_d.coupling = {};
    leg_d.coupling[static_cast<int>(Transition::D)] = 1.0;
    const std::vector<PulseEnvelope> legs = {leg_c, leg_d};

    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 1.0;
    const RotatingFrame frame{params.zpl_frequency - detuning / two_pi, 0};
    IntegratorOptions opt;
    opt.samples = 400;
    const double t_end = 1.0e-9;
    const Trajectory traj =
        integrate_segment(rho, params, frame, legs, 0.0, t_end, opt);
    std::vector<double> t, p2;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      t.push_back(traj.times[k]);
      p2.push_back(traj.states[k](1, 1).real());
    }
    const SinusoidFit fit = fit_sinusoid(t, p2, expected / two_pi);
    c.expect_close(fit.frequency * two_pi, expected, 0.05,
                   "two-photon oscillation frequency vs oracle");
  }

  // (c) Round-trip identifiability of the drive ratio on synthetic data,
  // through the bundled fixture and the CLI fit path.
  {
    const fs::path fixture = fs::path(SIV_FIXTURE_DIR) / "raman_rabi_r0p7.csv";
    c.expect(fs::exists(fixture), "bundled fixture " + fixture.string() + " exists");
    if (fs::exists(fixture)) {
      const fs::path out = fs::temp_directory_path() / "sivsim_acceptance_fit";
      fs::remove_all(out);
      const std::string data = fixture.string();
      const std::string out_s = out.string();
      const char* argv[] = {"siv_sim", "fit",    "--target", "raman-rabi",
                            "--param", "ratio",  "--data",   data.c_str(),
                            "--out",   out_s.c_str()};
      const int rc = run_cli(static_cast<int>(std::size(argv)), argv);
      c.expect(rc == 0, "cli fit exit code 0");
      if (rc == 0) {
        std::ifstream in(out / "derived.json");
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        const std::string key = "\"fitted_ratio\": ";
        const auto pos = text.find(key);
        c.expect(pos != std::string::npos, "derived.json contains fitted_ratio");
        if (pos != std::string::npos) {
          const double fitted = std::stod(text.substr(pos + key.size()));
          c.expect_close(fitted, 0.7, 0.02, "fitted drive ratio");
        }
      }
    }
  }
}

// --------------------------------------------------------------------------
// 7. Raman Ramsey fringes.

void criterion7(Check& c) {
  const SivParameters params = SivParameters::defaults();
  SequenceConfig seq = default_seq();
  seq.rep_rate = 1e6;
  const std::vector<double> delays = linspace(0.0, 104e-12, 131);
  const ExperimentResult res = run_raman_ramsey(delays, seq.ratio, params, seq);

  const double fringe_ghz = res.derived.at("fringe_frequency_ghz");
  c.expect_close(fringe_ghz, params.delta_g / two_pi * 1e-9, 0.01, "fringe frequency (GHz)");

  const double floor = res.derived.at("pump_floor_population");
  const double min_pop = res.derived.at("min_population");
  c.expect(min_pop > floor, "fringe minima " + std::to_string(min_pop) +
                                " stay above the pumped floor " + std::to_string(floor));
}

// --------------------------------------------------------------------------
// 8. Determinism of the CLI outputs.

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion8(Check& c) {
  const fs::path base = fs::temp_directory_path() / "sivsim_acceptance_det";
  const std::string dir = base.string();
  const char* names[] = {"rabi.csv", "derived.json", "config_resolved.json"};
  std::vector<std::string> first_pass;

  // Identical invocation twice; the second run rebuilds the directory from
  // scratch and must reproduce every output byte.
  for (int attempt = 0; attempt < 2; ++attempt) {
    fs::remove_all(base);
    const char* argv[] = {"siv_sim", "rabi",     "--transition", "C",
                          "--sweep", "0:4pi:41", "--seed",       "7",
                          "--out",   dir.c_str()};
    const int rc = run_cli(static_cast<int>(std::size(argv)), argv);
    c.expect(rc == 0, "cli run " + std::to_string(attempt + 1) + " exits 0");
    if (attempt == 0) {
      for (const char* name : names) first_pass.push_back(file_bytes(base / name));
    }
  }
  for (std::size_t i = 0; i < std::size(names); ++i) {
    const std::string again = file_bytes(base / names[i]);
    c.expect(!again.empty() && again == first_pass[i],
             std::string(names[i]) + " byte-identical across runs");
  }
}

struct Criterion {
  int id;
  std::string name;
  std::function<void(Check&)> run;
  double budget_s;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "physics oracles (Rabi closed form, trace, positivity)", criterion1, 10.0},
      {2, "ground-manifold thermalization", criterion2, 10.0},
      {3, "one-photon Rabi, transition C to 10 pi", criterion3_c, 60.0},
      {3, "one-photon Rabi, transition B to 6 pi", criterion3_b, 60.0},
      {4, "optical Ramsey T2* and linewidths", criterion4, 120.0},
      {5, "optical pumping floor", criterion5, 30.0},
      {6, "Raman Rabi", criterion6, 300.0},
      {7, "Raman Ramsey fringes", criterion7, 300.0},
      {8, "deterministic outputs", criterion8, 60.0},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.expect(elapsed < criterion.budget_s,
                 "runtime " + std::to_string(elapsed) + " s < " +
                     std::to_string(criterion.budget_s) + " s");
    std::printf("[%s] criterion %d: %s (%s)\n", check.ok ? "PASS" : "FAIL",
                criterion.id, criterion.name.c_str(), check.detail.str().c_str());
    if (!check.ok) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
