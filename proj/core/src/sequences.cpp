#include "siv/sequences.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "siv/errors.hpp"
#include "siv/fitting.hpp"

namespace siv {

namespace {

double amplitude_fwhm(PulseShape shape, double intensity_fwhm) {
  return amplitude_fwhm_from_intensity_fwhm(shape, intensity_fwhm);
}

double sech_rate(double amplitude_fwhm) {
  return 2.0 * std::acosh(2.0) / amplitude_fwhm;
}

// ---------------------------------------------------------------------------
// Cycle planning: one repetition period split into free and driven windows.

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<PulseEnvelope> drives;  // empty = free evolution
};

std::vector<Segment> plan_cycle(std::span<const PulseEnvelope> pulses, double period,
                                std::span<const double> cuts) {
  struct Window {
    double t0, t1;
    std::vector<PulseEnvelope> drives;
  };
  std::vector<Window> windows;
  for (const PulseEnvelope& p : pulses) {
    const double w = p.support_half_width();
    Window win{std::max(0.0, p.t_center - w), std::min(period, p.t_center + w), {p}};
    if (win.t1 <= win.t0) continue;
    windows.push_back(std::move(win));
  }
  std::sort(windows.begin(), windows.end(),
            [](const Window& a, const Window& b) { return a.t0 < b.t0; });
  std::vector<Window> merged;
  for (Window& w : windows) {
    if (!merged.empty() && w.t0 <= merged.back().t1) {
      merged.back().t1 = std::max(merged.back().t1, w.t1);
      for (auto& d : w.drives) merged.back().drives.push_back(std::move(d));
    } else {
      merged.push_back(std::move(w));
    }
  }

  // Floating-point snap for boundaries produced by different arithmetic
  // orderings of the same instant; far below any physical segment length.
  constexpr double kSnap = 1e-15;

  std::vector<Segment> segs;
  double t = 0.0;
  for (const Window& w : merged) {
    if (w.t0 > t + kSnap) segs.push_back({t, w.t0, {}});
    segs.push_back({std::max(t, w.t0), w.t1, w.drives});
    t = w.t1;
  }
  if (t < period - kSnap) segs.push_back({t, period, {}});

  // Split segments at the requested observation times.
  for (double cut : cuts) {
    if (cut <= 0.0 || cut >= period) continue;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (cut > segs[i].t0 + kSnap && cut < segs[i].t1 - kSnap) {
        Segment tail = segs[i];
        segs[i].t1 = cut;
        tail.t0 = cut;
        segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(i) + 1, tail);
        break;
      }
    }
  }
  return segs;
}

struct TraceRequest {
  double t0 = 0.0;
  double t1 = 0.0;
  int samples = 0;
};

struct CycleOutcome {
  DensityMatrix state = DensityMatrix::Zero();
  double emission = 0.0;
  std::map<double, DensityMatrix> at_cuts;
  Curve trace;
};

CycleOutcome run_cycle(DensityMatrix rho, const std::vector<Segment>& segs,
                       const SivParameters& params, const RotatingFrame& frame,
                       double tol, std::span<const double> cuts,
                       const TraceRequest* trace) {
  CycleOutcome out;
  const FreePropagator free(params, frame);
  for (const Segment& s : segs) {
    const double span = s.t1 - s.t0;
    if (span <= 0.0) continue;
    if (s.drives.empty()) {
      double emission = 0.0;
      rho = free.propagate(rho, span, &emission);
      out.emission += emission;
    } else {
      IntegratorOptions opt;
      opt.tol = tol;
      const bool want_trace =
          trace && s.t0 < trace->t1 && s.t1 > trace->t0 && trace->samples > 1;
      if (want_trace) {
        opt.samples = std::max(
            2, static_cast<int>(std::lround(trace->samples * span / (trace->t1 - trace->t0))));
      }
      Trajectory traj = integrate_segment(rho, params, frame, s.drives, s.t0, s.t1, opt);
      if (want_trace) {
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
          const double t = traj.times[k];
          if (t < trace->t0 || t > trace->t1) continue;
          const auto& st = traj.states[k];
          out.trace.x.push_back(t);
          out.trace.y.push_back(params.gamma_rad *
                                (st(2, 2).real() + st(3, 3).real()));
        }
      }
      out.emission += traj.emission_integral;
      rho = traj.states.back();
    }
    for (double cut : cuts) {
      if (std::abs(s.t1 - cut) <= 1e-15) out.at_cuts[cut] = rho;
    }
  }
  out.state = rho;
  return out;
}

// Iterates the repetition cycle until the period-to-period population change
// falls below the tolerance; returns the state at cycle start.
DensityMatrix converge_cycle(DensityMatrix rho, const std::vector<Segment>& segs,
                             const SivParameters& params, const RotatingFrame& frame,
                             const SequenceConfig& seq) {
  for (int cycle = 0; cycle < seq.max_cycles; ++cycle) {
    const CycleOutcome out = run_cycle(rho, segs, params, frame, seq.tol, {}, nullptr);
    double delta = 0.0;
    for (int i = 0; i < 4; ++i)
      delta = std::max(delta, std::abs(out.state(i, i).real() - rho(i, i).real()));
    rho = out.state;
    if (delta < seq.steady_state_tol) return rho;
  }
  throw IntegrationAccuracyError("repetition cycle did not reach a steady state");
}

// ---------------------------------------------------------------------------
// Deterministic parallel sweep: results land by index, worker scheduling has
// no influence on the output.

template <class F>
void parallel_sweep(std::size_t n, int threads_requested, F&& body) {
  int threads = threads_requested > 0
                    ? threads_requested
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::pair<std::size_t, std::exception_ptr>> errors(
      n, {0, nullptr});
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          errors[i] = {i, std::current_exception()};
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& [idx, err] : errors) {
    if (!err) continue;
    try {
      std::rethrow_exception(err);
    } catch (const SimulationError& e) {
      std::ostringstream msg;
      msg << "sweep point " << idx << ": " << e.what();
      throw NumericalError(msg.str());
    }
  }
}

// Peak Rabi frequency of the Raman pulse for a nominal two-photon area
// (lower lambda channel, Omega_C Omega_D / (2 Delta) integrated over the
// sech envelope).
double raman_peak_for_area(double area, double ratio, double detuning,
                           double amplitude_fwhm) {
  const double b = sech_rate(amplitude_fwhm);
  // area = ratio * peak^2 / (2 detuning) * (2 / b)
  return std::sqrt(area * detuning * b / ratio);
}

double raman_area_for_peak(double peak, double ratio, double detuning,
                           double amplitude_fwhm) {
  const double b = sech_rate(amplitude_fwhm);
  return ratio * peak * peak / (detuning * b);
}

PulseEnvelope raman_pulse(const SequenceConfig& seq, DriveRatio ratio, double peak,
                          double t_center, double phase = 0.0) {
  PulseEnvelope p;
  p.shape = PulseShape::Sech;
  p.duration_fwhm = amplitude_fwhm(PulseShape::Sech, seq.raman_pulse_length);
  p.peak_rabi = peak;
  p.reference = Transition::C;
  p.carrier_detuning = seq.raman_detuning;
  p.phase = phase;
  p.t_center = t_center;
  p.coupling[static_cast<int>(Transition::C)] = 1.0;
  p.coupling[static_cast<int>(Transition::D)] = ratio.r;
  if (seq.include_upper_lambda) {
    p.coupling[static_cast<int>(Transition::A)] = 1.0;
    p.coupling[static_cast<int>(Transition::B)] = ratio.r;
  }
  return p;
}

PulseEnvelope square_drive(Transition x, double rabi, double t_start, double duration) {
  PulseEnvelope p;
  p.shape = PulseShape::Square;
  p.duration_fwhm = duration;
  p.peak_rabi = rabi;
  p.reference = x;
  p.t_center = t_start + 0.5 * duration;
  p.coupling[static_cast<int>(x)] = 1.0;
  return p;
}

PulseEnvelope resonant_pulse(Transition x, const SequenceConfig& seq, double area,
                             double t_center, double phase = 0.0) {
  PulseEnvelope p;
  p.shape = PulseShape::DoubleExp;
  p.duration_fwhm = amplitude_fwhm(PulseShape::DoubleExp, seq.resonant_pulse_length);
  p.peak_rabi = peak_rabi_for_area(p.shape, p.duration_fwhm, area);
  p.reference = x;
  p.phase = phase;
  p.t_center = t_center;
  p.coupling[static_cast<int>(x)] = 1.0;
  return p;
}

struct RamanTimeline {
  double pump_end = 0.0;
  double raman_center = 0.0;
  double readout_start = 0.0;
  double readout_end = 0.0;
  double half_width = 0.0;  // Raman pulse support half width
};

RamanTimeline raman_timeline(const SequenceConfig& seq, double extra_delay = 0.0) {
  RamanTimeline tl;
  PulseEnvelope probe = raman_pulse(seq, seq.ratio, 0.0, 0.0);
  tl.half_width = probe.support_half_width();
  tl.pump_end = seq.pump_duration;
  tl.raman_center = tl.pump_end + seq.pre_raman_gap + tl.half_width;
  tl.readout_start = tl.raman_center + extra_delay + tl.half_width + seq.post_raman_gap;
  tl.readout_end = tl.readout_start + seq.readout_duration;
  return tl;
}

}  // namespace

double SequenceConfig::resolved_rabi_calib() const {
  if (rabi_calib > 0.0) return rabi_calib;
  const double fwhm = amplitude_fwhm(PulseShape::DoubleExp, resonant_pulse_length);
  const double peak = peak_rabi_for_area(PulseShape::DoubleExp, fwhm, pi);
  return peak * peak * 80e6 * fwhm / 1e-6;
}

double SequenceConfig::resolved_raman_calib() const {
  if (raman_calib > 0.0) return raman_calib;
  const double fwhm = amplitude_fwhm(PulseShape::Sech, raman_pulse_length);
  const double peak = raman_peak_for_area(pi, ratio.r, raman_detuning, fwhm);
  return peak * peak * 1e6 * fwhm / 4e-6;
}

void SequenceConfig::validate() const {
  if (!(rep_rate > 0.0)) throw ValidationError("rep_rate must be > 0");
  if (pump_duration < 0.0 || readout_duration < 0.0)
    throw ValidationError("pump and readout durations must be >= 0");
  if (pre_raman_gap < 0.0 || post_raman_gap < 0.0)
    throw ValidationError("inter-segment gaps must be >= 0");
  if (!(pump_rabi >= 0.0)) throw ValidationError("pump_rabi must be >= 0");
  if (!(collection_scale > 0.0)) throw ValidationError("collection_scale must be > 0");
  if (!(resonant_pulse_length > 0.0 && raman_pulse_length > 0.0))
    throw ValidationError("pulse lengths must be > 0");
  if (!(raman_detuning > 0.0)) throw ValidationError("raman_detuning must be > 0");
  ratio.validate();
  if (!(tol >= 1e-12 && tol <= 1e-4))
    throw ValidationError("tolerance must lie in [1e-12, 1e-4]");
}

namespace {

// Baseline removal mirroring the measurement analysis: the oscillation
// minima rise linearly with average power (incoherent transfer during the
// pulse plus any configured background), and the count traces are reported
// after subtracting a straight line fitted through the minima on the power
// axis.
std::vector<double> subtract_minima_baseline(std::span<const double> power_axis,
                                             std::span<const double> counts) {
  const std::vector<Extremum> ext = find_extrema(power_axis, counts);
  double a = 0.0, b = 0.0;
  std::vector<std::pair<double, double>> minima;
  for (const Extremum& e : ext) {
    if (!e.is_max) minima.emplace_back(e.x, e.y);
  }
  if (minima.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : minima) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(minima.size());
    my /= static_cast<double>(minima.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : minima) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    if (sxx > 0.0) {
      b = sxy / sxx;
      a = my - b * mx;
    }
  }
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = counts[i] - (a + b * power_axis[i]);
  return out;
}

}  // namespace

std::vector<Extremum> find_extrema(std::span<const double> x, std::span<const double> y) {
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    const bool is_max = y[i] > y[i - 1] && y[i] >= y[i + 1];
    const bool is_min = y[i] < y[i - 1] && y[i] <= y[i + 1];
    if (!is_max && !is_min) continue;
    // Parabolic refinement on the three neighbouring samples.
    const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
    double dx = 0.0;
    if (denom != 0.0) dx = 0.5 * (y[i - 1] - y[i + 1]) / denom;
    const double h = 0.5 * (x[i + 1] - x[i - 1]);
    Extremum e;
    e.x = x[i] + dx * h;
    e.y = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * dx;
    e.is_max = is_max;
    out.push_back(e);
  }
  return out;
}

double oscillation_visibility(std::span<const Extremum> extrema) {
  double vis = 1.0;
  bool any = false;
  for (std::size_t i = 0; i + 1 < extrema.size(); ++i) {
    const Extremum& a = extrema[i];
    const Extremum& b = extrema[i + 1];
    if (a.is_max == b.is_max) continue;
    const double hi = a.is_max ? a.y : b.y;
    const double lo = a.is_max ? b.y : a.y;
    if (hi + lo <= 0.0) continue;
    vis = std::min(vis, (hi - lo) / (hi + lo));
    any = true;
  }
  return any ? vis : 0.0;
}

ExperimentResult run_rabi_areas(Transition transition, std::span<const double> areas,
                                const SivParameters& params, const SequenceConfig& seq) {
  if (transition != Transition::B && transition != Transition::C)
    throw ValidationError("run_rabi drives transition B or C");
  params.validate();
  seq.validate();

  const double period = 1.0 / seq.rep_rate;
  PulseEnvelope probe = resonant_pulse(transition, seq, 0.0, 0.0);
  const double w = probe.support_half_width();
  if (2.0 * w >= period)
    throw ValidationError("pulse support does not fit in the repetition period");

  const RotatingFrame frame{transition_frequency(params, transition), 0};
  const DensityMatrix thermal = thermal_ground_state(params);

  std::vector<double> counts(areas.size());
  parallel_sweep(areas.size(), seq.threads, [&](std::size_t i) {
    PulseEnvelope pulse = resonant_pulse(transition, seq, areas[i], w);
    const std::vector<Segment> segs = plan_cycle({&pulse, 1}, period, {});
    DensityMatrix rho = thermal;
    if (seq.steady_state) rho = converge_cycle(rho, segs, params, frame, seq);
    const CycleOutcome out = run_cycle(rho, segs, params, frame, seq.tol, {}, nullptr);
    counts[i] = seq.collection_scale * out.emission;
  });

  ExperimentResult res;
  res.experiment = "rabi";
  res.columns = {"area_rad", "counts", "counts_minus_baseline"};
  std::vector<double> area_axis(areas.begin(), areas.end());

  // The average power grows as the square of the pulse area at fixed shape.
  std::vector<double> power_axis(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) power_axis[i] = areas[i] * areas[i];
  std::vector<double> subtracted = subtract_minima_baseline(power_axis, counts);
  res.data = {std::move(area_axis), counts, std::move(subtracted)};

  const std::vector<Extremum> extrema = find_extrema(res.data[0], counts);
  res.derived["num_extrema"] = static_cast<double>(extrema.size());
  if (!extrema.empty()) {
    for (const Extremum& e : extrema) {
      if (e.is_max) {
        res.derived["first_max_area_rad"] = e.x;
        break;
      }
    }
    res.derived["min_oscillation_visibility"] = oscillation_visibility(extrema);
  }
  const std::vector<Extremum> analysis = find_extrema(res.data[0], res.data[2]);
  if (!analysis.empty())
    res.derived["analysis_visibility"] = oscillation_visibility(analysis);
  res.derived["transition"] = static_cast<double>(transition);
  return res;
}

ExperimentResult run_rabi(Transition transition, std::span<const double> powers,
                          const SivParameters& params, const SequenceConfig& seq) {
  const double calib = seq.resolved_rabi_calib();
  const double fwhm = amplitude_fwhm(PulseShape::DoubleExp, seq.resonant_pulse_length);
  std::vector<double> areas(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (powers[i] < 0.0) throw ValidationError("powers must be >= 0");
    areas[i] = power_to_area(powers[i], seq.rep_rate, PulseShape::DoubleExp, fwhm, calib);
  }
  ExperimentResult res = run_rabi_areas(transition, areas, params, seq);
  std::vector<double> counts = std::move(res.data[1]);
  for (std::size_t i = 0; i < powers.size(); ++i)
    counts[i] += seq.background_slope * powers[i];
  // Re-fit the baseline on the actual power axis, now including the
  // configured background slope.
  std::vector<double> subtracted = subtract_minima_baseline(powers, counts);
  const std::vector<Extremum> analysis = find_extrema(res.data[0], subtracted);
  if (!analysis.empty())
    res.derived["analysis_visibility"] = oscillation_visibility(analysis);

  std::vector<std::vector<double>> data;
  data.emplace_back(powers.begin(), powers.end());
  data.push_back(std::move(res.data[0]));
  data.push_back(std::move(counts));
  data.push_back(std::move(subtracted));
  res.columns = {"power_w", "area_rad", "counts", "counts_minus_baseline"};
  res.data = std::move(data);
  return res;
}

ExperimentResult run_ramsey_optical(Transition transition,
                                    std::span<const double> delays,
                                    const SivParameters& params,
                                    const SequenceConfig& seq) {
  if (transition != Transition::B && transition != Transition::C)
    throw ValidationError("run_ramsey_optical drives transition B or C");
  params.validate();
  seq.validate();

  const double period = 1.0 / seq.rep_rate;
  PulseEnvelope probe = resonant_pulse(transition, seq, 0.0, 0.0);
  const double w = probe.support_half_width();
  const double fwhm = probe.duration_fwhm;
  for (double d : delays) {
    if (d < fwhm)
      throw ValidationError("Ramsey delays must be at least one pulse FWHM");
    if (w + d + w >= period)
      throw ValidationError("Ramsey sequence does not fit in the repetition period");
  }

  const RotatingFrame frame{transition_frequency(params, transition), 0};
  const DensityMatrix thermal = thermal_ground_state(params);

  // Each (delay, phase) point starts from the thermal state. At 80 MHz the
  // converged pulse train couples the envelope amplitudes to delay-dependent
  // steady-state populations (and lets coherence wrap around the repetition
  // period), which biases the extracted coherence time by several percent;
  // initialized cycles measure the bare coherence decay.
  std::vector<double> upper(delays.size()), lower(delays.size());
  parallel_sweep(delays.size(), seq.threads, [&](std::size_t i) {
    double signal[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
      const double phase2 = k == 0 ? 0.0 : pi;
      PulseEnvelope p1 = resonant_pulse(transition, seq, 0.5 * pi, w);
      PulseEnvelope p2 = resonant_pulse(transition, seq, 0.5 * pi, w + delays[i], phase2);
      const std::vector<PulseEnvelope> pulses = {p1, p2};
      const std::vector<Segment> segs = plan_cycle(pulses, period, {});
      const CycleOutcome out = run_cycle(thermal, segs, params, frame, seq.tol, {}, nullptr);
      signal[k] = seq.collection_scale * out.emission;
    }
    upper[i] = std::max(signal[0], signal[1]);
    lower[i] = std::min(signal[0], signal[1]);
  });

  const std::vector<double> visibility = extract_visibility(upper, lower);

  ExperimentResult res;
  res.experiment = "ramsey";
  res.columns = {"delay_ps", "upper_counts", "lower_counts", "visibility"};
  std::vector<double> delay_ps(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) delay_ps[i] = delays[i] * 1e12;
  res.data = {delay_ps, upper, lower, visibility};

  // T2* from the fringe amplitude (upper - lower), which decays at the bare
  // coherence rate. The visibility normalization (upper + lower) carries a
  // slow incoherent transient that settles on the emission timescale; the
  // plain visibility fit over the settled window is reported alongside.
  std::vector<double> diff(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) diff[i] = upper[i] - lower[i];
  const ExpDecayFit fit = fit_exponential_decay(delays, diff);
  res.derived["t2_star_ps"] = fit.time_constant * 1e12;
  res.derived["linewidth_mhz"] = 1e-6 / (two_pi * fit.time_constant);
  res.derived["fringe_fit_amplitude"] = fit.amplitude;
  res.derived["fit_residual_norm"] = fit.residual_norm;

  const double excited_out = params.gamma_rad + (excited_index(transition) == 2
                                                     ? params.gamma_e_up
                                                     : params.gamma_e_down);
  const double settle = 5.0 / excited_out;
  std::vector<double> fit_t, fit_v;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] >= settle) {
      fit_t.push_back(delays[i]);
      fit_v.push_back(visibility[i]);
    }
  }
  if (fit_t.size() >= 4) {
    const ExpDecayFit vis_fit = fit_exponential_decay(fit_t, fit_v);
    res.derived["visibility_fit_t2_star_ps"] = vis_fit.time_constant * 1e12;
    res.derived["visibility_fit_window_start_ps"] = settle * 1e12;
  }
  res.derived["transition"] = static_cast<double>(transition);
  return res;
}

ExperimentResult run_pump(const SivParameters& params, const SequenceConfig& seq,
                          double duration) {
  params.validate();
  seq.validate();
  if (!(duration > 0.0)) throw ValidationError("pump duration must be > 0");

  const RotatingFrame frame{transition_frequency(params, Transition::D), 0};
  PulseEnvelope drive = square_drive(Transition::D, seq.pump_rabi, 0.0, duration);

  IntegratorOptions opt;
  opt.tol = seq.tol;
  opt.samples = 400;
  const Trajectory traj = integrate_segment(thermal_ground_state(params), params, frame,
                                            {&drive, 1}, 0.0, duration, opt);

  ExperimentResult res;
  res.experiment = "pump";
  res.columns = {"time_ns", "population_upper_ground"};
  std::vector<double> t_ns(traj.times.size()), rho22(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    t_ns[i] = traj.times[i] * 1e9;
    rho22[i] = traj.states[i](1, 1).real();
  }
  res.data = {t_ns, rho22};
  res.derived["floor_population"] = rho22.back();
  res.derived["thermal_population"] = thermal_ground_state(params)(1, 1).real();
  res.derived["pump_rabi_rad_per_s"] = seq.pump_rabi;
  return res;
}

namespace {

struct RamanPointResult {
  double rho22 = 0.0;
  double edge_counts = 0.0;
  double pump_floor = 0.0;
  Curve trace;
};

RamanPointResult run_raman_point(const std::vector<PulseEnvelope>& raman_pulses,
                                 const RamanTimeline& tl, const SivParameters& params,
                                 const SequenceConfig& seq, bool want_trace) {
  const double period = 1.0 / seq.rep_rate;
  if (tl.readout_end >= period)
    throw ValidationError("Raman sequence does not fit in the repetition period");

  std::vector<PulseEnvelope> pulses = raman_pulses;
  pulses.push_back(square_drive(Transition::D, seq.pump_rabi, 0.0, seq.pump_duration));
  pulses.push_back(
      square_drive(Transition::D, seq.pump_rabi, tl.readout_start, seq.readout_duration));

  const RotatingFrame frame{transition_frequency(params, Transition::D), 0};
  const double cuts_arr[2] = {tl.pump_end, tl.readout_start};
  const std::vector<Segment> segs = plan_cycle(pulses, period, cuts_arr);

  DensityMatrix rho = thermal_ground_state(params);
  if (seq.steady_state) rho = converge_cycle(rho, segs, params, frame, seq);

  TraceRequest trace;
  trace.t0 = tl.readout_start;
  trace.t1 = tl.readout_end;
  trace.samples = 400;
  const CycleOutcome out =
      run_cycle(rho, segs, params, frame, seq.tol, cuts_arr, &trace);

  RamanPointResult res;
  res.rho22 = out.at_cuts.at(tl.readout_start)(1, 1).real();
  res.pump_floor = out.at_cuts.at(tl.pump_end)(1, 1).real();

  // Rising-edge estimate: peak fluorescence rate over the first stretch of
  // the readout, before pumping and thermalization erase the population.
  const double edge_window = std::min(20e-9, 0.25 * seq.readout_duration);
  double peak_rate = 0.0;
  for (std::size_t k = 0; k < out.trace.x.size(); ++k) {
    if (out.trace.x[k] <= tl.readout_start + edge_window)
      peak_rate = std::max(peak_rate, out.trace.y[k]);
  }
  res.edge_counts = seq.collection_scale * peak_rate;
  if (want_trace) res.trace = out.trace;
  return res;
}

}  // namespace

ExperimentResult run_raman_rabi_areas(std::span<const double> areas, DriveRatio ratio,
                                      const SivParameters& params,
                                      const SequenceConfig& seq) {
  params.validate();
  seq.validate();
  ratio.validate();

  const RamanTimeline tl = raman_timeline(seq);
  const double fwhm = amplitude_fwhm(PulseShape::Sech, seq.raman_pulse_length);

  std::vector<double> rho22(areas.size()), edges(areas.size()), floors(areas.size());
  std::vector<Curve> traces(areas.size());
  parallel_sweep(areas.size(), seq.threads, [&](std::size_t i) {
    std::vector<PulseEnvelope> pulses;
    if (areas[i] > 0.0) {
      const double peak =
          raman_peak_for_area(areas[i], ratio.r, seq.raman_detuning, fwhm);
      pulses.push_back(raman_pulse(seq, ratio, peak, tl.raman_center));
    }
    const bool want_trace = i == 0 || i + 1 == areas.size();
    const RamanPointResult point = run_raman_point(pulses, tl, params, seq, want_trace);
    rho22[i] = point.rho22;
    edges[i] = point.edge_counts;
    floors[i] = point.pump_floor;
    if (want_trace) traces[i] = point.trace;
  });

  ExperimentResult res;
  res.experiment = "raman-rabi";
  res.columns = {"two_photon_area_rad", "population_upper_ground", "readout_edge_counts"};
  res.data = {std::vector<double>(areas.begin(), areas.end()), rho22, edges};
  res.derived["pump_floor_population"] = floors.empty() ? 0.0 : floors.front();
  res.derived["drive_ratio"] = ratio.r;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (!traces[i].x.empty()) {
      Curve c = traces[i];
      std::ostringstream name;
      name << "readout_trace_area_" << areas[i];
      c.name = name.str();
      res.extras.push_back(std::move(c));
    }
  }
  return res;
}

ExperimentResult run_raman_rabi(std::span<const double> powers, DriveRatio ratio,
                                const SivParameters& params, const SequenceConfig& seq) {
  const double calib = seq.resolved_raman_calib();
  const double fwhm = amplitude_fwhm(PulseShape::Sech, seq.raman_pulse_length);
  std::vector<double> areas(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (powers[i] < 0.0) throw ValidationError("powers must be >= 0");
    const double peak2 = calib * powers[i] / (seq.rep_rate * fwhm);
    areas[i] = raman_area_for_peak(std::sqrt(peak2), ratio.r, seq.raman_detuning, fwhm);
  }
  ExperimentResult res = run_raman_rabi_areas(areas, ratio, params, seq);
  res.columns = {"power_w", "two_photon_area_rad", "population_upper_ground",
                 "readout_edge_counts"};
  res.data.insert(res.data.begin(), std::vector<double>(powers.begin(), powers.end()));
  return res;
}

ExperimentResult run_raman_ramsey(std::span<const double> delays, DriveRatio ratio,
                                  const SivParameters& params, const SequenceConfig& seq) {
  params.validate();
  seq.validate();
  ratio.validate();

  const double fwhm = amplitude_fwhm(PulseShape::Sech, seq.raman_pulse_length);
  const double peak = raman_peak_for_area(0.5 * pi, ratio.r, seq.raman_detuning, fwhm);

  std::vector<double> rho22(delays.size()), floors(delays.size());
  parallel_sweep(delays.size(), seq.threads, [&](std::size_t i) {
    if (delays[i] < 0.0) throw ValidationError("delays must be >= 0");
    const RamanTimeline tl = raman_timeline(seq, delays[i]);
    std::vector<PulseEnvelope> pulses = {
        raman_pulse(seq, ratio, peak, tl.raman_center),
        raman_pulse(seq, ratio, peak, tl.raman_center + delays[i]),
    };
    const RamanPointResult point = run_raman_point(pulses, tl, params, seq, false);
    rho22[i] = point.rho22;
    floors[i] = point.pump_floor;
  });

  ExperimentResult res;
  res.experiment = "raman-ramsey";
  res.columns = {"delay_ps", "population_upper_ground"};
  std::vector<double> delay_ps(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) delay_ps[i] = delays[i] * 1e12;
  res.data = {delay_ps, rho22};
  res.derived["pump_floor_population"] = floors.empty() ? 0.0 : floors.front();
  res.derived["drive_ratio"] = ratio.r;

  // Fit the fringe where the pulses no longer overlap, so the phase accrues
  // by free ground-state precession alone.
  const double overlap_end = 2.0 * raman_timeline(seq).half_width;
  std::vector<double> fit_t, fit_p;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] >= overlap_end) {
      fit_t.push_back(delays[i]);
      fit_p.push_back(rho22[i]);
    }
  }
  if (fit_t.size() < 8) {
    fit_t.assign(delays.begin(), delays.end());
    fit_p = rho22;
  }
  const SinusoidFit fit = fit_sinusoid(fit_t, fit_p, params.delta_g / two_pi);
  res.derived["fringe_frequency_ghz"] = fit.frequency * 1e-9;
  res.derived["fringe_amplitude"] = fit.amplitude;
  res.derived["fringe_offset"] = fit.offset;
  res.derived["min_population"] = *std::min_element(rho22.begin(), rho22.end());
  return res;
}

}  // namespace siv
