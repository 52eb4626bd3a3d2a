#include <benchmark/benchmark.h>

#include "siv/engine.hpp"
#include "siv/sequences.hpp"

namespace {

using namespace siv;

PulseEnvelope raman_pulse() {
  PulseEnvelope p;
  p.shape = PulseShape::Sech;
  p.duration_fwhm = 1.5e-12;
  p.peak_rabi = 8e11;
  p.reference = Transition::C;
  p.carrier_detuning = two_pi * 500e9;
  p.t_center = 12e-12;
  p.coupling = {1.0, 0.7, 1.0, 0.7};
  return p;
}

void BM_RamanPulseSegment(benchmark::State& state) {
  const SivParameters params = SivParameters::defaults();
  const RotatingFrame frame{transition_frequency(params, Transition::D), 0};
  const PulseEnvelope pulse = raman_pulse();
  const DensityMatrix rho = thermal_ground_state(params);
  for (auto _ : state) {
    const Trajectory traj =
        integrate_segment(rho, params, frame, {&pulse, 1}, 0.0, 24e-12, {});
    benchmark::DoNotOptimize(traj.emission_integral);
  }
}
BENCHMARK(BM_RamanPulseSegment);

void BM_PumpSegment(benchmark::State& state) {
  const SivParameters params = SivParameters::defaults();
  const RotatingFrame frame{transition_frequency(params, Transition::D), 0};
  PulseEnvelope drive;
  drive.shape = PulseShape::Square;
  drive.duration_fwhm = 200e-9;
  drive.peak_rabi = two_pi * 62.3e6;
  drive.reference = Transition::D;
  drive.t_center = 100e-9;
  drive.coupling[static_cast<int>(Transition::D)] = 1.0;
  const DensityMatrix rho = thermal_ground_state(params);
  for (auto _ : state) {
    const Trajectory traj =
        integrate_segment(rho, params, frame, {&drive, 1}, 0.0, 200e-9, {});
    benchmark::DoNotOptimize(traj.emission_integral);
  }
}
BENCHMARK(BM_PumpSegment);

void BM_FreePropagate(benchmark::State& state) {
  const SivParameters params = SivParameters::defaults();
  const RotatingFrame frame{params.zpl_frequency, 0};
  const FreePropagator prop(params, frame);
  DensityMatrix rho = thermal_ground_state(params);
  rho(0, 2) = rho(2, 0) = 0.1;
  for (auto _ : state) {
    double emission = 0.0;
    benchmark::DoNotOptimize(prop.propagate(rho, 12.5e-9, &emission));
  }
}
BENCHMARK(BM_FreePropagate);

void BM_RabiSweepPoint(benchmark::State& state) {
  const SivParameters params = SivParameters::defaults();
  SequenceConfig seq;
  seq.threads = 1;
  const std::vector<double> areas = {pi};
  for (auto _ : state) {
    const ExperimentResult res = run_rabi_areas(Transition::C, areas, params, seq);
    benchmark::DoNotOptimize(res.data[1][0]);
  }
}
BENCHMARK(BM_RabiSweepPoint);

}  // namespace

BENCHMARK_MAIN();
