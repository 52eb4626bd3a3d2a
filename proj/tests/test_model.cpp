#include <cmath>
#include <complex>

#include "doctest.h"
#include "siv/engine.hpp"
#include "siv/model.hpp"

using namespace siv;

namespace {

// Independent scalar evaluation of the detailed-balance factor.
double boltzmann_oracle(double delta_rad_per_s, double temperature) {
  const double hbar_ref = 1.054571817e-34;
  const double kb_ref = 1.380649e-23;
  return std::exp(-hbar_ref * delta_rad_per_s / (kb_ref * temperature));
}

SivParameters closed_system() {
  SivParameters p;
  p.gamma_rad = 0.0;
  p.gamma_pure = 0.0;
  return p;
}

}  // namespace

TEST_CASE("detailed balance of the calibrated ground manifold") {
  const SivParameters p = SivParameters::defaults();
  const double total = p.gamma_g_up + p.gamma_g_down;
  CHECK(total == doctest::Approx(1.0 / 35e-9).epsilon(1e-12));
  const double expected = boltzmann_oracle(two_pi * 48e9, 5.0);
  CHECK(expected == doctest::Approx(0.631).epsilon(2e-3));
  CHECK(p.gamma_g_up / p.gamma_g_down == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("infinite-temperature limit of the thermal ratio") {
  ModelObservables obs;
  obs.temperature = 1e6;
  const SivParameters p = params_from_observables(obs);
  CHECK(p.gamma_g_up / p.gamma_g_down == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("coherence-decay budgets reproduce both T2* inputs") {
  const SivParameters p = SivParameters::defaults();
  // rho(1,3): 1/t2 = (gamma_g_up + gamma_e_up + gamma_rad + gamma_pure)/2.
  CHECK(coherence_decay_rate(p, 0, 2) == doctest::Approx(1.0 / 578e-12).epsilon(1e-12));
  CHECK(coherence_decay_rate(p, 1, 3) == doctest::Approx(1.0 / 279e-12).epsilon(1e-12));
  CHECK(p.gamma_e_up >= 0.0);
  CHECK(p.gamma_e_down > p.gamma_e_up);  // rapid decay into the lower state
}

TEST_CASE("observable solver rejects infeasible constraint sets") {
  ModelObservables obs;
  obs.t2_star_lower = 2e-9;  // longer than the dephasing-only limit
  obs.t2_star_upper = 1.9e-9;
  CHECK_THROWS_WITH_AS(static_cast<void>(params_from_observables(obs)),
                       doctest::Contains("gamma_e_up"), ConstraintInfeasibleError);

  ModelObservables swapped;
  swapped.t2_star_lower = 279e-12;
  swapped.t2_star_upper = 578e-12;
  CHECK_THROWS_AS(static_cast<void>(params_from_observables(swapped)), ValidationError);
}

TEST_CASE("transition frequency ordering") {
  const SivParameters p = SivParameters::defaults();
  const double fa = transition_frequency(p, Transition::A);
  const double fb = transition_frequency(p, Transition::B);
  const double fc = transition_frequency(p, Transition::C);
  const double fd = transition_frequency(p, Transition::D);
  CHECK(fa == doctest::Approx(fc + p.delta_e / two_pi).epsilon(1e-15));
  CHECK(fb == doctest::Approx(fa - p.delta_g / two_pi).epsilon(1e-15));
  CHECK(fd == doctest::Approx(fc - p.delta_g / two_pi).epsilon(1e-15));
  CHECK(fa > fb);
  CHECK(fb > fc);
  CHECK(fc > fd);
}

TEST_CASE("bare Hamiltonian diagonal in the transition-C frame") {
  const SivParameters p = SivParameters::defaults();
  const RotatingFrame frame{transition_frequency(p, Transition::C), 0};
  const Eigen::Matrix4cd h = hamiltonian(p, {}, frame, 0.0);
  CHECK(std::abs(h(0, 0)) < 1e-3);
  CHECK(h(1, 1).real() == doctest::Approx(p.delta_g).epsilon(1e-12));
  CHECK(std::abs(h(2, 2)) < 1e-3);
  CHECK(h(3, 3).real() == doctest::Approx(p.delta_e).epsilon(1e-12));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(h(i, j)) == 0.0);
}

TEST_CASE("resonant drive fills the coupled off-diagonal") {
  const SivParameters p = SivParameters::defaults();
  const RotatingFrame frame{transition_frequency(p, Transition::C), 0};
  PulseEnvelope drive;
  drive.shape = PulseShape::Square;
  drive.duration_fwhm = 1e-9;
  drive.peak_rabi = 2e9;
  drive.reference = Transition::C;
  drive.coupling[static_cast<int>(Transition::C)] = 1.0;
  const Eigen::Matrix4cd h = hamiltonian(p, {&drive, 1}, frame, 0.0);
  CHECK(h(0, 2).real() == doctest::Approx(1e9).epsilon(1e-12));
  CHECK(h(2, 0).real() == doctest::Approx(1e9).epsilon(1e-12));
  CHECK(std::abs(h(0, 3)) == 0.0);
}

TEST_CASE("red-detuned Raman frame detunings") {
  const SivParameters p = SivParameters::defaults();
  const double delta = two_pi * 500e9;
  const RotatingFrame frame{transition_frequency(p, Transition::C) - delta / two_pi, 0};
  const Eigen::Matrix4cd h = hamiltonian(p, {}, frame, 0.0);
  CHECK(h(2, 2).real() == doctest::Approx(two_pi * 500e9).epsilon(1e-9));
  CHECK(h(3, 3).real() == doctest::Approx(two_pi * 759e9).epsilon(1e-9));
}

TEST_CASE("Hamiltonian is Hermitian for arbitrary drives and times") {
  const SivParameters p = SivParameters::defaults();
  const RotatingFrame frame{p.zpl_frequency - 123e9, 0};
  PulseEnvelope drive;
  drive.shape = PulseShape::Sech;
  drive.duration_fwhm = 1.5e-12;
  drive.peak_rabi = 5e11;
  drive.reference = Transition::C;
  drive.carrier_detuning = two_pi * 500e9;
  drive.phase = 0.7;
  drive.t_center = 10e-12;
  drive.coupling = {1.0, 0.7, 1.0, 0.7};
  for (int i = 0; i <= 20; ++i) {
    const double t = i * 1e-12;
    const Eigen::Matrix4cd h = hamiltonian(p, {&drive, 1}, frame, t);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("dissipator channel bookkeeping") {
  SUBCASE("all rates zero give an empty list") {
    SivParameters p = closed_system();
    CHECK(dissipators(p).empty());
  }

  SUBCASE("ground thermalization pair sums to 1/T1") {
    const SivParameters p = SivParameters::defaults();
    const auto jumps = dissipators(p);
    double down = 0.0, up = 0.0;
    for (const auto& j : jumps) {
      if (std::abs(j.op(0, 1)) == 1.0 && j.op.cwiseAbs().sum() == 1.0) down = j.rate;
      if (std::abs(j.op(1, 0)) == 1.0 && j.op.cwiseAbs().sum() == 1.0) up = j.rate;
    }
    CHECK(down + up == doctest::Approx(1.0 / 35e-9).epsilon(1e-12));
  }

  SUBCASE("rate-weighted L+L reproduces the analytic coherence decay") {
    const SivParameters p = SivParameters::defaults();
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    double projector_rate = 0.0;
    for (const auto& j : dissipators(p)) {
      if (j.op.diagonal().cwiseAbs().sum() > 1.5) {
        projector_rate = j.rate;  // excited-manifold dephasing projector
        continue;
      }
      m += j.rate * (j.op.adjoint() * j.op);
    }
    const double out1 = m(0, 0).real();
    const double out3 = m(2, 2).real();
    CHECK(0.5 * (out1 + out3) + 0.5 * projector_rate ==
          doctest::Approx(coherence_decay_rate(p, 0, 2)).epsilon(1e-12));
    const double out2 = m(1, 1).real();
    const double out4 = m(3, 3).real();
    CHECK(0.5 * (out2 + out4) + 0.5 * projector_rate ==
          doctest::Approx(coherence_decay_rate(p, 1, 3)).epsilon(1e-12));
  }
}

TEST_CASE("thermal ground state populations") {
  const SivParameters p = SivParameters::defaults();
  const DensityMatrix rho = thermal_ground_state(p);
  const double beta = boltzmann_oracle(p.delta_g, p.temperature);
  CHECK(rho(1, 1).real() == doctest::Approx(beta / (1.0 + beta)).epsilon(1e-12));
  CHECK(rho(1, 1).real() == doctest::Approx(0.387).epsilon(2e-3));
  CHECK(rho(0, 0).real() + rho(1, 1).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(rho(2, 2)) == 0.0);
}

TEST_CASE("zero-drive fixed point is the Boltzmann mixture") {
  const SivParameters p = SivParameters::defaults();
  const RotatingFrame frame{p.zpl_frequency, 0};
  DensityMatrix rho = DensityMatrix::Zero();
  rho(0, 0) = 1.0;
  const Trajectory traj = integrate_segment(rho, p, frame, {}, 0.0, 700e-9, {});
  const DensityMatrix& final = traj.states.back();
  const double ratio = final(1, 1).real() / final(0, 0).real();
  CHECK(ratio == doctest::Approx(boltzmann_oracle(p.delta_g, 5.0)).epsilon(1e-6));
}

TEST_CASE("density matrix invariant helpers") {
  const SivParameters p = SivParameters::defaults();
  DensityMatrix rho = thermal_ground_state(p);
  CHECK(density::is_hermitian(rho));
  CHECK(density::trace_error(rho) <= 1e-15);
  CHECK(density::min_eigenvalue(rho) >= -1e-15);
  CHECK_NOTHROW(density::check_physical(rho));

  rho(0, 1) = std::complex<double>(0.0, 0.9);
  rho(1, 0) = std::complex<double>(0.0, -0.9);  // Hermitian but not PSD
  CHECK_THROWS_AS(density::check_physical(rho), ValidationError);
}

TEST_CASE("parameter validation") {
  SivParameters p = SivParameters::defaults();
  p.delta_e = p.delta_g * 0.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);

  p = SivParameters::defaults();
  p.gamma_g_up *= 1.001;  // breaks detailed balance
  CHECK_THROWS_AS(p.validate(), ValidationError);

  p = SivParameters::defaults();
  p.branching(0, 0) = 0.7;  // row no longer sums to 1
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
