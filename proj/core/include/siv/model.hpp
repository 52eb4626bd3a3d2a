#ifndef SIV_MODEL_HPP
#define SIV_MODEL_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "siv/constants.hpp"
#include "siv/pulses.hpp"
#include "siv/transition.hpp"

namespace siv {

using DensityMatrix = Eigen::Matrix4cd;

// Reference frame for a driven segment: all optical coherences rotate at the
// laser frequency of the segment's active beam.
struct RotatingFrame {
  double laser_frequency_hz = 0.0;
  int segment_id = 0;
};

// All physical rates and splittings of the four-level orbital model.
// Angular quantities are rad/s, plain rates 1/s.
struct SivParameters {
  double delta_g = two_pi * 48e9;    // ground orbital splitting
  double delta_e = two_pi * 259e9;   // excited orbital splitting
  double zpl_frequency = 406.8e12;   // Hz, optical carrier of transition C
  double gamma_rad = 1.0 / 1.7e-9;   // radiative decay of each excited state
  Eigen::Matrix2d branching = Eigen::Matrix2d::Constant(0.5);  // row: excited state, col: ground state
  double gamma_g_down = 0.0;         // phonon decay, upper -> lower ground
  double gamma_g_up = 0.0;           // phonon excitation, lower -> upper ground
  double gamma_e_down = 0.0;         // phonon decay, upper -> lower excited
  double gamma_e_up = 0.0;           // phonon excitation, lower -> upper excited
  double gamma_pure = two_pi * 160e6;  // pure dephasing of the excited manifold
  double temperature = 5.0;          // K

  // Parameter set calibrated to the measured observables (35 ns orbital
  // relaxation, 578 ps / 279 ps coherence times, 160 MHz pure dephasing, 5 K).
  static SivParameters defaults();

  void validate() const;
};

// Measured quantities the model rates are solved from.
struct ModelObservables {
  double t1_orbit = 35e-9;           // s, ground orbital relaxation time
  double t2_star_lower = 578e-12;    // s, coherence time of rho(1,3)
  double t2_star_upper = 279e-12;    // s, coherence time of rho(2,4)
  double gamma_pure = two_pi * 160e6;
  double temperature = 5.0;
  double gamma_rad = 1.0 / 1.7e-9;
  Eigen::Matrix2d branching = Eigen::Matrix2d::Constant(0.5);
  double delta_g = two_pi * 48e9;
  double delta_e = two_pi * 259e9;
  double zpl_frequency = 406.8e12;
};

// Boltzmann occupation ratio exp(-hbar*delta / (kB*T)) of two levels split
// by `delta` (rad/s) at temperature T.
double boltzmann_factor(double delta, double temperature);

// Solves the thermalization and dephasing rates from the observables:
//   gamma_g_up + gamma_g_down = 1/t1_orbit with the detailed-balance ratio,
//   gamma_e_up   from the rho(1,3) coherence-decay budget (t2_star_lower),
//   gamma_e_down from the rho(2,4) coherence-decay budget (t2_star_upper).
// Throws ConstraintInfeasibleError naming the violated relation when a
// solved rate would be negative.
SivParameters params_from_observables(const ModelObservables& obs);

// Optical frequency of a transition, Hz.
double transition_frequency(const SivParameters& p, Transition x);

// Analytic decay rate of the coherence rho(i,j) under the drive-free
// dissipators (1/s). i, j are zero-based level indices.
double coherence_decay_rate(const SivParameters& p, int i, int j);

// Thermal state of the ground manifold at p.temperature; excited levels are
// unpopulated (optical quantum >> kB T).
DensityMatrix thermal_ground_state(const SivParameters& p);

// Static diagonal of the rotating-frame Hamiltonian, rad/s:
//   (0, delta_g, Delta_C, Delta_C + delta_e)
// with Delta_C = omega_C - omega_laser the frame detuning from transition C.
Eigen::Vector4d frame_hamiltonian_diagonal(const SivParameters& p,
                                           const RotatingFrame& frame);

// Full rotating-frame Hamiltonian at time t (rad/s): the static diagonal
// plus, for every coupled transition X of every active pulse, off-diagonal
// elements Omega_X(t)/2 * exp(i(mu t + phase)) where mu is the pulse
// carrier's offset from the frame laser. Hermitian by construction.
Eigen::Matrix4cd hamiltonian(const SivParameters& p,
                             std::span<const PulseEnvelope> drives,
                             const RotatingFrame& frame, double t);

struct JumpOperator {
  Eigen::Matrix4cd op;
  double rate = 0.0;  // 1/s
};

// Lindblad jump operators: radiative decay of both excited states with the
// branching fractions, phonon thermalization within each manifold, and a
// pure-dephasing projector onto the excited manifold. Channels with zero
// rate are omitted.
std::vector<JumpOperator> dissipators(const SivParameters& p);

namespace density {

bool is_hermitian(const DensityMatrix& m, double tol = 1e-12);
double trace_error(const DensityMatrix& m);
double min_eigenvalue(const DensityMatrix& m);

// Throws ValidationError when the Hermiticity / unit-trace / positivity
// invariants are violated.
void check_physical(const DensityMatrix& m, double herm_tol = 1e-12,
                    double trace_tol = 1e-9, double eig_floor = -1e-8);

}  // namespace density

}  // namespace siv

#endif
