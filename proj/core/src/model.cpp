#include "siv/model.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "siv/errors.hpp"

namespace siv {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace

double boltzmann_factor(double delta, double temperature) {
  return std::exp(-hbar * delta / (k_boltzmann * temperature));
}

SivParameters SivParameters::defaults() {
  return params_from_observables(ModelObservables{});
}

void SivParameters::validate() const {
  require(delta_g > 0.0 && delta_e > delta_g, "require delta_e > delta_g > 0");
  require(zpl_frequency > 0.0, "zpl_frequency must be > 0");
  require(gamma_rad >= 0.0, "gamma_rad must be >= 0");
  require(gamma_g_down >= 0.0 && gamma_g_up >= 0.0, "ground thermalization rates must be >= 0");
  require(gamma_e_down >= 0.0 && gamma_e_up >= 0.0, "excited thermalization rates must be >= 0");
  require(gamma_pure >= 0.0, "gamma_pure must be >= 0");
  require(temperature > 0.0, "temperature must be > 0");
  for (int r = 0; r < 2; ++r) {
    double row = 0.0;
    for (int c = 0; c < 2; ++c) {
      require(branching(r, c) >= 0.0, "branching fractions must be >= 0");
      row += branching(r, c);
    }
    require(std::abs(row - 1.0) <= 1e-12, "branching rows must sum to 1");
  }
  // Detailed balance of the ground thermalization pair. The excited pair is
  // not constrained here: its rates are pinned by the two measured coherence
  // times instead (see params_from_observables).
  if (gamma_g_down > 0.0 && gamma_g_up > 0.0) {
    const double expected = boltzmann_factor(delta_g, temperature);
    const double actual = gamma_g_up / gamma_g_down;
    require(std::abs(actual / expected - 1.0) <= 1e-9,
            "ground thermalization rates violate detailed balance");
  }
}

SivParameters params_from_observables(const ModelObservables& obs) {
  if (!(obs.t1_orbit > 0.0 && obs.t2_star_lower > 0.0 && obs.t2_star_upper > 0.0))
    throw ValidationError("t1_orbit and both t2_star values must be > 0");
  if (!(obs.t2_star_upper < obs.t2_star_lower))
    throw ValidationError("require t2_star_upper < t2_star_lower");
  if (!(obs.temperature > 0.0)) throw ValidationError("temperature must be > 0");
  if (!(obs.gamma_rad >= 0.0 && obs.gamma_pure >= 0.0))
    throw ValidationError("gamma_rad and gamma_pure must be >= 0");

  SivParameters p;
  p.delta_g = obs.delta_g;
  p.delta_e = obs.delta_e;
  p.zpl_frequency = obs.zpl_frequency;
  p.gamma_rad = obs.gamma_rad;
  p.branching = obs.branching;
  p.gamma_pure = obs.gamma_pure;
  p.temperature = obs.temperature;

  // Ground pair: rate sum 1/T1 split by the Boltzmann ratio.
  const double beta_g = boltzmann_factor(obs.delta_g, obs.temperature);
  const double total_g = 1.0 / obs.t1_orbit;
  p.gamma_g_down = total_g / (1.0 + beta_g);
  p.gamma_g_up = total_g * beta_g / (1.0 + beta_g);

  // Coherence budgets. rho(1,3) decays at (gamma_g_up + gamma_e_up +
  // gamma_rad + gamma_pure)/2 and rho(2,4) at (gamma_g_down + gamma_e_down +
  // gamma_rad + gamma_pure)/2; the phonon rates of the excited manifold are
  // the remaining unknowns. The faster upper-state decoherence is carried by
  // a large gamma_e_down (rapid decay into the lower excited state).
  p.gamma_e_up = 2.0 / obs.t2_star_lower - p.gamma_g_up - obs.gamma_rad - obs.gamma_pure;
  if (p.gamma_e_up < 0.0) {
    std::ostringstream msg;
    msg << "infeasible constraints: gamma_e_up = 2/t2_star_lower - gamma_g_up"
           " - gamma_rad - gamma_pure = "
        << p.gamma_e_up << " < 0";
    throw ConstraintInfeasibleError(msg.str());
  }
  p.gamma_e_down = 2.0 / obs.t2_star_upper - p.gamma_g_down - obs.gamma_rad - obs.gamma_pure;
  if (p.gamma_e_down < 0.0) {
    std::ostringstream msg;
    msg << "infeasible constraints: gamma_e_down = 2/t2_star_upper - gamma_g_down"
           " - gamma_rad - gamma_pure = "
        << p.gamma_e_down << " < 0";
    throw ConstraintInfeasibleError(msg.str());
  }

  p.validate();
  return p;
}

double transition_frequency(const SivParameters& p, Transition x) {
  const double f_c = p.zpl_frequency;
  switch (x) {
    case Transition::C: return f_c;
    case Transition::A: return f_c + p.delta_e / two_pi;
    case Transition::B: return f_c + (p.delta_e - p.delta_g) / two_pi;
    case Transition::D: return f_c - p.delta_g / two_pi;
  }
  return f_c;
}

double coherence_decay_rate(const SivParameters& p, int i, int j) {
  const std::array<double, 4> out = {
      p.gamma_g_up,
      p.gamma_g_down,
      p.gamma_rad + p.gamma_e_up,
      p.gamma_rad + p.gamma_e_down,
  };
  const bool cross_manifold = (i < 2) != (j < 2);
  return 0.5 * (out[i] + out[j]) + (cross_manifold ? 0.5 * p.gamma_pure : 0.0);
}

DensityMatrix thermal_ground_state(const SivParameters& p) {
  const double beta = boltzmann_factor(p.delta_g, p.temperature);
  DensityMatrix rho = DensityMatrix::Zero();
  rho(0, 0) = 1.0 / (1.0 + beta);
  rho(1, 1) = beta / (1.0 + beta);
  return rho;
}

Eigen::Vector4d frame_hamiltonian_diagonal(const SivParameters& p,
                                           const RotatingFrame& frame) {
  const double detuning_c = two_pi * (p.zpl_frequency - frame.laser_frequency_hz);
  return {0.0, p.delta_g, detuning_c, detuning_c + p.delta_e};
}

Eigen::Matrix4cd hamiltonian(const SivParameters& p,
                             std::span<const PulseEnvelope> drives,
                             const RotatingFrame& frame, double t) {
  using namespace std::complex_literals;
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  h.diagonal() = frame_hamiltonian_diagonal(p, frame).cast<std::complex<double>>();
  const double omega_frame = two_pi * frame.laser_frequency_hz;
  for (const PulseEnvelope& env : drives) {
    const double omega_carrier =
        two_pi * transition_frequency(p, env.reference) - env.carrier_detuning;
    const double mu = omega_carrier - omega_frame;
    const double base = envelope_value(env, t);
    if (base == 0.0) continue;
    for (Transition x : all_transitions) {
      const double scale = env.coupling[static_cast<int>(x)];
      if (scale == 0.0) continue;
      const int g = ground_index(x);
      const int e = excited_index(x);
      const std::complex<double> val =
          0.5 * scale * base * std::exp(1i * (mu * t + env.phase));
      h(g, e) += val;
      h(e, g) += std::conj(val);
    }
  }
  return h;
}

std::vector<JumpOperator> dissipators(const SivParameters& p) {
  std::vector<JumpOperator> ops;
  auto add = [&ops](int to, int from, double rate) {
    if (rate <= 0.0) return;
    JumpOperator j;
    j.op = Eigen::Matrix4cd::Zero();
    j.op(to, from) = 1.0;
    j.rate = rate;
    ops.push_back(j);
  };

  // Radiative decay |e> -> |g| with branching fractions; rows of the
  // branching matrix are the excited states (2, 3), columns the grounds.
  for (int e = 0; e < 2; ++e) {
    for (int g = 0; g < 2; ++g) {
      add(g, 2 + e, p.gamma_rad * p.branching(e, g));
    }
  }
  // Phonon thermalization within each manifold.
  add(0, 1, p.gamma_g_down);
  add(1, 0, p.gamma_g_up);
  add(2, 3, p.gamma_e_down);
  add(3, 2, p.gamma_e_up);
  // Pure dephasing of the excited manifold: projector jump operator, damping
  // every ground-excited coherence at gamma_pure/2 and nothing else.
  if (p.gamma_pure > 0.0) {
    JumpOperator j;
    j.op = Eigen::Matrix4cd::Zero();
    j.op(2, 2) = 1.0;
    j.op(3, 3) = 1.0;
    j.rate = p.gamma_pure;
    ops.push_back(j);
  }
  return ops;
}

namespace density {

bool is_hermitian(const DensityMatrix& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double trace_error(const DensityMatrix& m) {
  return std::abs(m.trace() - std::complex<double>(1.0, 0.0));
}

double min_eigenvalue(const DensityMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_physical(const DensityMatrix& m, double herm_tol, double trace_tol,
                    double eig_floor) {
  if (!is_hermitian(m, herm_tol)) throw ValidationError("density matrix is not Hermitian");
  if (trace_error(m) > trace_tol) throw ValidationError("density matrix trace differs from 1");
  if (min_eigenvalue(m) < eig_floor)
    throw ValidationError("density matrix is not positive semidefinite");
}

}  // namespace density

}  // namespace siv
