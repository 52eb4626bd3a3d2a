#include "siv/engine.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "siv/errors.hpp"

namespace siv {

namespace {

using Complex = std::complex<double>;
using State = Eigen::Matrix<Complex, 17, 1>;  // vec(rho) + emission integral
using Superop = Eigen::Matrix<Complex, 16, 16>;

constexpr int kTraceIdx[4] = {0, 5, 10, 15};  // column-major diagonal of vec(rho)

Eigen::Map<const Eigen::Matrix4cd> as_matrix(const State& y) {
  return Eigen::Map<const Eigen::Matrix4cd>(y.data());
}

// Dissipator action D(rho) as a 16x16 superoperator over vec(rho), built
// directly from the jump-operator list.
Superop dissipator_superoperator(const std::vector<JumpOperator>& jumps) {
  Superop s = Superop::Zero();
  for (int col = 0; col < 16; ++col) {
    Eigen::Matrix4cd basis = Eigen::Matrix4cd::Zero();
    basis(col % 4, col / 4) = 1.0;
    Eigen::Matrix4cd image = Eigen::Matrix4cd::Zero();
    for (const JumpOperator& j : jumps) {
      const Eigen::Matrix4cd ldl = j.op.adjoint() * j.op;
      image += j.rate * (j.op * basis * j.op.adjoint() -
                         0.5 * (ldl * basis + basis * ldl));
    }
    s.col(col) = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(image.data());
  }
  return s;
}

// One drive coupling, reduced to the interaction picture: the off-diagonal
// element (g, e) of the Hamiltonian is 0.5*scale*peak*shape(t)*
// exp(i*(phase_rate*t + phase0)).
struct Coupling {
  const PulseEnvelope* env = nullptr;
  int g = 0;
  int e = 2;
  double scale = 0.0;
  double phase_rate = 0.0;  // rad/s
  double phase0 = 0.0;
};

struct Problem {
  Superop diss;
  std::vector<Coupling> couplings;
  double gamma_rad = 0.0;
  Eigen::Vector4d h0 = Eigen::Vector4d::Zero();

  void rhs(double t, const State& y, State& dydt) const {
    using namespace std::complex_literals;
    dydt.head<16>().noalias() = diss * y.head<16>();
    const auto rho = as_matrix(y);
    Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
    bool any = false;
    for (const Coupling& c : couplings) {
      const double base = c.env->peak_rabi * c.env->shape_value(t);
      if (base == 0.0) continue;
      const Complex val =
          0.5 * c.scale * base * std::exp(1i * (c.phase_rate * t + c.phase0));
      h(c.g, c.e) += val;
      h(c.e, c.g) += std::conj(val);
      any = true;
    }
    if (any) {
      const Eigen::Matrix4cd comm = h * rho - rho * h;
      dydt.head<16>() -= 1i * Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(comm.data());
    }
    dydt(16) = gamma_rad * (y(kTraceIdx[2]).real() + y(kTraceIdx[3]).real());
  }
};

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;

class Rk45 {
 public:
  Rk45(const Problem& problem, double tol, double max_step)
      : p_(problem), tol_(tol), max_step_(max_step) {}

  // Advances y from t to t_end; `fsal_valid` carries k1 across calls.
  void advance(State& y, double& t, double t_end, int segment_id) {
    if (t_end <= t) return;
    if (!have_k1_) {
      p_.rhs(t, y, k1_);
      have_k1_ = true;
    }
    if (!(h_ > 0.0)) h_ = initial_step(t, t_end);
    const double min_step = std::max(1e-18, (t_end - t) * 1e-14);
    while (t < t_end) {
      h_ = std::min({h_, max_step_, t_end - t});
      if (h_ < min_step) {
        std::ostringstream msg;
        msg << "step size underflow (h = " << h_ << " s) in segment "
            << segment_id << " at t = " << t;
        throw StiffnessError(msg.str());
      }
      const double err = try_step(t, y);
      if (err <= 1.0) {
        t += h_;
        y = y_new_;
        k1_ = k7_;  // first-same-as-last
        h_ *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
      } else if (!std::isfinite(err)) {
        h_ *= 0.2;
      } else {
        h_ *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
      }
    }
  }

  void invalidate_fsal() { have_k1_ = false; }

 private:
  double initial_step(double t, double t_end) const {
    return std::min((t_end - t) * 1e-3, max_step_);
  }

  // Returns the scaled error of a trial step of size h_ from (t, y); on
  // success y_new_ and k7_ hold the 5th-order result and its derivative.
  double try_step(double t, const State& y) {
    State k2, k3, k4, k5, k6, ytmp;
    const double h = h_;
    ytmp = y + h * kA21 * k1_;
    p_.rhs(t + kC2 * h, ytmp, k2);
    ytmp = y + h * (kA31 * k1_ + kA32 * k2);
    p_.rhs(t + kC3 * h, ytmp, k3);
    ytmp = y + h * (kA41 * k1_ + kA42 * k2 + kA43 * k3);
    p_.rhs(t + kC4 * h, ytmp, k4);
    ytmp = y + h * (kA51 * k1_ + kA52 * k2 + kA53 * k3 + kA54 * k4);
    p_.rhs(t + kC5 * h, ytmp, k5);
    ytmp = y + h * (kA61 * k1_ + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
    p_.rhs(t + h, ytmp, k6);
    y_new_ = y + h * (kB1 * k1_ + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    p_.rhs(t + h, y_new_, k7_);
    const State err_vec = h * (kE1 * k1_ + kE3 * k3 + kE4 * k4 + kE5 * k5 +
                               kE6 * k6 + kE7 * k7_);
    double err = 0.0;
    for (int i = 0; i < 17; ++i) {
      const double scale = tol_ + tol_ * std::max(std::abs(y(i)), std::abs(y_new_(i)));
      const double e = std::abs(err_vec(i)) / scale;
      err += e * e;
    }
    return std::sqrt(err / 17.0);
  }

  const Problem& p_;
  double tol_;
  double max_step_;
  double h_ = 0.0;
  State k1_, k7_, y_new_;
  bool have_k1_ = false;
};

// Diagonal phases of the interaction-picture transform rho_ip =
// exp(i h0 t) rho exp(-i h0 t).
Eigen::Matrix4cd to_interaction_picture(const DensityMatrix& rho,
                                        const Eigen::Vector4d& h0, double t,
                                        bool inverse) {
  using namespace std::complex_literals;
  Eigen::Vector4cd phases;
  const double sign = inverse ? -1.0 : 1.0;
  for (int i = 0; i < 4; ++i) phases(i) = std::exp(1i * (sign * h0(i) * t));
  return phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
}

}  // namespace

Trajectory integrate_segment(const DensityMatrix& rho0, const SivParameters& params,
                             const RotatingFrame& frame,
                             std::span<const PulseEnvelope> drives, double t0,
                             double t1, const IntegratorOptions& opt) {
  if (!(t1 > t0)) throw ValidationError("integrate_segment requires t1 > t0");
  if (!(opt.tol >= 1e-12 && opt.tol <= 1e-4))
    throw ValidationError("integrator tolerance must lie in [1e-12, 1e-4]");

  Problem problem;
  problem.diss = dissipator_superoperator(dissipators(params));
  problem.gamma_rad = params.gamma_rad;
  problem.h0 = frame_hamiltonian_diagonal(params, frame);
  const double omega_frame = two_pi * frame.laser_frequency_hz;
  for (const PulseEnvelope& env : drives) {
    env.validate();
    const double omega_carrier =
        two_pi * transition_frequency(params, env.reference) - env.carrier_detuning;
    for (Transition x : all_transitions) {
      const double scale = env.coupling[static_cast<int>(x)];
      if (scale == 0.0) continue;
      Coupling c;
      c.env = &env;
      c.g = ground_index(x);
      c.e = excited_index(x);
      c.scale = scale;
      // In the interaction picture the element (g, e) rotates at the drive's
      // own detuning from transition x.
      c.phase_rate = (omega_carrier - omega_frame) + problem.h0(c.g) - problem.h0(c.e);
      c.phase0 = env.phase;
      problem.couplings.push_back(c);
    }
  }

  State y = State::Zero();
  {
    const Eigen::Matrix4cd rho_ip = to_interaction_picture(rho0, problem.h0, t0, false);
    y.head<16>() = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(rho_ip.data());
  }
  const double trace0 = y(kTraceIdx[0]).real() + y(kTraceIdx[1]).real() +
                        y(kTraceIdx[2]).real() + y(kTraceIdx[3]).real();

  Trajectory traj;
  traj.frame = frame;

  auto emit_state = [&](double t, const State& s) {
    Eigen::Matrix4cd rho_ip = Eigen::Map<const Eigen::Matrix4cd>(s.data());
    DensityMatrix rho = to_interaction_picture(rho_ip, problem.h0, t, true);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    traj.times.push_back(t);
    traj.states.push_back(rho);
  };

  Rk45 stepper(problem, opt.tol, opt.max_step);
  emit_state(t0, y);
  const int samples = std::max(opt.samples, 1);
  double t = t0;
  for (int k = 1; k <= samples; ++k) {
    const double t_target = t0 + (t1 - t0) * static_cast<double>(k) / samples;
    stepper.advance(y, t, t_target, frame.segment_id);
    emit_state(t, y);
  }

  const double trace1 = y(kTraceIdx[0]).real() + y(kTraceIdx[1]).real() +
                        y(kTraceIdx[2]).real() + y(kTraceIdx[3]).real();
  const double drift = std::abs(trace1 - trace0);
  if (!(drift <= opt.trace_drift_limit)) {  // also catches NaN states
    std::ostringstream msg;
    msg << "trace drift " << drift << " exceeds " << opt.trace_drift_limit
        << " in segment " << frame.segment_id;
    throw IntegrationAccuracyError(msg.str());
  }
  if (trace1 != 0.0) {
    traj.states.back() *= trace0 / trace1;
  }
  traj.emission_integral = y(16).real();
  return traj;
}

FreePropagator::FreePropagator(const SivParameters& params, const RotatingFrame& frame) {
  const double gr = params.gamma_rad;
  const Eigen::Matrix2d& b = params.branching;
  rate_matrix_ << -params.gamma_g_up, params.gamma_g_down, gr * b(0, 0), gr * b(1, 0),
      params.gamma_g_up, -params.gamma_g_down, gr * b(0, 1), gr * b(1, 1),
      0.0, 0.0, -(gr + params.gamma_e_up), params.gamma_e_down,
      0.0, 0.0, params.gamma_e_up, -(gr + params.gamma_e_down);

  augmented_.setZero();
  augmented_.topLeftCorner<4, 4>() = rate_matrix_;
  augmented_(4, 2) = gr;
  augmented_(4, 3) = gr;

  gamma_.setZero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) gamma_(i, j) = coherence_decay_rate(params, i, j);

  h0_ = frame_hamiltonian_diagonal(params, frame);
}

DensityMatrix FreePropagator::propagate(const DensityMatrix& rho, double dt,
                                        double* emission) const {
  using namespace std::complex_literals;
  if (dt < 0.0) throw ValidationError("free_propagate requires dt >= 0");
  if (dt == 0.0) {
    if (emission) *emission = 0.0;
    return rho;
  }
  const Eigen::Matrix<double, 5, 5> prop = (augmented_ * dt).exp();
  Eigen::Vector4d pops;
  for (int i = 0; i < 4; ++i) pops(i) = rho(i, i).real();
  const Eigen::Vector4d pops_out = prop.topLeftCorner<4, 4>() * pops;
  if (emission) *emission = prop.row(4).head<4>() * pops;

  DensityMatrix out = rho;
  for (int i = 0; i < 4; ++i) out(i, i) = pops_out(i);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      const Complex factor =
          std::exp(Complex(-gamma_(i, j) * dt, -(h0_(i) - h0_(j)) * dt));
      out(i, j) = rho(i, j) * factor;
    }
  }
  return out;
}

DensityMatrix free_propagate(const DensityMatrix& rho, const SivParameters& params,
                             const RotatingFrame& frame, double dt, double* emission) {
  return FreePropagator(params, frame).propagate(rho, dt, emission);
}

DensityMatrix change_frame(const DensityMatrix& rho, const RotatingFrame& from,
                           const RotatingFrame& to, double t) {
  using namespace std::complex_literals;
  const double delta_omega = two_pi * (to.laser_frequency_hz - from.laser_frequency_hz);
  const Complex phase = std::exp(-1i * delta_omega * t);
  DensityMatrix out = rho;
  for (int g = 0; g < 2; ++g) {
    for (int e = 2; e < 4; ++e) {
      out(g, e) = rho(g, e) * phase;
      out(e, g) = rho(e, g) * std::conj(phase);
    }
  }
  return out;
}

}  // namespace siv
