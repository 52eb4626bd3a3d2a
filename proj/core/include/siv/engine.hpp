#ifndef SIV_ENGINE_HPP
#define SIV_ENGINE_HPP

#include <limits>
#include <span>
#include <vector>

#include "siv/model.hpp"

namespace siv {

struct Trajectory {
  std::vector<double> times;           // s, strictly increasing
  std::vector<DensityMatrix> states;   // frame-picture states at `times`
  RotatingFrame frame;
  double emission_integral = 0.0;      // integral of gamma_rad*(p3+p4) dt
};

struct IntegratorOptions {
  double tol = 1e-9;                   // local error per step
  double max_step = std::numeric_limits<double>::infinity();
  int samples = 0;                     // >0: store this many interior states
  double trace_drift_limit = 1e-9;
};

// Integrates d rho/dt = -i[H, rho] + sum_k rate_k (L rho L+ - {L+L, rho}/2)
// from t0 to t1 with an embedded Dormand-Prince 5(4) stepper. The Hamiltonian
// is the rotating-frame one of model::hamiltonian for the given drives and
// frame; internally the stiff static diagonal is removed by an exact
// interaction-picture transformation, so only drive detunings limit the step
// size. States in the returned trajectory (and the final state) are in the
// frame picture. Throws StiffnessError on step-size underflow and
// IntegrationAccuracyError when the trace drifts by more than the limit.
Trajectory integrate_segment(const DensityMatrix& rho0, const SivParameters& params,
                             const RotatingFrame& frame,
                             std::span<const PulseEnvelope> drives, double t0,
                             double t1, const IntegratorOptions& opt = {});

// Exact propagator of the drive-free Lindblad generator in a fixed frame.
// The populations evolve under the classical rate matrix (computed by a 5x5
// matrix exponential that also yields the exact emission integral); each
// coherence decays independently at its analytic rate while rotating at the
// frame-diagonal splitting.
class FreePropagator {
 public:
  FreePropagator(const SivParameters& params, const RotatingFrame& frame);

  // Propagates by dt >= 0. When emission is non-null it receives the exact
  // integral of gamma_rad*(p3+p4) over the interval.
  DensityMatrix propagate(const DensityMatrix& rho, double dt,
                          double* emission = nullptr) const;

  const Eigen::Matrix4d& rate_matrix() const { return rate_matrix_; }

 private:
  Eigen::Matrix4d rate_matrix_;
  Eigen::Matrix<double, 5, 5> augmented_;
  Eigen::Matrix4d gamma_;      // coherence decay rates, symmetric, zero diagonal
  Eigen::Vector4d h0_;
};

// Convenience wrapper around FreePropagator for one-off use.
DensityMatrix free_propagate(const DensityMatrix& rho, const SivParameters& params,
                             const RotatingFrame& frame, double dt,
                             double* emission = nullptr);

// Re-expresses a state in another rotating frame at time t: optical
// coherences acquire the phase exp(-i (w_to - w_from) t); populations and the
// ground coherence are unchanged.
DensityMatrix change_frame(const DensityMatrix& rho, const RotatingFrame& from,
                           const RotatingFrame& to, double t);

}  // namespace siv

#endif
