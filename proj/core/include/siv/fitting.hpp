#ifndef SIV_FITTING_HPP
#define SIV_FITTING_HPP

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace siv {

// Least-squares problem: minimize |residual(x)|^2 over the box
// [lower, upper]. Residuals typically come from ODE integrations, so the
// default algorithm is a derivative-free simplex descent; a Gauss-Newton
// path with finite-difference Jacobians is available behind the method flag.
struct FitProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd initial;
  int max_evals = 4000;
  double tol = 1e-12;  // relative spread of simplex costs at convergence

  enum class Method { Simplex, GaussNewton };
  Method method = Method::Simplex;

  // Optional seeded multi-start for poorly conditioned problems: the fit is
  // repeated from `restarts` deterministic pseudo-random points in the box
  // and the best minimizer wins. 0 = single start from `initial`.
  int restarts = 0;
  unsigned seed = 0;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd parameters;
  double residual_norm = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

// Deterministic local least-squares minimizer. When max_evals is exhausted
// the best point so far is returned with converged = false.
FitResult fit_least_squares(const FitProblem& p);

// (upper - lower) / (upper + lower), element-wise. Throws
// UndefinedVisibilityError (naming the index) when a sum vanishes.
std::vector<double> extract_visibility(std::span<const double> upper,
                                       std::span<const double> lower);

struct ExpDecayFit {
  double amplitude = 0.0;
  double time_constant = 0.0;
  double residual_norm = 0.0;
};

// Fits y = A exp(-t / T). Initialized by log-linear regression, refined by
// the simplex. Throws FitDiagnosticError for non-decaying data.
ExpDecayFit fit_exponential_decay(std::span<const double> t,
                                  std::span<const double> y);

struct SinusoidFit {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;
  double offset = 0.0;
  double residual_norm = 0.0;
};

// Fits y = A cos(2 pi f t + phi) + C near the initial frequency guess.
SinusoidFit fit_sinusoid(std::span<const double> t, std::span<const double> y,
                         double frequency_guess);

}  // namespace siv

#endif
