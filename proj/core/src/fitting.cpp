#include "siv/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

void FitProblem::validate() const {
  if (!residual) throw ValidationError("fit problem has no residual function");
  const auto n = initial.size();
  if (lower.size() != n || upper.size() != n)
    throw ValidationError("fit bounds must match the parameter dimension");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || lower(i) >= upper(i))
      throw ValidationError("fit bounds must be finite with lower < upper");
    if (initial(i) < lower(i) || initial(i) > upper(i))
      throw ValidationError("fit initial guess must lie within the bounds");
  }
  if (max_evals < 1) throw ValidationError("max_evals must be >= 1");
}

namespace {

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::clamp(x(i), lo(i), hi(i));
  return x;
}

FitResult simplex_fit(const FitProblem& p) {
  const Eigen::Index n = p.initial.size();
  int evals = 0;
  auto cost = [&](const Eigen::VectorXd& x) {
    ++evals;
    return p.residual(x).squaredNorm();
  };

  // Initial simplex: the guess plus one vertex per dimension, displaced by 5%
  // of the box extent (reflected inward at the boundary).
  std::vector<Eigen::VectorXd> xs(n + 1, p.initial);
  for (Eigen::Index i = 0; i < n; ++i) {
    double step = 0.05 * (p.upper(i) - p.lower(i));
    if (p.initial(i) + step > p.upper(i)) step = -step;
    xs[i + 1](i) += step;
  }
  std::vector<double> fs(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) fs[i] = cost(xs[i]);

  FitResult out;
  int iterations = 0;
  while (evals < p.max_evals) {
    ++iterations;
    std::vector<int> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];

    const double spread = std::abs(fs[worst] - fs[best]);
    if (spread <= p.tol * (std::abs(fs[best]) + p.tol)) {
      out.converged = true;
      out.reason = "simplex cost spread below tolerance";
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int k = 0; k <= n; ++k)
      if (k != worst) centroid += xs[k];
    centroid /= static_cast<double>(n);

    auto point = [&](double alpha) {
      return clamp_to_box(centroid + alpha * (centroid - xs[worst]), p.lower, p.upper);
    };

    const Eigen::VectorXd xr = point(1.0);
    const double fr = cost(xr);
    if (fr < fs[best]) {
      const Eigen::VectorXd xe = point(2.0);
      const double fe = cost(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      const Eigen::VectorXd xc = point(fr < fs[worst] ? 0.5 : -0.5);
      const double fc = cost(xc);
      if (fc < std::min(fr, fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        // Shrink toward the best vertex.
        for (int k = 0; k <= n; ++k) {
          if (k == best) continue;
          xs[k] = clamp_to_box(xs[best] + 0.5 * (xs[k] - xs[best]), p.lower, p.upper);
          fs[k] = cost(xs[k]);
        }
      }
    }
  }

  const auto best_it = std::min_element(fs.begin(), fs.end());
  const int best = static_cast<int>(best_it - fs.begin());
  out.parameters = xs[best];
  out.residual_norm = std::sqrt(fs[best]);
  out.evaluations = evals;
  out.iterations = iterations;
  if (!out.converged) out.reason = "max_evals exceeded; best point so far returned";
  return out;
}

FitResult gauss_newton_fit(const FitProblem& p) {
  Eigen::VectorXd x = p.initial;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& v) {
    ++evals;
    return p.residual(v);
  };
  Eigen::VectorXd r = eval(x);
  double cost = r.squaredNorm();
  double lambda = 1e-4;

  FitResult out;
  int iterations = 0;
  while (evals < p.max_evals) {
    ++iterations;
    const Eigen::Index n = x.size(), m = r.size();
    Eigen::MatrixXd jac(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * (p.upper(j) - p.lower(j));
      Eigen::VectorXd xp = x;
      xp(j) = std::min(x(j) + h, p.upper(j));
      Eigen::VectorXd xm = x;
      xm(j) = std::max(x(j) - h, p.lower(j));
      jac.col(j) = (eval(xp) - eval(xm)) / (xp(j) - xm(j));
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 8 && evals < p.max_evals; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
      const Eigen::VectorXd step = damped.ldlt().solve(jtr);
      const Eigen::VectorXd x_new = clamp_to_box(x - step, p.lower, p.upper);
      const Eigen::VectorXd r_new = eval(x_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        const double rel = (cost - cost_new) / (cost + 1e-300);
        x = x_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (rel < p.tol) {
          out.converged = true;
          out.reason = "relative cost decrease below tolerance";
        }
        break;
      }
      lambda *= 10.0;
    }
    if (out.converged || !improved) {
      if (!improved && !out.converged) {
        out.converged = true;
        out.reason = "no damped step improves the cost";
      }
      break;
    }
  }
  out.parameters = x;
  out.residual_norm = std::sqrt(cost);
  out.evaluations = evals;
  out.iterations = iterations;
  if (!out.converged) out.reason = "max_evals exceeded; best point so far returned";
  return out;
}

}  // namespace

namespace {

// splitmix64, the usual seed expander.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

FitResult fit_least_squares(const FitProblem& p) {
  p.validate();
  auto solve = [&](const FitProblem& prob) {
    return prob.method == FitProblem::Method::Simplex ? simplex_fit(prob)
                                                      : gauss_newton_fit(prob);
  };
  FitResult best = solve(p);
  std::uint64_t state = p.seed;
  for (int k = 0; k < p.restarts; ++k) {
    FitProblem restart = p;
    for (Eigen::Index i = 0; i < restart.initial.size(); ++i) {
      restart.initial(i) = p.lower(i) + uniform01(state) * (p.upper(i) - p.lower(i));
    }
    const FitResult candidate = solve(restart);
    if (candidate.residual_norm < best.residual_norm) best = candidate;
  }
  return best;
}

std::vector<double> extract_visibility(std::span<const double> upper,
                                       std::span<const double> lower) {
  if (upper.size() != lower.size())
    throw ValidationError("visibility inputs must have equal length");
  std::vector<double> v(upper.size());
  for (std::size_t i = 0; i < upper.size(); ++i) {
    const double sum = upper[i] + lower[i];
    if (sum == 0.0) {
      std::ostringstream msg;
      msg << "visibility undefined at index " << i << ": upper + lower = 0";
      throw UndefinedVisibilityError(msg.str());
    }
    v[i] = (upper[i] - lower[i]) / sum;
  }
  return v;
}

ExpDecayFit fit_exponential_decay(std::span<const double> t,
                                  std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 3)
    throw ValidationError("exponential fit needs at least 3 matching samples");

  // Log-linear regression on the positive samples for the starting point.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= 0.0) continue;
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    ++count;
  }
  if (count < 3) throw FitDiagnosticError("exponential fit: too few positive samples");
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw FitDiagnosticError("exponential fit: degenerate time axis");
  const double slope = (count * sxy - sx * sy) / denom;
  if (slope >= 0.0)
    throw FitDiagnosticError("exponential fit: data do not decay with time");
  const double tau0 = -1.0 / slope;
  const double amp0 = std::exp((sy - slope * sx) / count);

  FitProblem p;
  p.residual = [&t, &y](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = x(0) * std::exp(-t[i] / x(1)) - y[i];
    return r;
  };
  p.initial = Eigen::Vector2d(amp0, tau0);
  p.lower = Eigen::Vector2d(amp0 * 1e-3, tau0 * 1e-2);
  p.upper = Eigen::Vector2d(amp0 * 1e3, tau0 * 1e2);
  const FitResult res = fit_least_squares(p);

  ExpDecayFit out;
  out.amplitude = res.parameters(0);
  out.time_constant = res.parameters(1);
  out.residual_norm = res.residual_norm;
  return out;
}

SinusoidFit fit_sinusoid(std::span<const double> t, std::span<const double> y,
                         double frequency_guess) {
  if (t.size() != y.size() || t.size() < 8)
    throw ValidationError("sinusoid fit needs at least 8 matching samples");
  if (!(frequency_guess > 0.0))
    throw ValidationError("sinusoid fit needs a positive frequency guess");

  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  // At fixed frequency the problem is linear in (a, b, c) for
  // y = a cos(wt) + b sin(wt) + c; scan frequencies around the guess and keep
  // the best linear solution, then polish everything with the simplex.
  auto linear_cost = [&](double f, Eigen::Vector3d* abc) {
    Eigen::MatrixXd m(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = two_pi * f * t[static_cast<std::size_t>(i)];
      m(i, 0) = std::cos(w);
      m(i, 1) = std::sin(w);
      m(i, 2) = 1.0;
      rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d sol = (m.transpose() * m).ldlt().solve(m.transpose() * rhs);
    if (abc) *abc = sol;
    return (m * sol - rhs).squaredNorm();
  };

  double best_f = frequency_guess;
  double best_cost = linear_cost(frequency_guess, nullptr);
  for (int k = -40; k <= 40; ++k) {
    const double f = frequency_guess * (1.0 + 0.005 * k);
    const double c = linear_cost(f, nullptr);
    if (c < best_cost) {
      best_cost = c;
      best_f = f;
    }
  }
  Eigen::Vector3d abc;
  linear_cost(best_f, &abc);
  const double amp0 = std::hypot(abc(0), abc(1));
  if (amp0 <= 0.0) throw FitDiagnosticError("sinusoid fit: no oscillation found");
  const double phase0 = std::atan2(-abc(1), abc(0));

  FitProblem p;
  p.residual = [&t, &y](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      r(static_cast<Eigen::Index>(i)) =
          x(0) * std::cos(two_pi * x(1) * t[i] + x(2)) + x(3) - y[i];
    return r;
  };
  p.initial = Eigen::Vector4d(amp0, best_f, phase0, abc(2));
  p.lower = Eigen::Vector4d(0.0, 0.5 * frequency_guess, -two_pi, mean - 10.0 * amp0);
  p.upper = Eigen::Vector4d(10.0 * amp0, 1.5 * frequency_guess, two_pi, mean + 10.0 * amp0);
  const FitResult res = fit_least_squares(p);

  SinusoidFit out;
  out.amplitude = res.parameters(0);
  out.frequency = res.parameters(1);
  out.phase = res.parameters(2);
  out.offset = res.parameters(3);
  out.residual_norm = res.residual_norm;
  return out;
}

}  // namespace siv
