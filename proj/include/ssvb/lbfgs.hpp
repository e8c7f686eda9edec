#pragma once

#include <Eigen/Core>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "ssvb/data.hpp"

namespace ssvb {

struct OptSettings {
  double grad_tol = 1e-7;  // sup-norm of gradient at termination
  int max_evals = 200;     // budget of objective/gradient evaluations
  int history = 6;         // curvature pairs kept
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;

  void validate() const {
    if (!(grad_tol > 0.0)) throw std::invalid_argument("OptSettings: grad_tol must be positive");
    if (max_evals < 1) throw std::invalid_argument("OptSettings: max_evals must be >= 1");
    if (history < 1) throw std::invalid_argument("OptSettings: history must be >= 1");
    if (!(wolfe_c1 > 0.0 && wolfe_c2 < 1.0 && wolfe_c1 < wolfe_c2))
      throw std::invalid_argument("OptSettings: need 0 < c1 < c2 < 1");
  }
};

enum class OptStatus { converged, max_evals_reached, line_search_failed };

struct OptResult {
  Vector x;
  double fx = 0.0;
  OptStatus status = OptStatus::converged;
  int evals = 0;
};

namespace detail {

/// Evaluation wrapper: counts calls, sanitizes non-finite values to +inf and
/// tracks the best point seen so far.
template <typename F>
struct Evaluator {
  F& f;
  int evals = 0;
  Vector best_x;
  double best_f = std::numeric_limits<double>::infinity();

  double operator()(const Vector& x, Vector& grad) {
    ++evals;
    double v = f(x, grad);
    if (!std::isfinite(v)) {
      v = std::numeric_limits<double>::infinity();
    } else if (v < best_f && grad.allFinite()) {
      best_f = v;
      best_x = x;
    }
    return v;
  }
};

}  // namespace detail

/// L-BFGS with strong-Wolfe line search for small smooth problems. The
/// objective is called as f(x, grad) -> value, filling grad. Returns a point
/// with sup-norm gradient <= grad_tol, or the best point seen when the
/// evaluation budget runs out or the line search stalls. Never returns a
/// point worse than x0.
template <typename F>
OptResult minimize(F&& f, const Vector& x0, const OptSettings& settings = {}) {
  settings.validate();
  const Index dim = x0.size();
  detail::Evaluator<F> eval{f, 0, Vector(), std::numeric_limits<double>::infinity()};

  Vector x = x0, grad(dim);
  double fx = eval(x, grad);
  if (!std::isfinite(fx) || !grad.allFinite())
    throw std::invalid_argument("minimize: objective not finite at x0");

  auto finish = [&](OptStatus status) {
    OptResult r;
    r.x = eval.best_x;
    r.fx = eval.best_f;
    r.status = status;
    r.evals = eval.evals;
    return r;
  };

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  Vector grad_new(dim);

  while (true) {
    if (grad.lpNorm<Eigen::Infinity>() <= settings.grad_tol)
      return finish(OptStatus::converged);
    if (eval.evals >= settings.max_evals)
      return finish(OptStatus::max_evals_reached);

    // two-loop recursion
    Vector d = -grad;
    const int m = static_cast<int>(s_hist.size());
    Eigen::VectorXd alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }

    double dg = d.dot(grad);
    if (!(dg < 0.0)) {
      // not a descent direction; restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -grad;
      dg = d.dot(grad);
    }

    // strong Wolfe line search (bracket + zoom)
    const double f0 = fx, dg0 = dg;
    double alpha_lo = 0.0, alpha_hi = 0.0;
    double f_lo = f0;
    double step = (m == 0) ? std::min(1.0, 1.0 / grad.template lpNorm<1>()) : 1.0;
    double step_prev = 0.0, f_prev = f0;
    bool bracketed = false, accepted = false;
    double f_trial = f0;
    Vector x_trial;

    for (int iter = 0; iter < 30 && eval.evals < settings.max_evals; ++iter) {
      x_trial = x + step * d;
      f_trial = eval(x_trial, grad_new);
      double dg_trial =
          std::isfinite(f_trial) ? grad_new.dot(d) : std::numeric_limits<double>::quiet_NaN();
      if (f_trial > f0 + settings.wolfe_c1 * step * dg0 ||
          (iter > 0 && f_trial >= f_prev) || !std::isfinite(f_trial)) {
        alpha_lo = step_prev;
        f_lo = f_prev;
        alpha_hi = step;
        bracketed = true;
        break;
      }
      if (std::fabs(dg_trial) <= -settings.wolfe_c2 * dg0) {
        accepted = true;
        break;
      }
      if (dg_trial >= 0.0) {
        alpha_lo = step;
        f_lo = f_trial;
        alpha_hi = step_prev;
        bracketed = true;
        break;
      }
      step_prev = step;
      f_prev = f_trial;
      step *= 2.0;
    }

    if (bracketed && !accepted) {
      // zoom on [alpha_lo, alpha_hi] by bisection; the inner problems are
      // two-dimensional and cheap, so interpolation buys little here
      for (int iter = 0; iter < 40 && eval.evals < settings.max_evals; ++iter) {
        const double span = alpha_hi - alpha_lo;
        const double mid = alpha_lo + 0.5 * span;
        x_trial = x + mid * d;
        f_trial = eval(x_trial, grad_new);
        const double dg_trial =
            std::isfinite(f_trial) ? grad_new.dot(d) : std::numeric_limits<double>::quiet_NaN();
        if (f_trial > f0 + settings.wolfe_c1 * mid * dg0 || f_trial >= f_lo ||
            !std::isfinite(f_trial)) {
          alpha_hi = mid;
        } else {
          if (std::fabs(dg_trial) <= -settings.wolfe_c2 * dg0) {
            step = mid;
            accepted = true;
            break;
          }
          if (dg_trial * span >= 0.0) alpha_hi = alpha_lo;
          alpha_lo = mid;
          f_lo = f_trial;
        }
        if (std::fabs(alpha_hi - alpha_lo) < 1e-16 * (1.0 + std::fabs(alpha_lo))) break;
        step = mid;
      }
    }

    if (!accepted) {
      // Armijo-only backtracking fallback
      bool armijo = false;
      step = 1.0;
      for (int iter = 0; iter < 40 && eval.evals < settings.max_evals; ++iter) {
        x_trial = x + step * d;
        f_trial = eval(x_trial, grad_new);
        if (std::isfinite(f_trial) &&
            f_trial <= f0 + settings.wolfe_c1 * step * dg0) {
          armijo = true;
          break;
        }
        step *= 0.5;
      }
      if (!armijo) {
        if (eval.evals >= settings.max_evals)
          return finish(OptStatus::max_evals_reached);
        return finish(OptStatus::line_search_failed);
      }
    }

    // accept the step
    const Vector s = x_trial - x;
    const Vector yv = grad_new - grad;
    x = x_trial;
    fx = f_trial;
    grad = grad_new;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > settings.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
}

}  // namespace ssvb
