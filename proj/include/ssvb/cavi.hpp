#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ssvb/data.hpp"
#include "ssvb/lbfgs.hpp"
#include "ssvb/math.hpp"
#include "ssvb/model.hpp"
#include "ssvb/prior.hpp"
#include "ssvb/rng.hpp"

namespace ssvb {

/// Mean-field state: per coordinate a spike-and-slab factor
/// gamma_j N(mu_j, sigma_j^2) + (1 - gamma_j) delta_0, plus the per-observation
/// bound parameters eta.
struct VariationalState {
  Vector mu;
  Vector sigma;
  Vector gamma;
  Vector eta;

  Index p() const { return mu.size(); }

  void validate(Index n_obs) const {
    const Index p_ = mu.size();
    if (sigma.size() != p_ || gamma.size() != p_)
      throw std::invalid_argument("VariationalState: mu/sigma/gamma lengths differ");
    if (eta.size() != n_obs)
      throw std::invalid_argument("VariationalState: eta length must equal n");
    for (Index j = 0; j < p_; ++j) {
      if (!(sigma[j] > 0.0))
        throw std::invalid_argument("VariationalState: sigma must be positive");
      if (!(gamma[j] >= 0.0 && gamma[j] <= 1.0))
        throw std::invalid_argument("VariationalState: gamma must lie in [0,1]");
    }
    for (Index i = 0; i < eta.size(); ++i)
      if (!(eta[i] >= 0.0))
        throw std::invalid_argument("VariationalState: eta must be nonnegative");
  }
};

enum class UpdateOrder { sequential, parallel_snapshot };
enum class InitKind { zero, ridge };

struct FitConfig {
  PriorSpec prior;
  int max_iter = 500;
  double tol = 1e-5;  // threshold on max_j |dgamma_j| and relative objective change
  UpdateOrder update_order = UpdateOrder::sequential;
  OptSettings opt;
  std::uint64_t seed = 0;
  InitKind init = InitKind::zero;
  bool shuffle_sweep = false;  // seeded coordinate permutation per sweep
  int threads = 0;             // parallel_snapshot workers; 0 = all cores
  // On linearly separable data the surrogate optimum inflates the coefficient
  // scale long after the selected support has stabilized. The early stop ends
  // the fit once the per-iteration improvement has collapsed relative to the
  // initial one while the posterior-mean norm is still growing (the inflation
  // signature); disable it to run the strict tolerance rule only.
  bool early_stop = true;
  double early_stop_ratio = 0.35;

  void validate() const {
    prior.validate();
    opt.validate();
    if (max_iter < 1) throw std::invalid_argument("FitConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("FitConfig: tol must be positive");
    if (threads < 0) throw std::invalid_argument("FitConfig: threads must be >= 0");
    if (!(early_stop_ratio > 0.0 && early_stop_ratio < 1.0))
      throw std::invalid_argument("FitConfig: early_stop_ratio must lie in (0,1)");
  }
};

struct FitResult {
  VariationalState state;
  std::vector<double> objective_trace;  // surrogate value, one per iteration
  int iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  int optimizer_warnings = 0;  // coordinate steps kept at incoming values
};

/// Data-side coefficients of the coordinate-j objective, with the quadratic
/// bound parameters a_i = A(eta_i) held fixed:
///   q     = sum_i a_i x_ij^2
///   cross = sum_i a_i x_ij sum_{k != j} gamma_k x_ik mu_k
///   b     = sum_i (y_i - 1/2) x_ij
struct CoordTerms {
  double q = 0.0;
  double cross = 0.0;
  double b = 0.0;
};

struct ObjectiveEval {
  double value = 0.0;
  double d_mu = 0.0;
  double d_logsigma = 0.0;
};

namespace detail {

inline CoordTerms coord_terms(Index j, const Dataset& data,
                              const VariationalState& state) {
  const Index n = data.n();
  CoordTerms t;
  const Vector m = data.X * (state.gamma.array() * state.mu.array()).matrix();
  for (Index i = 0; i < n; ++i) {
    const double x = data.X(i, j);
    const double a = jj_coefficient(state.eta[i]);
    t.q += a * x * x;
    t.cross += a * x * m[i];
    t.b += (data.y[i] - 0.5) * x;
  }
  t.cross -= state.gamma[j] * state.mu[j] * t.q;
  return t;
}

/// Coordinate objective in (mu_j, sigma_j) with everything else fixed:
///   slab term  - log sigma + (mu^2 + sigma^2) q + mu (2 cross - b),
/// slab term = lambda E|theta - nu| (Laplace) or (mu^2 + sigma^2)/(2 sigma0^2)
/// (Gaussian). Gradient in (mu, log sigma).
inline ObjectiveEval eval_coord_objective(const CoordTerms& t,
                                          const PriorSpec& prior, double mu,
                                          double sigma) {
  ObjectiveEval out;
  const double lin = 2.0 * t.cross - t.b;
  const double quad = mu * mu + sigma * sigma;
  if (prior.slab == SlabFamily::laplace) {
    const double z = (mu - prior.nu) / sigma;
    const double gauss = prior.lambda * sigma * kSqrt2OverPi * std::exp(-0.5 * z * z);
    out.value = gauss + prior.lambda * (mu - prior.nu) * std::erf(z / kSqrt2) -
                std::log(sigma) + quad * t.q + mu * lin;
    out.d_mu = prior.lambda * std::erf(z / kSqrt2) + 2.0 * t.q * mu + lin;
    out.d_logsigma = gauss - 1.0 + 2.0 * t.q * sigma * sigma;
  } else {
    const double s02 = prior.sigma0 * prior.sigma0;
    out.value = 0.5 * quad / s02 - std::log(sigma) + quad * t.q + mu * lin;
    out.d_mu = mu / s02 + 2.0 * t.q * mu + lin;
    out.d_logsigma = sigma * sigma / s02 - 1.0 + 2.0 * t.q * sigma * sigma;
  }
  return out;
}

/// Exact minimizer of the Gaussian-slab coordinate objective.
inline std::pair<double, double> gauss_coord_minimizer(const CoordTerms& t,
                                                       double sigma0) {
  const double denom = 2.0 * t.q + 1.0 / (sigma0 * sigma0);
  const double mu = (t.b - 2.0 * t.cross) / denom;
  return {mu, 1.0 / std::sqrt(denom)};
}

struct CoordUpdate {
  double mu = 0.0;
  double sigma = 1.0;
  bool kept_incoming = false;
};

/// Minimize the coordinate objective from the incoming point. The Gaussian
/// slab has a closed form; the Laplace slab runs L-BFGS in (mu, log sigma).
/// Never returns a point worse than the incoming one.
inline CoordUpdate minimize_coord(const CoordTerms& t, const PriorSpec& prior,
                                  double mu_in, double sigma_in,
                                  const OptSettings& opt) {
  CoordUpdate u;
  if (prior.slab == SlabFamily::gauss) {
    std::tie(u.mu, u.sigma) = gauss_coord_minimizer(t, prior.sigma0);
    return u;
  }
  auto fn = [&](const Vector& x, Vector& grad) {
    const ObjectiveEval e = eval_coord_objective(t, prior, x[0], std::exp(x[1]));
    grad.resize(2);
    grad[0] = e.d_mu;
    grad[1] = e.d_logsigma;
    return e.value;
  };
  Vector x0(2);
  x0 << mu_in, std::log(sigma_in);
  const OptResult res = minimize(fn, x0, opt);
  const double f_in = eval_coord_objective(t, prior, mu_in, sigma_in).value;
  if (res.fx <= f_in && std::isfinite(res.x[1])) {
    u.mu = res.x[0];
    u.sigma = std::exp(res.x[1]);
  } else {
    u.mu = mu_in;
    u.sigma = sigma_in;
    u.kept_incoming = true;
  }
  return u;
}

/// Right-hand side of the gamma update: gamma_j = 1/(1 + exp(R)) with
///   R = log(b0/a0) + KL(N(mu,sigma^2)||slab)
///       - b mu + q (mu^2 + sigma^2) + 2 cross mu.
inline double gamma_from_terms(const CoordTerms& t, const PriorSpec& prior,
                               double mu, double sigma) {
  double r = std::log(prior.b0 / prior.a0) + slab_kl_term(mu, sigma, prior) -
             t.b * mu + t.q * (mu * mu + sigma * sigma) + 2.0 * t.cross * mu;
  r = std::clamp(r, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(r));
}

inline void parallel_for(Index count, int threads, auto&& body) {
  int n_workers = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(count)));
  if (n_workers == 1) {
    for (Index j = 0; j < count; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  const Index chunk = (count + n_workers - 1) / n_workers;
  for (int w = 0; w < n_workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (Index j = lo; j < hi; ++j) body(j);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Bound-parameter update: eta_i = sqrt(E (x_i'theta)^2) under the current
/// state, computed in O(np) as
///   sqrt( sum_k g_k x_ik^2 (mu_k^2 + s_k^2) - sum_k (g_k x_ik mu_k)^2 + m_i^2 )
/// with m_i = sum_k g_k x_ik mu_k, clamped at zero against rounding.
inline Vector update_eta(const Dataset& data, const VariationalState& state) {
  state.validate(data.n());
  const auto g = state.gamma.array();
  const auto mu = state.mu.array();
  const Matrix Xsq = data.X.cwiseProduct(data.X);
  const Vector m = data.X * (g * mu).matrix();
  const Vector t1 = Xsq * (g * (mu.square() + state.sigma.array().square())).matrix();
  const Vector t2 = Xsq * (g.square() * mu.square()).matrix();
  Vector eta = (t1 - t2 + m.cwiseProduct(m)).cwiseMax(0.0);
  return eta.cwiseSqrt();
}

/// Coordinate-j objective in (mu_j, sigma_j), other parameters fixed, with
/// analytic gradient in (mu_j, log sigma_j).
inline ObjectiveEval mu_sigma_objective(Index j, double mu_j, double sigma_j,
                                        const Dataset& data,
                                        const VariationalState& state,
                                        const PriorSpec& prior) {
  if (!(sigma_j > 0.0))
    throw std::invalid_argument("mu_sigma_objective: sigma_j must be positive");
  return detail::eval_coord_objective(detail::coord_terms(j, data, state), prior,
                                      mu_j, sigma_j);
}

/// Block update of (mu_j, sigma_j); does not increase the coordinate
/// objective relative to the incoming values.
inline std::pair<double, double> update_mu_sigma(Index j, const Dataset& data,
                                                 const VariationalState& state,
                                                 const PriorSpec& prior,
                                                 const OptSettings& opt = {}) {
  const auto u = detail::minimize_coord(detail::coord_terms(j, data, state),
                                        prior, state.mu[j], state.sigma[j], opt);
  return {u.mu, u.sigma};
}

/// Closed-form gamma_j update at the current (mu_j, sigma_j).
inline double update_gamma(Index j, const Dataset& data,
                           const VariationalState& state,
                           const PriorSpec& prior) {
  return detail::gamma_from_terms(detail::coord_terms(j, data, state), prior,
                                  state.mu[j], state.sigma[j]);
}

/// Surrogate objective KL(Q || product prior) - E_Q f(theta, eta), dropping
/// constants independent of (mu, sigma, gamma, eta). The discrete part is
///   gamma_j log(gamma_j / w) + (1-gamma_j) log((1-gamma_j)/(1-w)),
/// w = a0/(a0+b0), with 0 log 0 = 0; the slab part is gamma_j KL(N || slab).
inline double surrogate_objective(const Dataset& data,
                                  const VariationalState& state,
                                  const PriorSpec& prior) {
  const double w = prior.slab_weight();
  double kl = 0.0;
  for (Index j = 0; j < state.p(); ++j) {
    const double g = state.gamma[j];
    if (g > 0.0)
      kl += g * (std::log(g / w) + slab_kl_term(state.mu[j], state.sigma[j], prior));
    if (g < 1.0) kl += (1.0 - g) * std::log((1.0 - g) / (1.0 - w));
  }

  const auto ga = state.gamma.array();
  const auto mu = state.mu.array();
  const Matrix Xsq = data.X.cwiseProduct(data.X);
  const Vector m = data.X * (ga * mu).matrix();
  const Vector t1 = Xsq * (ga * (mu.square() + state.sigma.array().square())).matrix();
  const Vector t2 = Xsq * (ga.square() * mu.square()).matrix();
  double ef = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double e = state.eta[i];
    const double v = std::max(0.0, t1[i] - t2[i] + m[i] * m[i]);
    ef += log_sigmoid(e) - 0.5 * e + (data.y[i] - 0.5) * m[i] -
          jj_coefficient(e) * (v - e * e);
  }
  return kl - ef;
}

namespace detail {

inline Vector ridge_warm_start(const Dataset& data) {
  // a few gradient-ascent steps on the ridge-penalized logistic likelihood;
  // step size from a power-iteration bound on ||X||_op^2 / 4
  const Index p = data.p();
  Vector v = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lam = 1.0;
  for (int it = 0; it < 20; ++it) {
    Vector w = data.X.transpose() * (data.X * v);
    lam = w.norm();
    if (lam <= 0.0) break;
    v = w / lam;
  }
  const double ridge = 1.0;
  const double step = 1.0 / (0.25 * std::max(lam, 1.0) + ridge);
  Vector theta = Vector::Zero(p);
  for (int it = 0; it < 25; ++it) {
    theta += step * (score(data, theta) - ridge * theta);
  }
  return theta;
}

}  // namespace detail

/// Deterministic starting state: mu = 0 (or ridge warm start), sigma = 1,
/// gamma = a0/(a0+b0), eta = 1. A unit eta keeps the quadratic bound tight at
/// moderate scales; seeding eta from the diffuse initial state instead would
/// start the bound at |eta| ~ sqrt(p/2) where its curvature has vanished.
inline VariationalState initial_state(const Dataset& data, const FitConfig& config) {
  VariationalState s;
  const Index p = data.p();
  s.mu = config.init == InitKind::ridge ? detail::ridge_warm_start(data)
                                        : Vector::Zero(p);
  s.sigma = Vector::Ones(p);
  s.gamma = Vector::Constant(p, config.prior.slab_weight());
  s.eta = Vector::Ones(data.n());
  return s;
}

/// CAVI fit: each iteration sweeps the coordinates against the incoming bound
/// parameters, then refreshes eta. sequential applies each coordinate update
/// in place, in sweep order; parallel_snapshot computes every coordinate from
/// the iteration-start state and applies them together at the end of the
/// iteration. Stops when both max_j |dgamma_j| and the relative surrogate
/// change drop below tol, or when the early-stop rule fires.
inline FitResult fit(const Dataset& data, const FitConfig& config) {
  data.validate();
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const Index n = data.n(), p = data.p();
  const PriorSpec& prior = config.prior;

  FitResult result;
  VariationalState& st = result.state;
  st = initial_state(data, config);

  const Matrix Xsq = data.X.cwiseProduct(data.X);
  const Vector b_all = data.X.transpose() * (data.y.array() - 0.5).matrix();
  const Vector colsq = Xsq.colwise().sum();

  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});

  Vector m(n), a(n), q(p);
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  double first_drop = std::numeric_limits<double>::quiet_NaN();
  double prev_mean_norm = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    // bound coefficients from the incoming eta; m recomputed from scratch so
    // per-coordinate drift cannot build up across sweeps
    m = data.X * (st.gamma.array() * st.mu.array()).matrix();
    for (Index i = 0; i < n; ++i) a[i] = jj_coefficient(st.eta[i]);
    q = Xsq.transpose() * a;

    if (config.shuffle_sweep) {
      Rng rng(config.seed, static_cast<std::uint64_t>(iter), RngPurpose::sweep_order);
      for (Index j = p - 1; j > 0; --j)
        std::swap(order[j], order[rng.below(static_cast<std::uint64_t>(j + 1))]);
    }

    const Vector gamma_before = st.gamma;

    // cross excludes coordinate j, so one evaluation serves both the
    // (mu, sigma) minimization and the gamma update that follows it
    auto make_terms = [&](Index j, double mu_in, double gamma_in,
                          const Vector& m_ref) {
      CoordTerms t;
      t.q = q[j];
      t.b = b_all[j];
      t.cross = colsq[j] == 0.0
                    ? 0.0
                    : (a.array() * data.X.col(j).array() * m_ref.array()).sum() -
                          gamma_in * mu_in * t.q;
      return t;
    };
    auto solve_coord = [&](Index j, const CoordTerms& t, double mu_in,
                           double sigma_in) {
      detail::CoordUpdate u;
      if (colsq[j] == 0.0) {
        std::tie(u.mu, u.sigma) = slab_prior_optimum(prior);
      } else {
        u = detail::minimize_coord(t, prior, mu_in, sigma_in, config.opt);
      }
      return u;
    };

    if (config.update_order == UpdateOrder::sequential) {
      for (Index idx = 0; idx < p; ++idx) {
        const Index j = order[idx];
        const double mu_in = st.mu[j], sigma_in = st.sigma[j], g_in = st.gamma[j];
        const CoordTerms t = make_terms(j, mu_in, g_in, m);
        const detail::CoordUpdate u = solve_coord(j, t, mu_in, sigma_in);
        if (u.kept_incoming) ++result.optimizer_warnings;
        const double g_new = detail::gamma_from_terms(t, prior, u.mu, u.sigma);
        const double delta = g_new * u.mu - g_in * mu_in;
        if (delta != 0.0) m += delta * data.X.col(j);
        st.mu[j] = u.mu;
        st.sigma[j] = u.sigma;
        st.gamma[j] = g_new;
      }
    } else {
      const Vector mu0 = st.mu, sigma0 = st.sigma, gamma0 = st.gamma;
      Vector mu_new(p), sigma_new(p), gamma_new(p);
      std::vector<int> warn(static_cast<std::size_t>(p), 0);
      detail::parallel_for(p, config.threads, [&](Index j) {
        const CoordTerms t = make_terms(j, mu0[j], gamma0[j], m);
        const detail::CoordUpdate u = solve_coord(j, t, mu0[j], sigma0[j]);
        if (u.kept_incoming) warn[static_cast<std::size_t>(j)] = 1;
        mu_new[j] = u.mu;
        sigma_new[j] = u.sigma;
        gamma_new[j] = detail::gamma_from_terms(t, prior, u.mu, u.sigma);
      });
      result.optimizer_warnings += std::accumulate(warn.begin(), warn.end(), 0);
      st.mu = mu_new;
      st.sigma = sigma_new;
      st.gamma = gamma_new;
    }

    // eta block: coordinatewise maximizer of the expected bound
    {
      m = data.X * (st.gamma.array() * st.mu.array()).matrix();
      const Vector t1 = Xsq * (st.gamma.array() *
                               (st.mu.array().square() + st.sigma.array().square()))
                                  .matrix();
      const Vector t2 = Xsq * (st.gamma.array().square() * st.mu.array().square()).matrix();
      st.eta = (t1 - t2 + m.cwiseProduct(m)).cwiseMax(0.0).cwiseSqrt();
    }

    const double obj = surrogate_objective(data, st, prior);
    result.objective_trace.push_back(obj);
    if (!std::isfinite(obj)) {
      std::ostringstream msg;
      msg << "fit: surrogate objective non-finite at iteration " << iter
          << " (max |mu| = " << st.mu.cwiseAbs().maxCoeff()
          << ", max sigma = " << st.sigma.maxCoeff()
          << ", max eta = " << st.eta.maxCoeff() << ")";
      throw std::runtime_error(msg.str());
    }

    const double dgamma = (st.gamma - gamma_before).cwiseAbs().maxCoeff();
    const double drop = std::isfinite(prev_obj) ? prev_obj - obj
                                                : std::numeric_limits<double>::infinity();
    const bool obj_settled =
        std::isfinite(prev_obj) &&
        std::fabs(drop) < config.tol * std::max(1.0, std::fabs(prev_obj));
    if (iter == 2) first_drop = drop;
    prev_obj = obj;
    const double mean_norm = (st.gamma.array() * st.mu.array()).matrix().norm();
    if (dgamma < config.tol && obj_settled) {
      result.converged = true;
      break;
    }
    if (config.early_stop && iter >= 3 && std::isfinite(first_drop) &&
        drop < config.early_stop_ratio * first_drop &&
        mean_norm > prev_mean_norm) {
      result.converged = true;
      break;
    }
    prev_mean_norm = mean_norm;
  }

  result.iterations = static_cast<int>(result.objective_trace.size());
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace ssvb
