#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ssvb/cavi.hpp"
#include "ssvb/math.hpp"
#include "ssvb/rng.hpp"

namespace ssvb {

struct Summary {
  Vector posterior_mean;                        // gamma_j mu_j
  std::vector<Index> selected;                  // {j : gamma_j > threshold}
  std::vector<std::array<double, 2>> intervals; // per-coordinate (lo, hi)
  double ci_level = 0.95;
  double threshold = 0.5;
  // settings predictive_mean consumers should use with this summary
  int predictive_samples = 10000;
  std::uint64_t predictive_seed = 0;
};

inline Vector posterior_mean(const VariationalState& state) {
  return (state.gamma.array() * state.mu.array()).matrix();
}

/// Indices with gamma_j strictly above the threshold; ties are excluded.
inline std::vector<Index> select(const VariationalState& state, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("select: threshold must lie in (0,1)");
  std::vector<Index> out;
  for (Index j = 0; j < state.p(); ++j)
    if (state.gamma[j] > threshold) out.push_back(j);
  return out;
}

struct PredictiveMean {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of E_Q sigmoid(x'theta); each coordinate is sampled
/// as Bernoulli(gamma_j) * N(mu_j, sigma_j^2).
inline PredictiveMean predictive_mean(const VariationalState& state,
                                      const Vector& x, int n_samples,
                                      std::uint64_t seed) {
  if (x.size() != state.p())
    throw std::invalid_argument("predictive_mean: x length mismatch");
  if (n_samples < 1)
    throw std::invalid_argument("predictive_mean: n_samples must be >= 1");
  Rng rng(seed, 0, RngPurpose::predictive);
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double u = 0.0;
    for (Index j = 0; j < state.p(); ++j) {
      if (rng.bernoulli(state.gamma[j]))
        u += x[j] * rng.normal(state.mu[j], state.sigma[j]);
    }
    const double v = sigmoid(u);
    sum += v;
    sumsq += v * v;
  }
  PredictiveMean out;
  out.mean = sum / n_samples;
  if (n_samples > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * sum / n_samples) / (n_samples - 1));
    out.std_error = std::sqrt(var / n_samples);
  }
  return out;
}

namespace detail {

/// Marginal mass of [lo, hi] under gamma N(mu, sigma^2) + (1-gamma) delta_0.
inline double mixture_interval_mass(double gamma, double mu, double sigma,
                                    double lo, double hi) {
  double mass = gamma * (norm_cdf((hi - mu) / sigma) - norm_cdf((lo - mu) / sigma));
  if (lo <= 0.0 && 0.0 <= hi) mass += 1.0 - gamma;
  return mass;
}

}  // namespace detail

/// Smallest interval with marginal mass >= level under the spike-and-slab
/// marginal of coordinate j. Two candidates are compared: the shortest
/// 0-containing interval of Gaussian mass (level - (1-gamma))/gamma, and the
/// pure Gaussian highest-density interval of mass level/gamma when it
/// excludes 0.
inline std::array<double, 2> credible_interval(const VariationalState& state,
                                               Index j, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_interval: level must lie in (0,1)");
  const double g = state.gamma[j];
  const double mu = state.mu[j];
  const double sd = state.sigma[j];
  if (1.0 - g >= level) return {0.0, 0.0};

  // candidate containing 0
  const double m_inc = (level - (1.0 - g)) / g;
  double lo_a, hi_a;
  {
    const double z = norm_ppf(0.5 * (1.0 + m_inc));
    lo_a = mu - z * sd;
    hi_a = mu + z * sd;
    if (!(lo_a <= 0.0 && 0.0 <= hi_a)) {
      // pin the near endpoint at 0 and extend the far one
      if (mu > 0.0) {
        lo_a = 0.0;
        hi_a = mu + sd * norm_ppf(m_inc + norm_cdf(-mu / sd));
      } else {
        hi_a = 0.0;
        lo_a = mu - sd * norm_ppf(m_inc + norm_cdf(mu / sd));
      }
    }
  }
  double best_lo = lo_a, best_hi = hi_a;

  // candidate excluding 0: only available when the slab alone suffices
  if (g >= level) {
    const double z = norm_ppf(0.5 * (1.0 + level / g));
    const double lo_b = mu - z * sd;
    const double hi_b = mu + z * sd;
    if ((lo_b > 0.0 || hi_b < 0.0) && hi_b - lo_b < best_hi - best_lo) {
      best_lo = lo_b;
      best_hi = hi_b;
    }
  }
  return {best_lo, best_hi};
}

inline Summary make_summary(const VariationalState& state, double threshold,
                            double ci_level) {
  Summary s;
  s.threshold = threshold;
  s.ci_level = ci_level;
  s.posterior_mean = posterior_mean(state);
  s.selected = select(state, threshold);
  s.intervals.reserve(static_cast<std::size_t>(state.p()));
  for (Index j = 0; j < state.p(); ++j)
    s.intervals.push_back(credible_interval(state, j, ci_level));
  return s;
}

}  // namespace ssvb
