#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "ssvb/data.hpp"
#include "ssvb/math.hpp"
#include "ssvb/rng.hpp"

namespace ssvb {

/// max_j ||X_.j||_2
inline double design_norm(const Matrix& X) {
  return std::sqrt(X.colwise().squaredNorm().maxCoeff());
}

/// max |X_ij|
inline double design_max_entry(const Matrix& X) {
  return X.cwiseAbs().maxCoeff();
}

/// Curvature weights W_ii = sigmoid(x_i'theta0)(1 - sigmoid(x_i'theta0)).
inline Vector w_matrix(const Dataset& data, const Vector& theta0) {
  check_theta(data, theta0);
  Vector w = data.X * theta0;
  for (Index i = 0; i < w.size(); ++i) {
    const double s = sigmoid(w[i]);
    w[i] = s * (1.0 - s);
  }
  return w;
}

/// Largest absolute correlation between distinct columns.
inline double mutual_coherence(const Matrix& X) {
  const Index p = X.cols();
  Vector norms = X.colwise().norm();
  for (Index j = 0; j < p; ++j)
    if (norms[j] == 0.0)
      throw std::invalid_argument("mutual_coherence: column " +
                                  std::to_string(j) + " is zero");
  if (p < 2) return 0.0;
  const Matrix gram = X.transpose() * X;
  double mc = 0.0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      mc = std::max(mc, std::fabs(gram(i, j)) / (norms[i] * norms[j]));
  return std::min(mc, 1.0);
}

struct SubsetOpts {
  std::uint64_t enumeration_budget = 200000;  // max subsets enumerated exactly
  std::uint64_t sample_count = 50000;         // random subsets when over budget
  bool allow_sampling = true;
  std::uint64_t seed = 1;
};

/// Either the exact extreme value over all size-s subsets, or a sampled bound
/// (lower bound for maxima, upper bound for minima).
struct KappaResult {
  double value = 0.0;
  bool exact = true;
};

namespace detail {

inline double binomial_count(Index p, Index s, double cap) {
  double c = 1.0;
  for (Index i = 0; i < s; ++i) {
    c *= static_cast<double>(p - i) / static_cast<double>(i + 1);
    if (c > cap) return cap + 1.0;
  }
  return c;
}

inline bool next_combination(std::vector<Index>& idx, Index p) {
  const Index s = static_cast<Index>(idx.size());
  Index i = s - 1;
  while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - s + i) --i;
  if (i < 0) return false;
  ++idx[static_cast<std::size_t>(i)];
  for (Index k = i + 1; k < s; ++k)
    idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  return true;
}

inline std::vector<Index> random_subset(Index p, Index s, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) pool[static_cast<std::size_t>(j)] = j;
  for (Index k = 0; k < s; ++k) {
    const Index pick =
        k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
  }
  return {pool.begin(), pool.begin() + s};
}

/// Extreme eigenvalue of X_S' diag(w) X_S over subsets of size exactly s;
/// pass w empty for the unweighted Gram matrix.
template <typename Extreme>
KappaResult subset_eig_extreme(const Matrix& X, const Vector& w, Index s,
                               const SubsetOpts& opts, Extreme&& pick,
                               double init) {
  const Index p = X.cols();
  if (s < 1 || s > p)
    throw std::invalid_argument("subset extreme: need 1 <= s <= p");
  KappaResult out;
  out.value = init;

  auto eval_subset = [&](const std::vector<Index>& idx) {
    Matrix sub(X.rows(), s);
    for (Index k = 0; k < s; ++k)
      sub.col(k) = X.col(idx[static_cast<std::size_t>(k)]);
    Matrix gram;
    if (w.size() > 0)
      gram = sub.transpose() * w.asDiagonal() * sub;
    else
      gram = sub.transpose() * sub;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    out.value = pick(out.value, eig.eigenvalues());
  };

  const double count =
      binomial_count(p, s, static_cast<double>(opts.enumeration_budget));
  if (count <= static_cast<double>(opts.enumeration_budget)) {
    std::vector<Index> idx(static_cast<std::size_t>(s));
    for (Index k = 0; k < s; ++k) idx[static_cast<std::size_t>(k)] = k;
    do {
      eval_subset(idx);
    } while (next_combination(idx, p));
    return out;
  }
  if (!opts.allow_sampling)
    throw std::invalid_argument(
        "subset extreme: enumeration over budget and sampling disabled");
  out.exact = false;
  Rng rng(opts.seed, static_cast<std::uint64_t>(s), RngPurpose::subsets);
  for (std::uint64_t t = 0; t < opts.sample_count; ++t)
    eval_subset(random_subset(p, s, rng));
  return out;
}

}  // namespace detail

/// kappa_bar(s) = max_{|S| <= s} lambda_max(X_S' X_S) / ||X||^2. Monotone in
/// the subset, so only size-s subsets are scanned. Sampling yields a lower
/// bound.
inline KappaResult kappa_bar(const Matrix& X, Index s,
                             const SubsetOpts& opts = {}) {
  const double xn2 = design_norm(X);
  if (xn2 == 0.0) throw std::invalid_argument("kappa_bar: X is zero");
  KappaResult r = detail::subset_eig_extreme(
      X, Vector(), s, opts,
      [](double acc, const Vector& ev) { return std::max(acc, ev.maxCoeff()); },
      -std::numeric_limits<double>::infinity());
  r.value /= xn2 * xn2;
  return r;
}

/// kappa_s(s) = min_{|S| <= s} lambda_min(X_S' W X_S) / ||X||^2. Sampling
/// yields an upper bound.
inline KappaResult kappa_s(const Matrix& X, const Vector& w, Index s,
                           const SubsetOpts& opts = {}) {
  if (w.size() != X.rows())
    throw std::invalid_argument("kappa_s: W diagonal length mismatch");
  const double xn2 = design_norm(X);
  if (xn2 == 0.0) throw std::invalid_argument("kappa_s: X is zero");
  KappaResult r = detail::subset_eig_extreme(
      X, w, s, opts,
      [](double acc, const Vector& ev) { return std::min(acc, ev.minCoeff()); },
      std::numeric_limits<double>::infinity());
  r.value /= xn2 * xn2;
  return r;
}

/// Monte Carlo upper bound on the compatibility constant
///   inf { ||W^(1/2) X theta||^2 / (||X||^2 ||theta||^2) :
///         ||theta_{S0^c}||_1 <= 7 ||theta_{S0}||_1 }.
/// The true infimum ranges over the whole cone, so sampled minima can only
/// overestimate it.
inline double kappa_cone_estimate(const Matrix& X, const Vector& w,
                                  const std::vector<Index>& support,
                                  std::uint64_t samples, std::uint64_t seed) {
  if (w.size() != X.rows())
    throw std::invalid_argument("kappa_cone_estimate: W diagonal length mismatch");
  if (support.empty())
    throw std::invalid_argument("kappa_cone_estimate: support must be nonempty");
  const Index p = X.cols();
  std::vector<bool> on(static_cast<std::size_t>(p), false);
  for (Index j : support) {
    if (j < 0 || j >= p)
      throw std::invalid_argument("kappa_cone_estimate: support index out of range");
    on[static_cast<std::size_t>(j)] = true;
  }
  const double xn2 = design_norm(X) * design_norm(X);
  if (xn2 == 0.0) throw std::invalid_argument("kappa_cone_estimate: X is zero");

  Rng rng(seed, 0, RngPurpose::cone);
  const Vector wsqrt = w.cwiseMax(0.0).cwiseSqrt();

  auto project_into_cone = [&](Vector& theta) {
    double l1_on = 0.0, l1_off = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (on[static_cast<std::size_t>(j)])
        l1_on += std::fabs(theta[j]);
      else
        l1_off += std::fabs(theta[j]);
    }
    if (l1_off > 7.0 * l1_on) {
      const double scale = l1_off > 0.0 ? 7.0 * l1_on / l1_off : 0.0;
      for (Index j = 0; j < p; ++j)
        if (!on[static_cast<std::size_t>(j)]) theta[j] *= scale;
    }
  };
  auto ratio = [&](const Vector& theta) {
    const double denom = theta.squaredNorm();
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return (wsqrt.asDiagonal() * (X * theta)).squaredNorm() / (xn2 * denom);
  };

  double best = std::numeric_limits<double>::infinity();
  Vector best_theta = Vector::Zero(p);
  Vector theta(p);
  for (std::uint64_t t = 0; t < samples; ++t) {
    theta.setZero();
    for (Index j = 0; j < p; ++j)
      if (on[static_cast<std::size_t>(j)]) theta[j] = rng.normal();
    // off-support mass is u * 7 * ||theta_S0||_1 for u ~ U(0,1]; t = 0 stays
    // inside the support to pin the boundary case
    if (static_cast<Index>(support.size()) < p && t > 0) {
      double l1_on = 0.0;
      for (Index j : support) l1_on += std::fabs(theta[j]);
      const double target = rng.uniform01() * 7.0 * l1_on;
      double l1_off = 0.0;
      for (Index j = 0; j < p; ++j) {
        if (!on[static_cast<std::size_t>(j)]) {
          theta[j] = rng.normal();
          l1_off += std::fabs(theta[j]);
        }
      }
      const double scale = l1_off > 0.0 ? target / l1_off : 0.0;
      for (Index j = 0; j < p; ++j)
        if (!on[static_cast<std::size_t>(j)]) theta[j] *= scale;
    }
    const double r = ratio(theta);
    if (r < best) {
      best = r;
      best_theta = theta;
    }
  }

  // local polish so independent runs settle on the same cone minimum rather
  // than on the luck of the raw draw
  if (best_theta.squaredNorm() > 0.0) {
    double step = 0.5;
    const std::uint64_t polish = std::max<std::uint64_t>(samples / 4, 2000);
    for (std::uint64_t t = 0; t < polish; ++t) {
      theta = best_theta;
      for (Index j = 0; j < p; ++j) theta[j] += step * rng.normal();
      project_into_cone(theta);
      const double r = ratio(theta);
      if (r < best) {
        best = r;
        best_theta = theta;
      } else {
        step *= 0.999;
      }
    }
  }
  return best;
}

struct ConditionVerdict {
  double lhs = 0.0;           // ||X||
  double rhs = 0.0;           // alpha * max(...) * s0 * sqrt(log p)
  bool ok = false;
  double kappa_sparse = 0.0;  // kappa((L+1) s0) used on the right-hand side
  bool kappa_sparse_exact = true;
  double kappa_cone = 0.0;    // compatibility estimate (always an upper bound)
  Index restricted_dim = 0;   // min((L+1) s0, p)
};

/// Evaluates ||X|| >= alpha * max(50 (L+2) ||X||_inf / kappa((L+1) s0),
/// 64 / (3 kappa)) * s0 * sqrt(log p) and reports both sides together with
/// the provenance of the kappa inputs.
inline ConditionVerdict check_design_condition(const Matrix& X, const Vector& w,
                                               Index s0, double alpha, double L,
                                               const SubsetOpts& opts = {},
                                               std::uint64_t cone_samples = 20000) {
  if (s0 < 1 || s0 > X.cols())
    throw std::invalid_argument("check_design_condition: need 1 <= s0 <= p");
  ConditionVerdict v;
  v.lhs = design_norm(X);
  v.restricted_dim = std::min<Index>(
      X.cols(), static_cast<Index>(std::ceil((L + 1.0) * static_cast<double>(s0))));
  const KappaResult ks = kappa_s(X, w, v.restricted_dim, opts);
  v.kappa_sparse = ks.value;
  v.kappa_sparse_exact = ks.exact;

  std::vector<Index> support(static_cast<std::size_t>(s0));
  for (Index j = 0; j < s0; ++j) support[static_cast<std::size_t>(j)] = j;
  v.kappa_cone = kappa_cone_estimate(X, w, support, cone_samples, opts.seed);

  const double logp = std::log(static_cast<double>(X.cols()));
  const double inf_term =
      v.kappa_sparse > 0.0
          ? 50.0 * (L + 2.0) * design_max_entry(X) / v.kappa_sparse
          : std::numeric_limits<double>::infinity();
  const double cone_term = v.kappa_cone > 0.0
                               ? 64.0 / (3.0 * v.kappa_cone)
                               : std::numeric_limits<double>::infinity();
  v.rhs = alpha * std::max(inf_term, cone_term) * static_cast<double>(s0) *
          std::sqrt(logp);
  v.ok = v.lhs >= v.rhs;
  return v;
}

struct DesignDiagnostics {
  Index n = 0, p = 0;
  double x_norm = 0.0;
  double x_inf = 0.0;
  double mc = 0.0;
  std::map<Index, KappaResult> kappa_bar;
  std::map<Index, KappaResult> kappa_s;
  double kappa_cone_estimate = 0.0;
  ConditionVerdict condition;
};

inline DesignDiagnostics design_diagnostics(const Matrix& X, const Vector& w,
                                            Index s0, double alpha, double L,
                                            Index max_s,
                                            const SubsetOpts& opts = {},
                                            std::uint64_t cone_samples = 20000) {
  DesignDiagnostics d;
  d.n = X.rows();
  d.p = X.cols();
  d.x_norm = design_norm(X);
  d.x_inf = design_max_entry(X);
  d.mc = mutual_coherence(X);
  max_s = std::min<Index>(max_s, X.cols());
  for (Index s = 1; s <= max_s; ++s) {
    d.kappa_bar[s] = kappa_bar(X, s, opts);
    d.kappa_s[s] = kappa_s(X, w, s, opts);
  }
  d.condition = check_design_condition(X, w, s0, alpha, L, opts, cone_samples);
  d.kappa_cone_estimate = d.condition.kappa_cone;
  return d;
}

}  // namespace ssvb
