#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

#include "ssvb/data.hpp"
#include "ssvb/math.hpp"

namespace ssvb {

/// sum_i [ y_i x_i'theta - log(1 + exp(x_i'theta)) ]
inline double log_likelihood(const Dataset& data, const Vector& theta) {
  check_theta(data, theta);
  const Vector u = data.X * theta;
  double ll = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    ll += data.y[i] * u[i] - log1pexp(u[i]);
  }
  return ll;
}

/// Gradient of the log-likelihood: X'(y - sigmoid(X theta)).
inline Vector score(const Dataset& data, const Vector& theta) {
  check_theta(data, theta);
  Vector r = data.X * theta;
  for (Index i = 0; i < r.size(); ++i) r[i] = data.y[i] - sigmoid(r[i]);
  return data.X.transpose() * r;
}

inline double predict_proba(const Vector& x, const Vector& theta) {
  if (x.size() != theta.size())
    throw std::invalid_argument("predict_proba: x has length " +
                                std::to_string(x.size()) + ", theta " +
                                std::to_string(theta.size()));
  return sigmoid(x.dot(theta));
}

/// Quadratic lower bound on the log-likelihood with free parameters eta >= 0:
///   sum_i [ log sigmoid(eta_i) - eta_i/2 + (y_i - 1/2) x_i'theta
///           - A(eta_i) ((x_i'theta)^2 - eta_i^2) ],
/// A(eta) = tanh(eta/2)/(4 eta). Equality holds at eta_i = |x_i'theta|.
inline double jj_lower_bound(const Dataset& data, const Vector& theta,
                             const Vector& eta) {
  check_theta(data, theta);
  if (eta.size() != data.n())
    throw std::invalid_argument("jj_lower_bound: eta length mismatch");
  const Vector u = data.X * theta;
  double f = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double e = eta[i];
    if (e < 0.0)
      throw std::invalid_argument("jj_lower_bound: eta[" + std::to_string(i) +
                                  "] is negative");
    const double a = jj_coefficient(e);
    f += log_sigmoid(e) - 0.5 * e + (data.y[i] - 0.5) * u[i] -
         a * (u[i] * u[i] - e * e);
  }
  return f;
}

}  // namespace ssvb
