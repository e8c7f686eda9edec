#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "ssvb/math.hpp"

namespace ssvb {

enum class SlabFamily { laplace, gauss };

inline std::string to_string(SlabFamily f) {
  return f == SlabFamily::laplace ? "laplace" : "gauss";
}

inline SlabFamily slab_from_string(const std::string& s) {
  if (s == "laplace") return SlabFamily::laplace;
  if (s == "gauss" || s == "gaussian") return SlabFamily::gauss;
  throw std::invalid_argument("unknown slab family: " + s);
}

/// Spike-and-slab prior: per coordinate (1-w) delta_0 + w * slab, with
/// w ~ Beta(a0, b0). The slab is Laplace(nu, lambda) or N(0, sigma0^2).
struct PriorSpec {
  SlabFamily slab = SlabFamily::laplace;
  double lambda = 1.0;  // Laplace rate
  double nu = 0.0;      // Laplace location
  double sigma0 = 1.0;  // Gaussian slab sd
  double a0 = 1.0;
  double b0 = 1.0;

  double slab_weight() const { return a0 / (a0 + b0); }

  void validate() const {
    if (slab == SlabFamily::laplace && !(lambda > 0.0))
      throw std::invalid_argument("PriorSpec: lambda must be positive");
    if (slab == SlabFamily::gauss && !(sigma0 > 0.0))
      throw std::invalid_argument("PriorSpec: sigma0 must be positive");
    if (!(a0 > 0.0) || !(b0 > 0.0))
      throw std::invalid_argument("PriorSpec: a0, b0 must be positive");
    if (!std::isfinite(nu))
      throw std::invalid_argument("PriorSpec: nu must be finite");
  }
};

/// lambda * E|theta - nu| for theta ~ N(mu, sigma^2); |theta - nu| is
/// folded Gaussian, giving
///   lambda sigma sqrt(2/pi) exp(-(mu-nu)^2 / (2 sigma^2))
///     + lambda (mu - nu) erf((mu - nu) / (sqrt(2) sigma)).
inline double folded_abs_moment(double mu, double sigma, double nu,
                                double lambda) {
  if (!(sigma > 0.0)) throw std::invalid_argument("folded_abs_moment: sigma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("folded_abs_moment: lambda must be positive");
  const double d = mu - nu;
  const double z = d / sigma;
  return lambda * sigma * kSqrt2OverPi * std::exp(-0.5 * z * z) +
         lambda * d * std::erf(z / kSqrt2);
}

/// KL(N(mu, sigma^2) || slab), all constants included. Both slab families use
/// the same convention (nothing dropped) so gamma updates built on this term
/// are directly comparable across families.
///   Laplace: -log(lambda sigma) + lambda E|theta - nu| + log 2 - (1 + log 2pi)/2
///   Gauss:    log(sigma0/sigma) + (mu^2 + sigma^2) / (2 sigma0^2) - 1/2
inline double slab_kl_term(double mu, double sigma, const PriorSpec& prior) {
  if (!(sigma > 0.0)) throw std::invalid_argument("slab_kl_term: sigma must be positive");
  if (prior.slab == SlabFamily::laplace) {
    return -std::log(prior.lambda * sigma) +
           folded_abs_moment(mu, sigma, prior.nu, prior.lambda) + kLog2 -
           0.5 * (1.0 + kLog2Pi);
  }
  const double s0 = prior.sigma0;
  return std::log(s0 / sigma) + (mu * mu + sigma * sigma) / (2.0 * s0 * s0) -
         0.5;
}

/// Minimizer of slab_kl_term over (mu, sigma): the variational slab that is
/// KL-closest to the prior slab. Used for columns that carry no data signal.
inline std::pair<double, double> slab_prior_optimum(const PriorSpec& prior) {
  if (prior.slab == SlabFamily::laplace) {
    return {prior.nu, std::sqrt(0.5 * kPi) / prior.lambda};
  }
  return {0.0, prior.sigma0};
}

}  // namespace ssvb
