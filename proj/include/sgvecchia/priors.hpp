/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>

#include <cmath>
#include <numbers>
#include <utility>

#include "sgvecchia/types.hpp"

namespace sgvecchia {

/// Gamma(shape, rate) on (0, inf).
struct GammaPrior {
  double shape;
  double rate;

  double log_density(double x) const {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
  double d_log_density(double x) const { return (shape - 1.0) / x - rate; }
  double quantile(double q) const {
    return boost::math::quantile(boost::math::gamma_distribution<double>(shape, 1.0 / rate), q);
  }
  double cdf(double x) const {
    return boost::math::cdf(boost::math::gamma_distribution<double>(shape, 1.0 / rate), x);
  }
};

/// LogNormal(meanlog, sdlog) on (0, inf).
struct LogNormalPrior {
  double meanlog;
  double sdlog;

  double log_density(double x) const {
    const double z = (std::log(x) - meanlog) / sdlog;
    return -std::log(x) - std::log(sdlog) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
  }
  double d_log_density(double x) const {
    return -(1.0 + (std::log(x) - meanlog) / (sdlog * sdlog)) / x;
  }
  double quantile(double q) const {
    return boost::math::quantile(boost::math::lognormal_distribution<double>(meanlog, sdlog), q);
  }
  double cdf(double x) const {
    return boost::math::cdf(boost::math::lognormal_distribution<double>(meanlog, sdlog), x);
  }
};

/// Priors on theta; beta carries a flat improper prior and contributes nothing.
struct PriorSpec {
  GammaPrior sigma2{0.1, 0.1};
  GammaPrior rho{9.0, 2.0};
  LogNormalPrior nu{1.0, 1.0};
  GammaPrior tau2{0.1, 0.1};
};

/// Log prior of theta plus the log-Jacobian sum(log theta_j) of the exp map, and its
/// gradient with respect to eta = log(theta).
inline std::pair<double, Vector4d> log_prior_and_grad(const CovarianceParams& theta, const PriorSpec& spec) {
  theta.require_positive();
  const Vector4d t = theta.as_vector();
  double value = spec.sigma2.log_density(t[kSigma2]) + spec.rho.log_density(t[kRho]) +
                 spec.nu.log_density(t[kNu]) + spec.tau2.log_density(t[kTau2]);
  value += t.array().log().sum();

  Vector4d grad;
  grad[kSigma2] = t[kSigma2] * spec.sigma2.d_log_density(t[kSigma2]) + 1.0;
  grad[kRho] = t[kRho] * spec.rho.d_log_density(t[kRho]) + 1.0;
  grad[kNu] = t[kNu] * spec.nu.d_log_density(t[kNu]) + 1.0;
  grad[kTau2] = t[kTau2] * spec.tau2.d_log_density(t[kTau2]) + 1.0;
  return {value, grad};
}

}  // namespace sgvecchia
