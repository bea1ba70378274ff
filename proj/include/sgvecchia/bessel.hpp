/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "sgvecchia/error.hpp"

namespace sgvecchia {

/// Consecutive-order pair K_a(x), K_{a+1}(x) of the modified Bessel function of the second kind.
struct BesselPair {
  double k;
  double k_next;
};

namespace detail {

// Taylor coefficients of 1/Gamma(z) = sum_{j>=1} c_j z^j.
inline constexpr std::array<double, 27> kRecipGammaCoef = {
    0.0,
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
};

/// Temme's auxiliary gamma terms for |mu| <= 1/2:
///   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu),  gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2.
struct TemmeGamma {
  double gam1;
  double gam2;
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

inline TemmeGamma temme_gamma(double mu) {
  // 1/Gamma(1+mu) = sum_j c_j mu^{j-1}; split into even and odd powers of mu.
  const double mu2 = mu * mu;
  double odd = 0.0, even = 0.0;
  for (int j = static_cast<int>(kRecipGammaCoef.size()) - 1; j >= 1; --j) {
    if (j % 2 == 1) {
      odd = odd * mu2 + kRecipGammaCoef[j];
    } else {
      even = even * mu2 + kRecipGammaCoef[j];
    }
  }
  // odd = c1 + c3 mu^2 + ..., even = c2 + c4 mu^2 + ...
  TemmeGamma g;
  g.gam1 = -even;
  g.gam2 = odd;
  g.gampl = g.gam2 - mu * g.gam1;
  g.gammi = g.gam2 + mu * g.gam1;
  return g;
}

/// K_mu and K_{mu+1} for |mu| <= 1/2 and x > 0.
inline BesselPair bessel_k_base(double mu, double x) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxIter = 100000;
  constexpr double kPi = std::numbers::pi;
  if (x <= 2.0) {
    // Temme's series.
    const double x2 = 0.5 * x;
    const double pimu = kPi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const TemmeGamma g = temme_gamma(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu * mu);
      c *= d / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return {sum, sum1 * 2.0 / x};
  }
  // Steed's continued fraction CF2.
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1, c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  const double kmu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
  return {kmu, kmu * (mu + x + 0.5 - a1 * h) / x};
}

}  // namespace detail

/// K_a(x) and K_{a+1}(x) for any real order a and x > 0.
///
/// The order is reduced to |mu| <= 1/2, evaluated with Temme's series (x <= 2) or Steed's
/// continued fraction (x > 2), then carried up by K_{v+1} = K_{v-1} + (2v/x) K_v.
inline BesselPair bessel_k_pair(double a, double x) {
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
  if (a < -0.5) {
    // K_{-v} = K_v: (K_a, K_{a+1}) = (K_{b+1}, K_b) with b = -a-1 >= -1/2.
    const BesselPair r = bessel_k_pair(-a - 1.0, x);
    return {r.k_next, r.k};
  }
  const int steps = static_cast<int>(std::floor(a + 0.5));
  const double mu = a - steps;
  BesselPair r = detail::bessel_k_base(mu, x);
  double order = mu;
  for (int i = 0; i < steps; ++i) {
    const double next = r.k + 2.0 * (order + 1.0) / x * r.k_next;
    r.k = r.k_next;
    r.k_next = next;
    order += 1.0;
  }
  return r;
}

/// Modified Bessel function of the second kind K_nu(x), x > 0.
inline double bessel_k(double nu, double x) { return bessel_k_pair(nu, x).k; }

}  // namespace sgvecchia
