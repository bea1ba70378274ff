/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sgvecchia/error.hpp"

namespace sgvecchia {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // zero-variance series; ess is then n
};

/// Effective sample size with Geyer's initial positive sequence: autocorrelation pairs
/// rho_{2k} + rho_{2k+1} are summed while positive.
inline EssResult ess(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw DomainError("ess: need at least 10 values");
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mu;
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = acov(0);
  EssResult r;
  if (!(g0 > 0.0)) {
    r.ess = static_cast<double>(n);
    r.degenerate = true;
    return r;
  }
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (acov(2 * k) + acov(2 * k + 1)) / g0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  r.ess = std::clamp(nd / std::max(tau, 1e-300), 1.0, nd);
  return r;
}

inline EssResult ess(const std::vector<double>& x) { return ess(std::span<const double>(x)); }

inline double ess_per_min(const std::vector<double>& x, double wall_ms) {
  if (!(wall_ms > 0.0)) throw DomainError("ess_per_min: wall time must be positive");
  return ess(x).ess / (wall_ms / 60000.0);
}

/// Linear-interpolation sample quantile.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

inline Interval equal_tailed_interval(const std::vector<double>& draws, double level = 0.95) {
  const double a = 0.5 * (1.0 - level);
  return {quantile(draws, a), quantile(draws, 1.0 - a)};
}

inline bool interval_coverage(const std::vector<double>& draws, double truth, double level = 0.95) {
  return equal_tailed_interval(draws, level).contains(truth);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw DomainError("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Mean squared deviation of replicate estimates from the truth.
inline double param_mse(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw DomainError("param_mse: empty input");
  double s = 0.0;
  for (double e : estimates) s += (e - truth) * (e - truth);
  return s / static_cast<double>(estimates.size());
}

/// Monte Carlo standard error of param_mse (sd of squared errors / sqrt(R)).
inline double mc_se(const std::vector<double>& estimates, double truth) {
  const std::size_t R = estimates.size();
  if (R < 2) return 0.0;
  const double m = param_mse(estimates, truth);
  double s = 0.0;
  for (double e : estimates) {
    const double d = (e - truth) * (e - truth) - m;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(R - 1) / static_cast<double>(R));
}

inline double mse(const std::vector<double>& pred, const std::vector<double>& obs) {
  if (pred.empty() || pred.size() != obs.size()) throw DomainError("mse: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - obs[i]) * (pred[i] - obs[i]);
  return s / static_cast<double>(pred.size());
}

/// Squared Pearson correlation.
inline double r2(const std::vector<double>& pred, const std::vector<double>& obs) {
  if (pred.size() < 2 || pred.size() != obs.size()) throw DomainError("r2: need two equal-length series");
  const double mp = mean(pred), mo = mean(obs);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sxy += (pred[i] - mp) * (obs[i] - mo);
    sxx += (pred[i] - mp) * (pred[i] - mp);
    syy += (obs[i] - mo) * (obs[i] - mo);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return sxy * sxy / (sxx * syy);
}

}  // namespace sgvecchia
