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
#include <array>
#include <cmath>
#include <numbers>

#include "sgvecchia/bessel.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

/// How many theta-derivatives a kernel evaluation must provide.
enum class DerivOrder { kNone = 0, kFirst = 1, kSecond = 2 };

/// Beyond this scaled distance the correlation is treated as exactly zero.
inline constexpr double kMaternCutoff = 700.0;

/// log of 1 / (Gamma(nu) 2^(nu-1)).
inline double matern_log_normalizer(double nu) { return (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu); }

/// Matern correlation K(d) = (d/rho)^nu K_nu(d/rho) / (Gamma(nu) 2^(nu-1)), with K(0) = 1.
inline double matern_corr(double d, double rho, double nu) {
  if (d < 0.0) throw DomainError("matern_corr: negative distance");
  if (!(rho > 0.0) || !(nu > 0.0)) throw DomainError("matern_corr: rho and nu must be positive");
  if (d == 0.0) return 1.0;
  const double u = d / rho;
  if (u > kMaternCutoff) return 0.0;
  return std::exp(matern_log_normalizer(nu) + nu * std::log(u)) * bessel_k(nu, u);
}

/// Correlation and its (rho, nu) derivatives at one distance.
struct MaternTerms {
  double k = 0.0;
  double d_rho = 0.0;
  double d_nu = 0.0;
  double d2_rho = 0.0;
  double d2_rho_nu = 0.0;
  double d2_nu = 0.0;
};

/// Evaluates Matern correlation terms for fixed (rho, nu).
///
/// rho-derivatives are analytic through d/du[u^v K_v(u)] = -u^v K_{v-1}(u); nu-derivatives
/// (and the mixed rho-nu term) are central differences with step nu_step(nu).
class MaternEvaluator {
 public:
  MaternEvaluator(double rho, double nu, DerivOrder order)
      : rho_(rho), nu_(nu), h_(nu_step(nu)), order_(order),
        log_c_(matern_log_normalizer(nu)),
        log_c_plus_(matern_log_normalizer(nu + h_)),
        log_c_minus_(matern_log_normalizer(nu - h_)) {
    if (!(rho > 0.0) || !(nu > 0.0)) throw DomainError("MaternEvaluator: rho and nu must be positive");
  }

  static double nu_step(double nu) { return 1e-4 * std::max(1.0, nu); }

  DerivOrder order() const { return order_; }

  MaternTerms operator()(double d) const {
    MaternTerms t;
    if (d == 0.0) {
      t.k = 1.0;
      return t;
    }
    const double u = d / rho_;
    if (u > kMaternCutoff) return t;
    const bool second = order_ == DerivOrder::kSecond;
    const Local mid = at(u, nu_, log_c_, second);
    t.k = mid.k;
    if (order_ == DerivOrder::kNone) return t;
    t.d_rho = mid.d_rho;
    const Local up = at(u, nu_ + h_, log_c_plus_, false);
    const Local dn = at(u, nu_ - h_, log_c_minus_, false);
    t.d_nu = (up.k - dn.k) / (2.0 * h_);
    if (second) {
      t.d2_rho = mid.d2_rho;
      t.d2_nu = (up.k - 2.0 * mid.k + dn.k) / (h_ * h_);
      t.d2_rho_nu = (up.d_rho - dn.d_rho) / (2.0 * h_);
    }
    return t;
  }

 private:
  struct Local {
    double k = 0.0;
    double d_rho = 0.0;
    double d2_rho = 0.0;
  };

  Local at(double u, double nu, double log_c, bool want_rho2) const {
    const BesselPair kb = bessel_k_pair(nu - 1.0, u);  // K_{nu-1}, K_nu
    const double base = std::exp(log_c + nu * std::log(u));
    Local l;
    l.k = base * kb.k_next;
    l.d_rho = base * u * kb.k / rho_;
    if (want_rho2) l.d2_rho = base * (u * u * kb.k_next - (2.0 * nu + 1.0) * u * kb.k) / (rho_ * rho_);
    return l;
  }

  double rho_;
  double nu_;
  double h_;
  DerivOrder order_;
  double log_c_;
  double log_c_plus_;
  double log_c_minus_;
};

/// Second-derivative slots that are identically zero: any pair with tau2, and (sigma2, sigma2).
constexpr bool second_derivative_is_zero(int a, int b) {
  return a == kTau2 || b == kTau2 || (a == kSigma2 && b == kSigma2);
}

/// Sigma = sigma2 K + tau2 I over k sites, its theta-derivatives and optional second derivatives.
struct KernelMatrices {
  MatrixXd cov;
  std::array<MatrixXd, kNumTheta> d_cov;
  std::array<MatrixXd, kNumThetaPairs> d2_cov;  // packed by pair_index(a, b)
  bool has_derivs = false;
  bool has_second = false;
};

/// Fills `out` from per-pair terms; `terms(i, j)` must return MaternTerms for i > j.
template <typename PairTerms>
void fill_kernel_matrices(Index k, const CovarianceParams& theta, DerivOrder order, PairTerms&& terms,
                          KernelMatrices& out) {
  const double s2 = theta.sigma2;
  out.has_derivs = order != DerivOrder::kNone;
  out.has_second = order == DerivOrder::kSecond;
  out.cov.resize(k, k);
  if (out.has_derivs) {
    for (auto& m : out.d_cov) m.resize(k, k);
  }
  if (out.has_second) {
    for (int a = 0; a < kNumTheta; ++a) {
      for (int b = a; b < kNumTheta; ++b) {
        out.d2_cov[pair_index(a, b)].setZero(k, k);
      }
    }
  }
  for (Index i = 0; i < k; ++i) {
    out.cov(i, i) = s2 + theta.tau2;
    if (out.has_derivs) {
      out.d_cov[kSigma2](i, i) = 1.0;
      out.d_cov[kRho](i, i) = 0.0;
      out.d_cov[kNu](i, i) = 0.0;
      out.d_cov[kTau2](i, i) = 1.0;
    }
    for (Index j = 0; j < i; ++j) {
      const MaternTerms t = terms(i, j);
      auto put = [&](MatrixXd& m, double v) { m(i, j) = v; m(j, i) = v; };
      put(out.cov, s2 * t.k);
      if (!out.has_derivs) continue;
      put(out.d_cov[kSigma2], t.k);
      put(out.d_cov[kRho], s2 * t.d_rho);
      put(out.d_cov[kNu], s2 * t.d_nu);
      put(out.d_cov[kTau2], 0.0);
      if (!out.has_second) continue;
      put(out.d2_cov[pair_index(kSigma2, kRho)], t.d_rho);
      put(out.d2_cov[pair_index(kSigma2, kNu)], t.d_nu);
      put(out.d2_cov[pair_index(kRho, kRho)], s2 * t.d2_rho);
      put(out.d2_cov[pair_index(kRho, kNu)], s2 * t.d2_rho_nu);
      put(out.d2_cov[pair_index(kNu, kNu)], s2 * t.d2_nu);
    }
  }
}

/// Covariance block and derivatives for k sites given as rows of `coords`.
inline KernelMatrices cov_block(const Coords& coords, const CovarianceParams& theta, bool want_second,
                                DerivOrder order = DerivOrder::kFirst) {
  theta.require_kernel_domain();
  const Index k = coords.rows();
  if (k < 1) throw DomainError("cov_block: need at least one site");
  if (want_second) order = DerivOrder::kSecond;
  const MaternEvaluator eval(theta.rho, theta.nu, order);
  KernelMatrices out;
  fill_kernel_matrices(k, theta, order, [&](Index i, Index j) {
    const double d = (coords.row(i) - coords.row(j)).norm();
    if (d == 0.0) throw DegenerateMatrixError("cov_block: duplicate coordinates in block");
    return eval(d);
  }, out);
  return out;
}

}  // namespace sgvecchia
