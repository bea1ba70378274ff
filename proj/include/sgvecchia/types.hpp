/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sgvecchia/error.hpp"

namespace sgvecchia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using Vector4d = Eigen::Vector4d;
using Matrix4d = Eigen::Matrix4d;

/// Position of each covariance parameter inside 4-vectors and 4x4 blocks.
enum ThetaIndex : int { kSigma2 = 0, kRho = 1, kNu = 2, kTau2 = 3 };
inline constexpr int kNumTheta = 4;
inline constexpr std::array<const char*, kNumTheta> kThetaNames = {"sigma2", "rho", "nu", "tau2"};

/// Index of the unordered pair (a, b) in the packed upper triangle of a 4x4 symmetric array.
constexpr int pair_index(int a, int b) {
  if (a > b) std::swap(a, b);
  return a * kNumTheta - a * (a - 1) / 2 + (b - a);
}
inline constexpr int kNumThetaPairs = 10;

/// Observations Y at planar sites with covariate rows X (intercept column included by the caller).
struct SpatialDataset {
  Coords coords;
  VectorXd y;
  MatrixXd X;

  Index n() const { return y.size(); }
  Index p() const { return X.cols(); }

  /// Throws DomainError on mismatched row counts, empty data, non-finite values or duplicate sites.
  void validate() const {
    const Index rows = y.size();
    if (rows < 1) throw DomainError("dataset is empty");
    if (coords.rows() != rows || X.rows() != rows) {
      throw DomainError("coords, y and X must have the same number of rows");
    }
    if (!coords.allFinite() || !y.allFinite() || !X.allFinite()) {
      throw DomainError("dataset contains non-finite values");
    }
    std::vector<Index> idx(static_cast<std::size_t>(rows));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      return coords(a, 0) != coords(b, 0) ? coords(a, 0) < coords(b, 0) : coords(a, 1) < coords(b, 1);
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const Index a = idx[k - 1], b = idx[k];
      if (coords(a, 0) == coords(b, 0) && coords(a, 1) == coords(b, 1)) {
        throw DomainError("duplicate site at rows " + std::to_string(std::min(a, b)) + " and " +
                          std::to_string(std::max(a, b)));
      }
    }
  }
};

/// Matern covariance parameters (sigma2, rho, nu, tau2).
struct CovarianceParams {
  double sigma2 = 1.0;
  double rho = 1.0;
  double nu = 0.5;
  double tau2 = 0.1;

  Vector4d as_vector() const { return {sigma2, rho, nu, tau2}; }

  static CovarianceParams from_vector(const Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

  bool strictly_positive() const { return sigma2 > 0 && rho > 0 && nu > 0 && tau2 > 0; }

  /// Kernel evaluation and simulation accept a zero nugget.
  void require_kernel_domain() const {
    if (!(sigma2 > 0 && rho > 0 && nu > 0 && tau2 >= 0) || !std::isfinite(sigma2 + rho + nu + tau2)) {
      throw DomainError("covariance parameters out of domain (sigma2, rho, nu > 0; tau2 >= 0)");
    }
  }

  void require_positive() const {
    if (!strictly_positive() || !std::isfinite(sigma2 + rho + nu + tau2)) {
      throw DomainError("covariance parameters must all be strictly positive");
    }
  }
};

/// Fixed-effect coefficients.
struct RegressionParams {
  VectorXd beta;
};

/// Log coordinates (log sigma2, log rho, log nu, log tau2) used by every sampler.
inline Vector4d to_unconstrained(const CovarianceParams& theta) {
  theta.require_positive();
  return theta.as_vector().array().log().matrix();
}

inline CovarianceParams from_unconstrained(const Vector4d& eta) {
  return CovarianceParams::from_vector(eta.array().exp().matrix());
}

}  // namespace sgvecchia
