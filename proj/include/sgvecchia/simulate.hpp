/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <unordered_map>
#include <vector>

#include "sgvecchia/error.hpp"
#include "sgvecchia/kernel.hpp"
#include "sgvecchia/neighbors.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

struct SimConfig {
  Index n1 = 100;
  Index n2 = 100;
  CovarianceParams theta_true{5.0, 1.0, 1.0, 5.0};
  VectorXd beta_true = (VectorXd(2) << -3.0, 5.0).finished();
  double kappa = 1.0;  // informational; theta_true.tau2 is what is used
  std::uint64_t seed = 1;
  OrderingType ordering = OrderingType::kMaxMin;
  Index maxmin_threshold = 100000;

  Index N() const { return n1 * n2; }
};

/// Simulated dataset plus the latent pieces kept for auditing.
struct SimulatedData {
  SpatialDataset data;
  VectorXd x_raw;  // x_i ~ U(-3, 3); the covariate row is (1, cos x_i)
  VectorXd z;      // latent spatial field
  CovarianceParams theta;
  VectorXd beta;
  std::uint64_t seed = 0;
  std::string method;
  OrderingType ordering = OrderingType::kMaxMin;
};

/// Unit-spaced n1 x n2 grid, x fastest.
inline Coords grid_coords(Index n1, Index n2) {
  Coords c(n1 * n2, 2);
  for (Index j = 0; j < n2; ++j) {
    for (Index i = 0; i < n1; ++i) {
      c(j * n1 + i, 0) = static_cast<double>(i);
      c(j * n1 + i, 1) = static_cast<double>(j);
    }
  }
  return c;
}

/// Range for which the correlation at the grid diagonal is 1e-4 (bisection on log rho).
inline double choose_range_for_grid(double nu, Index n1, Index n2, double target = 1e-4) {
  if (n1 < 2 || n2 < 2) throw DomainError("choose_range_for_grid: grid dimensions must be at least 2");
  const double dmax = std::hypot(static_cast<double>(n1 - 1), static_cast<double>(n2 - 1));
  double lo = std::log(dmax * 1e-6), hi = std::log(dmax * 1e3);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (matern_corr(dmax, std::exp(mid), nu) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

namespace detail {
inline void draw_mean(const SimConfig& cfg, Index N, std::mt19937_64& rng, SimulatedData& out) {
  if (cfg.beta_true.size() != 2) throw DomainError("simulation mean needs beta of length 2");
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  out.x_raw.resize(N);
  for (Index i = 0; i < N; ++i) out.x_raw[i] = unif(rng);
  out.data.X.resize(N, 2);
  out.data.X.col(0).setOnes();
  out.data.X.col(1) = out.x_raw.array().cos().matrix();
}

inline void finish(const SimConfig& cfg, std::mt19937_64& rng, SimulatedData& out) {
  const Index N = out.z.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tau = std::sqrt(cfg.theta_true.tau2);
  out.data.y = out.data.X * cfg.beta_true + out.z;
  for (Index i = 0; i < N; ++i) out.data.y[i] += tau * normal(rng);
  out.theta = cfg.theta_true;
  out.beta = cfg.beta_true;
  out.seed = cfg.seed;
}

/// Cholesky with escalating diagonal jitter for (numerically) semi-definite correlation blocks.
inline Eigen::LLT<MatrixXd> robust_llt(MatrixXd C, double scale) {
  Eigen::LLT<MatrixXd> llt(C);
  double jitter = 1e-12 * scale;
  while (llt.info() != Eigen::Success && jitter < 1e-4 * scale) {
    C.diagonal().array() += jitter;
    llt.compute(C);
    jitter *= 10.0;
  }
  if (llt.info() != Eigen::Success) throw NumericalError("simulation covariance is not positive definite");
  return llt;
}
}  // namespace detail

/// Exact draw through a dense Cholesky of sigma2 K. Limited to N <= 2e4.
inline SimulatedData simulate_exact(const SimConfig& cfg) {
  const Index N = cfg.N();
  if (N > 20000) throw DomainError("simulate_exact: N > 20000 is too large for a dense draw; use simulate_vecchia");
  cfg.theta_true.require_kernel_domain();
  SimulatedData out;
  out.method = "exact";
  out.data.coords = grid_coords(cfg.n1, cfg.n2);
  std::mt19937_64 rng(cfg.seed);
  detail::draw_mean(cfg, N, rng, out);
  MatrixXd C(N, N);
  for (Index i = 0; i < N; ++i) {
    C(i, i) = cfg.theta_true.sigma2;
    for (Index j = 0; j < i; ++j) {
      const double d = (out.data.coords.row(i) - out.data.coords.row(j)).norm();
      C(i, j) = C(j, i) = cfg.theta_true.sigma2 * matern_corr(d, cfg.theta_true.rho, cfg.theta_true.nu);
    }
  }
  const Eigen::LLT<MatrixXd> llt = detail::robust_llt(std::move(C), cfg.theta_true.sigma2);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd e(N);
  for (Index i = 0; i < N; ++i) e[i] = normal(rng);
  out.z = llt.matrixL() * e;
  detail::finish(cfg, rng, out);
  return out;
}

/// Sequential Vecchia draw with m_sim conditioning neighbors; exact when m_sim >= N - 1.
inline SimulatedData simulate_vecchia(const SimConfig& cfg, int m_sim = 120) {
  const Index N = cfg.N();
  cfg.theta_true.require_kernel_domain();
  SimulatedData out;
  out.method = "vecchia";
  out.data.coords = grid_coords(cfg.n1, cfg.n2);
  std::mt19937_64 rng(cfg.seed);
  detail::draw_mean(cfg, N, rng, out);

  const OrderingType ordering =
      (cfg.ordering == OrderingType::kMaxMin && N > cfg.maxmin_threshold) ? OrderingType::kRandom : cfg.ordering;
  out.ordering = ordering;
  std::vector<int> order =
      ordering == OrderingType::kMaxMin ? maxmin_order(out.data.coords) : random_order(N, cfg.seed);
  const ConditioningStructure cs = nearest_ordered_neighbors(out.data.coords, std::move(order), std::max(1, m_sim));

  // grids repeat distances heavily; memoize the correlation by the bit pattern of d^2
  std::unordered_map<std::uint64_t, double> memo;
  auto corr = [&](Index a, Index b) {
    const double d2 = (out.data.coords.row(a) - out.data.coords.row(b)).squaredNorm();
    std::uint64_t key;
    std::memcpy(&key, &d2, sizeof(key));
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double v = matern_corr(std::sqrt(d2), cfg.theta_true.rho, cfg.theta_true.nu);
    memo.emplace(key, v);
    return v;
  };

  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd e(N);
  for (Index i = 0; i < N; ++i) e[i] = normal(rng);
  out.z.setZero(N);
  const double s2 = cfg.theta_true.sigma2;
  for (Index pos = 0; pos < N; ++pos) {
    const auto& nb = cs.neighbor_sets[static_cast<std::size_t>(pos)];
    const Index k = static_cast<Index>(nb.size()) + 1;
    std::vector<Index> rows(static_cast<std::size_t>(k));
    for (Index j = 0; j + 1 < k; ++j) rows[static_cast<std::size_t>(j)] = cs.order[static_cast<std::size_t>(nb[static_cast<std::size_t>(j)])];
    rows.back() = cs.order[static_cast<std::size_t>(pos)];
    MatrixXd C(k, k);
    for (Index a = 0; a < k; ++a) {
      C(a, a) = s2;
      for (Index b = 0; b < a; ++b) C(a, b) = C(b, a) = s2 * corr(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(b)]);
    }
    const Eigen::LLT<MatrixXd> llt = detail::robust_llt(std::move(C), s2);
    const MatrixXd L = llt.matrixL();
    const Index l = k - 1;
    double zi = L(l, l) * e[rows.back()];
    if (l > 0) {
      VectorXd w(l);
      for (Index j = 0; j < l; ++j) w[j] = out.z[rows[static_cast<std::size_t>(j)]];
      L.topLeftCorner(l, l).triangularView<Eigen::Lower>().solveInPlace(w);
      zi += L.row(l).head(l).dot(w);
    }
    out.z[rows.back()] = zi;
  }
  detail::finish(cfg, rng, out);
  return out;
}

}  // namespace sgvecchia
