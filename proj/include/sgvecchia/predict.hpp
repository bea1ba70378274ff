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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "sgvecchia/error.hpp"
#include "sgvecchia/kdtree.hpp"
#include "sgvecchia/kernel.hpp"
#include "sgvecchia/samplers.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

struct PredictOptions {
  int m = 15;
  std::size_t max_draws = 500;
  std::size_t total_samples = 4000;  // predictive samples per site, spread over the draws
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_samples = false;
};

struct PredictionResult {
  VectorXd mean;
  VectorXd lower95;
  VectorXd upper95;
  std::vector<std::vector<double>> samples;  // per site, only with keep_samples
};

/// Conditional normal of Y* given the responses at `nb` for one (beta, theta).
struct ConditionalNormal {
  double mean = 0.0;
  double var = 0.0;
};

inline ConditionalNormal conditional_normal(const SpatialDataset& train, const std::vector<int>& nb, double sx,
                                            double sy, const VectorXd& xstar, const VectorXd& beta,
                                            const CovarianceParams& theta) {
  const Index k = static_cast<Index>(nb.size());
  const MaternEvaluator eval(theta.rho, theta.nu, DerivOrder::kNone);
  MatrixXd C(k, k);
  VectorXd c(k), r(k);
  for (Index a = 0; a < k; ++a) {
    const int ia = nb[static_cast<std::size_t>(a)];
    C(a, a) = theta.sigma2 + theta.tau2;
    for (Index b = 0; b < a; ++b) {
      const double d = (train.coords.row(ia) - train.coords.row(nb[static_cast<std::size_t>(b)])).norm();
      C(a, b) = C(b, a) = theta.sigma2 * eval(d).k;
    }
    c[a] = theta.sigma2 * eval(std::hypot(train.coords(ia, 0) - sx, train.coords(ia, 1) - sy)).k;
    r[a] = train.y[ia] - train.X.row(ia).dot(beta);
  }
  const Eigen::LLT<MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalError("prediction block is not positive definite");
  VectorXd w = c;
  llt.matrixL().solveInPlace(w);
  VectorXd z = r;
  llt.matrixL().solveInPlace(z);
  ConditionalNormal out;
  out.mean = xstar.dot(beta) + w.dot(z);
  out.var = std::max(theta.sigma2 + theta.tau2 - w.squaredNorm(), theta.tau2);
  return out;
}

namespace detail {
inline double sorted_quantile(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}
}  // namespace detail

/// Per-site nearest-neighbor kriging averaged over (thinned) posterior draws.
inline PredictionResult predict(const SpatialDataset& train, const Coords& test_coords, const MatrixXd& test_X,
                                const Chain& chain, const PredictOptions& opt = {}) {
  if (chain.empty()) throw DomainError("predict: chain is empty");
  if (opt.m < 1) throw DomainError("predict: m must be at least 1");
  if (test_X.rows() != test_coords.rows() || test_X.cols() != train.p()) {
    throw DomainError("predict: test covariates do not match");
  }
  const Index p = train.p();
  const std::size_t nd = chain.size();
  const std::size_t keep = std::max<std::size_t>(1, std::min(nd, opt.max_draws));
  std::vector<std::size_t> which(keep);
  for (std::size_t j = 0; j < keep; ++j) which[j] = (j * nd) / keep;
  std::vector<VectorXd> betas(keep);
  std::vector<CovarianceParams> thetas(keep);
  for (std::size_t j = 0; j < keep; ++j) {
    const VectorXd& d = chain.draws[which[j]];
    betas[j] = d.head(p);
    thetas[j] = CovarianceParams::from_vector(d.tail(kNumTheta));
  }
  const std::size_t per_draw = std::max<std::size_t>(1, (opt.total_samples + keep - 1) / keep);
  const int k = static_cast<int>(std::min<Index>(opt.m, train.n()));
  const KdTree2 tree(train.coords);

  const Index nt = test_coords.rows();
  PredictionResult res;
  res.mean.resize(nt);
  res.lower95.resize(nt);
  res.upper95.resize(nt);
  if (opt.keep_samples) res.samples.resize(static_cast<std::size_t>(nt));

  auto work = [&](Index lo, Index hi) {
    std::vector<double> draws;
    std::vector<int> nb;
    for (Index t = lo; t < hi; ++t) {
      const double sx = test_coords(t, 0), sy = test_coords(t, 1);
      nb.clear();
      for (const auto& h : tree.knn(sx, sy, k)) nb.push_back(h.index);
      std::mt19937_64 rng(opt.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1)));
      std::normal_distribution<double> normal(0.0, 1.0);
      draws.clear();
      double msum = 0.0;
      const VectorXd xstar = test_X.row(t).transpose();
      for (std::size_t j = 0; j < keep; ++j) {
        const ConditionalNormal cn = conditional_normal(train, nb, sx, sy, xstar, betas[j], thetas[j]);
        msum += cn.mean;
        const double sd = std::sqrt(cn.var);
        for (std::size_t q = 0; q < per_draw; ++q) draws.push_back(cn.mean + sd * normal(rng));
      }
      res.mean[t] = msum / static_cast<double>(keep);
      std::sort(draws.begin(), draws.end());
      res.lower95[t] = std::min(detail::sorted_quantile(draws, 0.025), res.mean[t]);
      res.upper95[t] = std::max(detail::sorted_quantile(draws, 0.975), res.mean[t]);
      if (opt.keep_samples) res.samples[static_cast<std::size_t>(t)] = draws;
    }
  };

  const int workers = std::max(1, std::min<int>(opt.threads, static_cast<int>(nt)));
  if (workers == 1) {
    work(0, nt);
    return res;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const Index lo = nt * w / workers, hi = nt * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        errs[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs) {
    if (e) std::rethrow_exception(e);
  }
  return res;
}

/// Chain holding a single fixed (beta, theta); handy for plug-in prediction.
inline Chain point_chain(const VectorXd& beta, const CovarianceParams& theta) {
  Chain c;
  c.p = beta.size();
  VectorXd d(beta.size() + kNumTheta);
  d.head(beta.size()) = beta;
  d.tail(kNumTheta) = theta.as_vector();
  c.draws.push_back(d);
  c.iteration.push_back(0);
  c.wall_ms.push_back(0.0);
  return c;
}

}  // namespace sgvecchia
