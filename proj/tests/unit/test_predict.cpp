/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "sgvecchia/predict.hpp"
#include "sgvecchia/simulate.hpp"

using namespace sgvecchia;

namespace {

SpatialDataset scattered(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::normal_distribution<double> z(0.0, 1.0);
  SpatialDataset d;
  d.coords.resize(n, 2);
  d.X.resize(n, 2);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.coords.row(i) << u(rng), u(rng);
    d.X.row(i) << 1.0, z(rng);
    d.y[i] = 1.0 + 2.0 * z(rng);
  }
  return d;
}

const CovarianceParams kTheta{2.0, 1.5, 1.2, 0.3};
const VectorXd kBeta = (VectorXd(2) << 0.5, -1.0).finished();

}  // namespace

TEST(Conditional, MatchesDenseKrigingWithAllTrainingSites) {
  const SpatialDataset d = scattered(50, 1);
  std::vector<int> all(50);
  std::iota(all.begin(), all.end(), 0);
  const MatrixXd S = cov_block(d.coords, kTheta, false, DerivOrder::kNone).cov;
  const Eigen::Vector2d xstar(1.0, 0.7);
  for (const auto& s : {Eigen::Vector2d(3.3, 4.1), Eigen::Vector2d(0.2, 9.9), Eigen::Vector2d(12.0, -1.0)}) {
    VectorXd c(50);
    for (int i = 0; i < 50; ++i) c[i] = kTheta.sigma2 * matern_corr((d.coords.row(i).transpose() - s).norm(), kTheta.rho, kTheta.nu);
    const auto [m, v] = oracle::dense_krige(S, c, kTheta.sigma2 + kTheta.tau2, d.y - d.X * kBeta, xstar.dot(kBeta));
    const ConditionalNormal cn = conditional_normal(d, all, s[0], s[1], xstar, kBeta, kTheta);
    EXPECT_NEAR(cn.mean, m, 1e-8);
    EXPECT_NEAR(cn.var, v, 1e-8);
  }
}

TEST(Conditional, InterpolatesWithoutNugget) {
  const SpatialDataset d = scattered(30, 2);
  const CovarianceParams t{2.0, 1.5, 1.2, 1e-10};
  std::vector<int> nb(10);
  std::iota(nb.begin(), nb.end(), 0);
  const VectorXd xstar = d.X.row(4).transpose();
  const ConditionalNormal cn = conditional_normal(d, nb, d.coords(4, 0), d.coords(4, 1), xstar, kBeta, t);
  EXPECT_NEAR(cn.mean, d.y[4], 1e-4);
  EXPECT_LT(cn.var, 1e-6);
}

TEST(Conditional, VarianceShrinksAsNeighborsAreAdded) {
  const SpatialDataset d = scattered(200, 3);
  const KdTree2 tree(d.coords);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int site = 0; site < 20; ++site) {
    const double sx = u(rng), sy = u(rng);
    double prev = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= 25; ++m) {
      std::vector<int> nb;
      for (const auto& h : tree.knn(sx, sy, m)) nb.push_back(h.index);
      const double v = conditional_normal(d, nb, sx, sy, Eigen::Vector2d(1, 0), kBeta, kTheta).var;
      EXPECT_LE(v, prev + 1e-12);
      EXPECT_GE(v, kTheta.tau2);
      prev = v;
    }
  }
}

TEST(Predict, PointChainMeanIsConditionalMean) {
  const SpatialDataset d = scattered(120, 4);
  Coords test(5, 2);
  test << 1, 1, 2, 8, 5, 5, 9.5, 0.5, 7, 3;
  const MatrixXd tx = MatrixXd::Ones(5, 2);
  PredictOptions opt;
  opt.m = 12;
  const PredictionResult r = predict(d, test, tx, point_chain(kBeta, kTheta), opt);
  const KdTree2 tree(d.coords);
  for (int t = 0; t < 5; ++t) {
    std::vector<int> nb;
    for (const auto& h : tree.knn(test(t, 0), test(t, 1), 12)) nb.push_back(h.index);
    const ConditionalNormal cn = conditional_normal(d, nb, test(t, 0), test(t, 1), tx.row(t).transpose(), kBeta, kTheta);
    EXPECT_NEAR(r.mean[t], cn.mean, 1e-12);
    EXPECT_LE(r.lower95[t], r.mean[t]);
    EXPECT_GE(r.upper95[t], r.mean[t]);
    // 4000 normal draws pin the 95% interval to a few percent of its width
    const double half = 1.959964 * std::sqrt(cn.var);
    EXPECT_NEAR(r.upper95[t] - r.lower95[t], 2 * half, 0.08 * half);
  }
}

TEST(Predict, ThreadsDoNotChangeResults) {
  const SpatialDataset d = scattered(100, 5);
  Coords test(40, 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 40; ++i) test.row(i) << u(rng), u(rng);
  Chain c;
  c.p = 2;
  for (int j = 0; j < 7; ++j) {
    VectorXd dr(6);
    dr << kBeta, kTheta.sigma2 * (1 + 0.05 * j), kTheta.rho, kTheta.nu, kTheta.tau2;
    c.draws.push_back(dr);
    c.iteration.push_back(j);
    c.wall_ms.push_back(j);
  }
  PredictOptions a, b;
  a.threads = 1;
  b.threads = 3;
  const MatrixXd tx = MatrixXd::Ones(40, 2);
  const PredictionResult ra = predict(d, test, tx, c, a), rb = predict(d, test, tx, c, b);
  EXPECT_EQ(ra.mean, rb.mean);
  EXPECT_EQ(ra.lower95, rb.lower95);
  EXPECT_EQ(ra.upper95, rb.upper95);
}

TEST(Predict, CalibratedUnderTrueParameters) {
  SimConfig cfg;
  cfg.n1 = 40;
  cfg.n2 = 40;
  cfg.theta_true = {1.0, 3.0, 1.0, 0.3};
  cfg.seed = 8;
  const SimulatedData s = simulate_exact(cfg);
  std::vector<Index> idx(1600);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(2);
  std::shuffle(idx.begin(), idx.end(), rng);
  SpatialDataset train;
  train.coords.resize(1000, 2);
  train.X.resize(1000, 2);
  train.y.resize(1000);
  Coords test(600, 2);
  MatrixXd tx(600, 2);
  VectorXd ty(600);
  for (Index i = 0; i < 1600; ++i) {
    const Index j = idx[static_cast<std::size_t>(i)];
    if (i < 1000) {
      train.coords.row(i) = s.data.coords.row(j);
      train.X.row(i) = s.data.X.row(j);
      train.y[i] = s.data.y[j];
    } else {
      test.row(i - 1000) = s.data.coords.row(j);
      tx.row(i - 1000) = s.data.X.row(j);
      ty[i - 1000] = s.data.y[j];
    }
  }
  const PredictionResult r = predict(train, test, tx, point_chain(s.beta, s.theta));
  int hit = 0;
  for (int t = 0; t < 600; ++t) hit += (ty[t] >= r.lower95[t] && ty[t] <= r.upper95[t]) ? 1 : 0;
  // binomial sd at 600 sites is about 0.009
  EXPECT_NEAR(hit / 600.0, 0.95, 0.03);
}

TEST(Predict, RejectsBadInputs) {
  const SpatialDataset d = scattered(20, 6);
  Coords test(1, 2);
  test << 1, 1;
  EXPECT_THROW(predict(d, test, MatrixXd::Ones(1, 2), Chain{}), DomainError);
  PredictOptions opt;
  opt.m = 0;
  EXPECT_THROW(predict(d, test, MatrixXd::Ones(1, 2), point_chain(kBeta, kTheta), opt), DomainError);
  EXPECT_THROW(predict(d, test, MatrixXd::Ones(1, 3), point_chain(kBeta, kTheta)), DomainError);
}
