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
#include "sgvecchia/priors.hpp"
#include "sgvecchia/types.hpp"

using namespace sgvecchia;

TEST(Transform, UnitParametersMapToZero) {
  const Vector4d eta = to_unconstrained({1, 1, 1, 1});
  EXPECT_EQ(eta, Vector4d::Zero());
}

TEST(Transform, ExactLogs) {
  const double e = std::exp(1.0);
  const Vector4d eta = to_unconstrained({e * e, e, 1.0, 1.0 / e});
  EXPECT_NEAR(eta[0], 2.0, 1e-15);
  EXPECT_NEAR(eta[1], 1.0, 1e-15);
  EXPECT_NEAR(eta[2], 0.0, 1e-15);
  EXPECT_NEAR(eta[3], -1.0, 1e-15);
}

TEST(Transform, RoundTripFixedPoint) {
  const CovarianceParams t{5.0, 3.1, 0.5, 1.0};
  const Vector4d back = from_unconstrained(to_unconstrained(t)).as_vector();
  for (int a = 0; a < 4; ++a) EXPECT_LT(oracle::rel_err(back[a], t.as_vector()[a]), 1e-12);
}

TEST(Transform, RoundTripRandom) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lu(-8.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const CovarianceParams t{std::exp(lu(rng)), std::exp(lu(rng)), std::exp(lu(rng)), std::exp(lu(rng))};
    const Vector4d back = from_unconstrained(to_unconstrained(t)).as_vector();
    for (int a = 0; a < 4; ++a) ASSERT_LT(oracle::rel_err(back[a], t.as_vector()[a]), 1e-12);
  }
}

TEST(Transform, NonPositiveRejected) {
  EXPECT_THROW(to_unconstrained({0.0, 1, 1, 1}), DomainError);
  EXPECT_THROW(to_unconstrained({1, -1, 1, 1}), DomainError);
  EXPECT_THROW(to_unconstrained({1, 1, 1, 0.0}), DomainError);
}

TEST(Dataset, ValidatesShapesAndDuplicates) {
  SpatialDataset d;
  d.coords.resize(3, 2);
  d.coords << 0, 0, 1, 0, 0, 1;
  d.y = VectorXd::Ones(3);
  d.X = MatrixXd::Ones(3, 1);
  EXPECT_NO_THROW(d.validate());
  d.coords.row(2) << 1, 0;
  EXPECT_THROW(d.validate(), DomainError);
  d.coords.row(2) << 2, 2;
  d.y = VectorXd::Ones(2);
  EXPECT_THROW(d.validate(), DomainError);
}

TEST(Prior, GammaModeOfRho) {
  const PriorSpec p;
  EXPECT_NEAR(p.rho.d_log_density(4.0), 0.0, 1e-15);
}

// The stated rho interval (2.06, 7.88) is the central 95% interval of Gamma(9, 2); the 90%
// interval is (2.33, 7.29).
TEST(Prior, RhoIntervalMatchesStatedEndpointsAtNinetyFive) {
  const PriorSpec p;
  EXPECT_NEAR(p.rho.quantile(0.025), 2.06, 0.01);
  EXPECT_NEAR(p.rho.quantile(0.975), 7.88, 0.01);
  EXPECT_NEAR(p.rho.cdf(7.88) - p.rho.cdf(2.06), 0.95, 0.002);
}

// The stated nu interval (0.52, 14.08) is the central 90% interval of LogNormal(1, 1).
TEST(Prior, NuIntervalMatchesStatedEndpointsAtNinety) {
  const PriorSpec p;
  EXPECT_NEAR(p.nu.quantile(0.05), 0.52, 0.01);
  EXPECT_NEAR(p.nu.quantile(0.95), 14.08, 0.02);
  EXPECT_NEAR(p.nu.cdf(14.08) - p.nu.cdf(0.52), 0.90, 0.002);
}

TEST(Prior, DensitiesIntegrateToOne) {
  const PriorSpec p;
  // trapezoid on a log-spaced grid over (0, 50); Gamma(0.1, 0.1) leaves 1.4e-4 of its mass above 50
  auto integrate = [](auto&& f, double lo, double hi) {
    const int n = 400000;
    const double a = std::log(lo), b = std::log(hi);
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = std::exp(a + (b - a) * i / n);
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      s += w * std::exp(f(x)) * x;
    }
    return s * (b - a) / n;
  };
  EXPECT_NEAR(integrate([&](double x) { return p.rho.log_density(x); }, 1e-12, 50.0), 1.0, 0.02);
  EXPECT_NEAR(integrate([&](double x) { return p.nu.log_density(x); }, 1e-12, 50.0), 1.0, 0.02);
  EXPECT_NEAR(integrate([&](double x) { return p.sigma2.log_density(x); }, 1e-300, 50.0), 1.0, 0.02);
  EXPECT_NEAR(integrate([&](double x) { return p.tau2.log_density(x); }, 1e-300, 50.0), 1.0, 0.02);
}

TEST(Prior, LogPriorFiniteForPositiveTheta) {
  const PriorSpec p;
  for (double v : {1e-8, 1e-3, 1.0, 10.0, 1e4}) {
    EXPECT_TRUE(std::isfinite(log_prior_and_grad({v, v, v, v}, p).first));
  }
}

TEST(Prior, GradientMatchesFiniteDifferenceInLogCoordinates) {
  const PriorSpec p;
  auto check = [&](const CovarianceParams& t, double tol) {
    const Vector4d g = log_prior_and_grad(t, p).second;
    const Vector4d eta = to_unconstrained(t);
    for (int a = 0; a < 4; ++a) {
      auto f = [&](double x) {
        Vector4d e = eta;
        e[a] = x;
        return log_prior_and_grad(from_unconstrained(e), p).first;
      };
      // absolute floor: at (5, 3, 1, 1) the tau2 component is exactly zero and differencing
      // roundoff is ~1e-12
      EXPECT_LT(oracle::rel_err(g[a], oracle::central_diff5(f, eta[a], 1e-3), 1e-4), tol) << "coordinate " << a;
    }
  };
  check({5, 3, 1, 1}, 1e-6);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lu(-2.0, 2.5);
  for (int i = 0; i < 20; ++i) {
    check({std::exp(lu(rng)), std::exp(lu(rng)), std::exp(lu(rng)), std::exp(lu(rng))}, 1e-5);
  }
}
