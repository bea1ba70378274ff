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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgvecchia/error.hpp"
#include "sgvecchia/priors.hpp"
#include "sgvecchia/types.hpp"
#include "sgvecchia/vecchia.hpp"

namespace sgvecchia {

enum class Algorithm : int { kSgld, kSgrld, kPsgld, kMsgld, kAdamSgld, kSgfs };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSgld: return "sgld";
    case Algorithm::kSgrld: return "sgrld";
    case Algorithm::kPsgld: return "psgld";
    case Algorithm::kMsgld: return "msgld";
    case Algorithm::kAdamSgld: return "adamsgld";
    case Algorithm::kSgfs: return "sgfs";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::kSgld, Algorithm::kSgrld, Algorithm::kPsgld, Algorithm::kMsgld,
                      Algorithm::kAdamSgld, Algorithm::kSgfs}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

/// Optimizer constants of the adaptive kernels.
struct OptimizerConstants {
  double rms_decay = 0.99;  // pSGLD
  double momentum = 0.9;    // MSGLD
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double eps = 1e-8;
};

/// Step-size halving every k epochs with a floor at floor_fraction * h0.
struct Schedule {
  int halve_every_epochs = 5;
  double floor_fraction = 0.01;
  bool enabled = true;

  double at(double h0, long epochs_done) const {
    if (!enabled || halve_every_epochs <= 0) return h0;
    const long halvings = epochs_done / halve_every_epochs;
    const double h = h0 * std::ldexp(1.0, -static_cast<int>(std::min<long>(halvings, 1000)));
    return std::max(h, floor_fraction * h0);
  }
};

struct SamplerConfig {
  Algorithm algorithm = Algorithm::kSgrld;
  double h0 = 0.0;  // <= 0 selects the first-step rule
  Schedule schedule;
  long n_iters = 20000;
  long burn_in = -1;  // < 0 means n_iters / 4
  Index batch_size = 250;
  std::uint64_t seed = 1;
  OptimizerConstants opt;
  bool drift = true;         // sgrld only
  bool inject_noise = true;  // false turns the kernels into their optimizer counterparts
  bool use_prior = true;     // sgfs never uses the prior
  bool stopping_rule = false;
  int thin = 1;

  long effective_burn_in() const { return burn_in < 0 ? n_iters / 4 : burn_in; }

  void validate(Index n) const {
    if (n_iters <= 0) throw DomainError("n_iters must be positive");
    if (effective_burn_in() >= n_iters) throw DomainError("burn_in must be smaller than n_iters");
    if (batch_size < 1 || batch_size > n) throw DomainError("batch_size must lie in [1, n]");
    if (thin < 1) throw DomainError("thin must be at least 1");
    if (schedule.floor_fraction <= 0.0 || schedule.floor_fraction > 1.0) {
      throw DomainError("schedule floor fraction must lie in (0, 1]");
    }
  }
};

/// Position in (beta, log theta), step size, kernel buffers and the noise generator.
struct SamplerState {
  VectorXd phi;
  double h = 0.0;
  VectorXd r;  // pSGLD squared-gradient average, MSGLD velocity, ADAM second moment
  VectorXd m;  // ADAM first moment
  long t = 0;  // completed steps
  bool noise = true;
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  SamplerState() = default;
  SamplerState(VectorXd phi0, double h0, std::uint64_t seed)
      : phi(std::move(phi0)), h(h0), r(VectorXd::Zero(phi.size())), m(VectorXd::Zero(phi.size())), rng(seed) {}

  VectorXd draw_normal() {
    VectorXd e(phi.size());
    for (Index i = 0; i < e.size(); ++i) e[i] = normal(rng);
    return e;
  }
};

/// Preconditioner G (dense, SPD) and drift vector for the Riemannian kernel.
struct Metric {
  MatrixXd G;
  VectorXd drift;
};

/// Block-diagonal metric: (n/n_B) p4 for beta, regularized log-theta Fisher for theta.
inline Metric make_metric(const FisherBlocks& fb, bool with_drift) {
  const Index p = fb.I_beta.rows();
  Metric mt;
  mt.G.setZero(p + kNumTheta, p + kNumTheta);
  mt.G.topLeftCorner(p, p) = fb.scale * fb.I_beta;
  mt.G.bottomRightCorner(kNumTheta, kNumTheta) = fb.regularized_theta();
  mt.drift.setZero(p + kNumTheta);
  if (with_drift && fb.has_drift) mt.drift.tail(kNumTheta) = fb.drift_theta;
  return mt;
}

namespace detail {
inline void require_finite(const VectorXd& v, const SamplerState& s, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " is not finite", -1, s.t);
}
}  // namespace detail

/// phi <- phi + h g + sqrt(2h) e
inline void step_sgld(SamplerState& s, const VectorXd& grad) {
  detail::require_finite(grad, s, "gradient");
  if (s.noise) {
    const VectorXd e = s.draw_normal();
    s.phi = s.phi + s.h * grad + std::sqrt(2.0 * s.h) * e;
  } else {
    s.phi = s.phi + s.h * grad;
  }
  ++s.t;
}

/// phi <- phi + h (G^{-1} g + Gamma) + sqrt(2h) L^{-T} e,  G = L L^T
inline void step_sgrld(SamplerState& s, const VectorXd& grad, const Metric& mt) {
  detail::require_finite(grad, s, "gradient");
  detail::require_finite(mt.drift, s, "drift");
  const Eigen::LLT<MatrixXd> llt(mt.G);
  if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite", -1, s.t);
  const VectorXd pre = llt.solve(grad);
  if (s.noise) {
    VectorXd e = s.draw_normal();
    llt.matrixU().solveInPlace(e);
    s.phi = s.phi + s.h * (pre + mt.drift) + std::sqrt(2.0 * s.h) * e;
  } else {
    s.phi = s.phi + s.h * (pre + mt.drift);
  }
  ++s.t;
}

/// Fisher scoring step: no noise, no drift.
inline void step_sgfs(SamplerState& s, const VectorXd& grad, const Metric& mt) {
  const bool saved = s.noise;
  s.noise = false;
  Metric plain{mt.G, VectorXd::Zero(mt.drift.size())};
  step_sgrld(s, grad, plain);
  s.noise = saved;
}

/// RMSprop-preconditioned Langevin step: P = 1/sqrt(r + eps).
inline void step_psgld(SamplerState& s, const VectorXd& grad, const OptimizerConstants& oc = {}) {
  detail::require_finite(grad, s, "gradient");
  s.r = oc.rms_decay * s.r + (1.0 - oc.rms_decay) * grad.cwiseAbs2();
  const VectorXd P = (s.r.array() + oc.eps).rsqrt().matrix();
  s.phi += s.h * P.cwiseProduct(grad);
  if (s.noise) s.phi += (2.0 * s.h * P.array()).sqrt().matrix().cwiseProduct(s.draw_normal());
  ++s.t;
}

/// Momentum Langevin step. Noise enters the velocity with variance 2(1 - alpha)h, so that for
/// small h the position marginal is the target (the friction is 1 - alpha).
inline void step_msgld(SamplerState& s, const VectorXd& grad, const OptimizerConstants& oc = {}) {
  detail::require_finite(grad, s, "gradient");
  s.r = oc.momentum * s.r + s.h * grad;
  if (s.noise) s.r += std::sqrt(2.0 * (1.0 - oc.momentum) * s.h) * s.draw_normal();
  s.phi += s.r;
  ++s.t;
}

/// Adam-preconditioned Langevin step: P = 1/(sqrt(v_hat) + eps).
inline void step_adamsgld(SamplerState& s, const VectorXd& grad, const OptimizerConstants& oc = {}) {
  detail::require_finite(grad, s, "gradient");
  const long t = s.t + 1;
  s.m = oc.adam_beta1 * s.m + (1.0 - oc.adam_beta1) * grad;
  s.r = oc.adam_beta2 * s.r + (1.0 - oc.adam_beta2) * grad.cwiseAbs2();
  const VectorXd mhat = s.m / (1.0 - std::pow(oc.adam_beta1, static_cast<double>(t)));
  const VectorXd vhat = s.r / (1.0 - std::pow(oc.adam_beta2, static_cast<double>(t)));
  const VectorXd P = (vhat.array().sqrt() + oc.eps).inverse().matrix();
  s.phi += s.h * P.cwiseProduct(mhat);
  if (s.noise) s.phi += (2.0 * s.h * P.array()).sqrt().matrix().cwiseProduct(s.draw_normal());
  ++s.t;
}

/// Retained draws on the natural scale.
struct Chain {
  Index p = 0;
  std::vector<long> iteration;
  std::vector<VectorXd> draws;  // (beta, sigma2, rho, nu, tau2)
  std::vector<double> wall_ms;  // elapsed since the run started

  // run summary
  Algorithm algorithm = Algorithm::kSgrld;
  double h0 = 0.0;
  double final_h = 0.0;
  long iterations_run = 0;
  double epochs = 0.0;
  double total_ms = 0.0;
  bool stopped_early = false;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }

  /// Column j of the draws (beta_0..beta_{p-1}, then theta).
  std::vector<double> column(Index j) const {
    std::vector<double> out(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) out[i] = draws[i][j];
    return out;
  }
  std::vector<double> theta_column(int a) const { return column(p + a); }

  VectorXd mean() const {
    if (draws.empty()) throw DomainError("chain is empty");
    VectorXd mu = VectorXd::Zero(draws.front().size());
    for (const auto& d : draws) mu += d;
    return mu / static_cast<double>(draws.size());
  }
};

/// Starting point: beta by least squares, sigma2 = tau2 = half the residual variance, and the
/// prior medians of rho and nu.
inline std::pair<VectorXd, CovarianceParams> default_initial_values(const SpatialDataset& data,
                                                                    const PriorSpec& prior) {
  const VectorXd beta = data.X.colPivHouseholderQr().solve(data.y);
  const VectorXd res = data.y - data.X * beta;
  const double dof = std::max<double>(1.0, static_cast<double>(data.n() - data.p()));
  const double v = std::max(res.squaredNorm() / dof, 1e-6);
  CovarianceParams theta{0.5 * v, prior.rho.quantile(0.5), prior.nu.quantile(0.5), 0.5 * v};
  return {beta, theta};
}

/// One-iteration evaluation used by the run loop and the first-step rule.
class SamplerDriver {
 public:
  SamplerDriver(const VecchiaModel& model, const PriorSpec& prior, const SamplerConfig& cfg)
      : model_(model), prior_(prior), cfg_(cfg) {}

  AssemblyLevel level() const {
    switch (cfg_.algorithm) {
      case Algorithm::kSgrld:
        return cfg_.drift ? AssemblyLevel::kFisherDerivative : AssemblyLevel::kFisher;
      case Algorithm::kSgfs: return AssemblyLevel::kFisher;
      default: return AssemblyLevel::kGradient;
    }
  }

  /// Evaluates the batch at s.phi and applies one kernel step.
  void step(SamplerState& s, std::span<const int> batch) {
    const Index p = model_.p();
    const VectorXd beta = s.phi.head(p);
    const Vector4d eta = s.phi.tail(kNumTheta);
    const CovarianceParams theta = from_unconstrained(eta);
    if (!theta.strictly_positive() || !theta.as_vector().allFinite()) {
      throw NumericalError("covariance parameters left the positive range", -1, s.t);
    }
    const Index nb = static_cast<Index>(batch.size());
    model_.assemble(batch, theta, level(), pieces_, ws_);
    const bool prior = cfg_.use_prior && cfg_.algorithm != Algorithm::kSgfs;
    last_grad_ = prior ? gradient(pieces_, beta, theta, model_.n(), nb, prior_)
                       : loglik_gradient(pieces_, beta, theta, model_.n(), nb);
    switch (cfg_.algorithm) {
      case Algorithm::kSgld: step_sgld(s, last_grad_); break;
      case Algorithm::kPsgld: step_psgld(s, last_grad_, cfg_.opt); break;
      case Algorithm::kMsgld: step_msgld(s, last_grad_, cfg_.opt); break;
      case Algorithm::kAdamSgld: step_adamsgld(s, last_grad_, cfg_.opt); break;
      case Algorithm::kSgrld: {
        const FisherBlocks fb = fisher_blocks(pieces_, ws_, theta, nb, model_.n(), cfg_.drift);
        step_sgrld(s, last_grad_, make_metric(fb, cfg_.drift));
        break;
      }
      case Algorithm::kSgfs: {
        const FisherBlocks fb = fisher_blocks(pieces_, ws_, theta, nb, model_.n(), false);
        step_sgfs(s, last_grad_, make_metric(fb, false));
        break;
      }
    }
    if (!s.phi.allFinite()) throw NumericalError("state is not finite after the update", -1, s.t);
  }

  const VectorXd& last_gradient() const { return last_grad_; }

 private:
  const VecchiaModel& model_;
  const PriorSpec& prior_;
  const SamplerConfig& cfg_;
  LikelihoodPieces pieces_;
  MinibatchWorkspace ws_;
  VectorXd last_grad_;
};

namespace detail {
/// Without-replacement batches: a shuffled epoch cut into consecutive chunks; the final chunk is
/// short when batch_size does not divide n.
class EpochBatcher {
 public:
  EpochBatcher(Index n, Index batch_size, std::uint64_t seed) : perm_(static_cast<std::size_t>(n)), nb_(batch_size), rng_(seed) {
    std::iota(perm_.begin(), perm_.end(), 0);
    reshuffle();
  }

  std::span<const int> next() {
    if (pos_ >= perm_.size()) {
      ++epochs_;
      reshuffle();
    }
    const std::size_t len = std::min(static_cast<std::size_t>(nb_), perm_.size() - pos_);
    std::span<const int> out(perm_.data() + pos_, len);
    pos_ += len;
    return out;
  }

  long epochs_completed() const { return epochs_ + (pos_ >= perm_.size() ? 1 : 0); }
  double epochs_fraction() const {
    return static_cast<double>(epochs_) + static_cast<double>(pos_) / static_cast<double>(perm_.size());
  }
  std::size_t iterations_per_epoch() const { return (perm_.size() + nb_ - 1) / static_cast<std::size_t>(nb_); }

 private:
  void reshuffle() {
    std::shuffle(perm_.begin(), perm_.end(), rng_);
    pos_ = 0;
  }

  std::vector<int> perm_;
  Index nb_;
  std::mt19937_64 rng_;
  std::size_t pos_ = 0;
  long epochs_ = 0;
};

inline std::uint64_t batch_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 0x6A09E667F3BCC909ULL; }
inline std::uint64_t noise_seed(std::uint64_t seed) { return seed ^ 0xBB67AE8584CAA73BULL; }
}  // namespace detail

/// First-step rule: start at 1/n and halve until the deterministic part of the first update has
/// Euclidean norm below one.
inline double initial_step_size(const VecchiaModel& model, const PriorSpec& prior, const SamplerConfig& cfg,
                                const VectorXd& phi0, int max_halvings = 200) {
  double h = 1.0 / static_cast<double>(model.n());
  detail::EpochBatcher batcher(model.n(), cfg.batch_size, detail::batch_seed(cfg.seed));
  const std::span<const int> first = batcher.next();
  const std::vector<int> batch(first.begin(), first.end());
  SamplerDriver driver(model, prior, cfg);
  for (int k = 0; k < max_halvings; ++k) {
    SamplerState s(phi0, h, 0);
    s.noise = false;
    driver.step(s, batch);
    if ((s.phi - phi0).norm() < 1.0) return h;
    h *= 0.5;
  }
  throw NumericalError("first-step rule did not find a step size");
}

/// Runs the configured kernel and keeps post-burn-in draws (every `thin`-th).
inline Chain run(const VecchiaModel& model, const PriorSpec& prior, const SamplerConfig& cfg, const VectorXd& beta0,
                 const CovarianceParams& theta0) {
  cfg.validate(model.n());
  const Index p = model.p();
  if (beta0.size() != p) throw DomainError("initial beta has the wrong length");
  VectorXd phi0(p + kNumTheta);
  phi0.head(p) = beta0;
  phi0.tail(kNumTheta) = to_unconstrained(theta0);

  const auto start = std::chrono::steady_clock::now();
  const double h0 = cfg.h0 > 0.0 ? cfg.h0 : initial_step_size(model, prior, cfg, phi0);
  SamplerState s(phi0, h0, detail::noise_seed(cfg.seed));
  s.noise = cfg.inject_noise && cfg.algorithm != Algorithm::kSgfs;
  detail::EpochBatcher batcher(model.n(), cfg.batch_size, detail::batch_seed(cfg.seed));
  SamplerDriver driver(model, prior, cfg);

  Chain chain;
  chain.p = p;
  chain.algorithm = cfg.algorithm;
  chain.h0 = h0;
  const long burn = cfg.effective_burn_in();
  const std::size_t window = std::max<std::size_t>(1, batcher.iterations_per_epoch());
  std::deque<double> products;
  double product_sum = 0.0;
  double prev_avg = 0.0;
  bool have_prev = false;
  VectorXd prev_grad;

  auto record = [&](long it) {
    VectorXd d(p + kNumTheta);
    d.head(p) = s.phi.head(p);
    d.tail(kNumTheta) = s.phi.tail(kNumTheta).array().exp().matrix();
    chain.iteration.push_back(it);
    chain.draws.push_back(std::move(d));
    chain.wall_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  };

  long it = 0;
  try {
    for (it = 0; it < cfg.n_iters; ++it) {
      s.h = cfg.schedule.at(h0, batcher.epochs_completed());
      driver.step(s, batcher.next());
      if (it >= burn && (it - burn) % cfg.thin == 0) record(it);
      if (cfg.stopping_rule) {
        const VectorXd& g = driver.last_gradient();
        if (prev_grad.size() == g.size()) {
          const double ip = g.dot(prev_grad);
          products.push_back(ip);
          product_sum += ip;
          if (products.size() > window) {
            product_sum -= products.front();
            products.pop_front();
          }
          if (products.size() == window) {
            const double avg = product_sum / static_cast<double>(window);
            if (have_prev && prev_avg > 0.0 && avg <= 0.0) {
              chain.stopped_early = true;
              ++it;
              break;
            }
            prev_avg = avg;
            have_prev = true;
          }
        }
        prev_grad = g;
      }
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (" + to_string(cfg.algorithm) + ")", e.site(), it);
  }
  if (chain.empty()) record(it - 1);
  chain.iterations_run = it;
  chain.final_h = s.h;
  chain.epochs = batcher.epochs_fraction();
  chain.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return chain;
}

/// run() starting from default_initial_values.
inline Chain run(const VecchiaModel& model, const SpatialDataset& data, const PriorSpec& prior,
                 const SamplerConfig& cfg) {
  const auto [beta0, theta0] = default_initial_values(data, prior);
  return run(model, prior, cfg, beta0, theta0);
}

}  // namespace sgvecchia
