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
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <numeric>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "sgvecchia/error.hpp"
#include "sgvecchia/kernel.hpp"
#include "sgvecchia/neighbors.hpp"
#include "sgvecchia/priors.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

/// How much work assemble_pieces does per site.
enum class AssemblyLevel : int {
  kValue = 0,             // p1..p4 only
  kGradient = 1,          // + theta-derivatives of p1..p4
  kFisher = 2,            // + I(theta)
  kFisherDerivative = 3,  // + dI(theta)/dtheta_c, needed for the Riemannian drift
};

/// Minibatch sums p1..p4 and their derivatives in natural theta. Unscaled (no n/n_B factor).
struct LikelihoodPieces {
  double p1 = 0.0;
  double p2 = 0.0;
  VectorXd p3;
  MatrixXd p4;
  std::array<double, kNumTheta> d_p1{};
  std::array<double, kNumTheta> d_p2{};
  std::array<VectorXd, kNumTheta> d_p3;
  std::array<MatrixXd, kNumTheta> d_p4;
  bool has_derivs = false;

  void reset(Index p, bool derivs) {
    p1 = p2 = 0.0;
    p3.setZero(p);
    p4.setZero(p, p);
    has_derivs = derivs;
    d_p1.fill(0.0);
    d_p2.fill(0.0);
    for (int a = 0; a < kNumTheta; ++a) {
      if (derivs) {
        d_p3[a].setZero(p);
        d_p4[a].setZero(p, p);
      } else {
        d_p3[a].resize(0);
        d_p4[a].resize(0, 0);
      }
    }
  }

  LikelihoodPieces& operator+=(const LikelihoodPieces& o) {
    p1 += o.p1;
    p2 += o.p2;
    p3 += o.p3;
    p4 += o.p4;
    if (has_derivs) {
      for (int a = 0; a < kNumTheta; ++a) {
        d_p1[a] += o.d_p1[a];
        d_p2[a] += o.d_p2[a];
        d_p3[a] += o.d_p3[a];
        d_p4[a] += o.d_p4[a];
      }
    }
    return *this;
  }
};

/// Per-site blocks in neighbor-first/self-last layout. Only retained on request (tests, debugging).
struct SiteBlock {
  Index position = 0;
  std::vector<int> neighbors;
  VectorXd u, v;
  MatrixXd Q, R;
  MatrixXd A, B;
};

/// Everything the Fisher computation needs from one assembly pass. Sums are unscaled.
struct MinibatchWorkspace {
  AssemblyLevel level = AssemblyLevel::kValue;
  Index batch_size = 0;
  Matrix4d fisher_natural = Matrix4d::Zero();
  std::array<Matrix4d, kNumTheta> d_fisher_natural{};  // indexed by the differentiating coordinate
  std::vector<SiteBlock> blocks;

  void reset(AssemblyLevel lv, Index nb) {
    level = lv;
    batch_size = nb;
    fisher_natural.setZero();
    for (auto& m : d_fisher_natural) m.setZero();
    blocks.clear();
  }
};

/// Fisher information blocks. I_theta and drift are in log-theta coordinates and scaled by n/n_B.
struct FisherBlocks {
  MatrixXd I_beta;  // = p4, unscaled
  double scale = 1.0;
  Matrix4d I_theta = Matrix4d::Zero();
  Matrix4d I_theta_natural = Matrix4d::Zero();
  std::array<Matrix4d, kNumTheta> dI_natural{};
  Vector4d drift_theta = Vector4d::Zero();
  double jitter = 0.0;
  bool has_drift = false;

  Matrix4d regularized_theta() const { return I_theta + jitter * Matrix4d::Identity(); }
};

/// Ordered data plus conditioning sets; the object assemble_pieces works on.
///
/// Not safe for concurrent assemble calls on one instance (the kernel-term cache is mutated);
/// give each worker its own model.
class VecchiaModel {
 public:
  VecchiaModel(const SpatialDataset& data, ConditioningStructure cs, int threads = 1, bool distance_cache = true)
      : cs_(std::move(cs)), threads_(std::max(1, threads)) {
    data.validate();
    const Index n = data.n();
    if (cs_.n() != n) throw DomainError("conditioning structure does not match dataset size");
    coords_.resize(n, 2);
    y_.resize(n);
    X_.resize(n, data.p());
    for (Index pos = 0; pos < n; ++pos) {
      const int row = cs_.order[static_cast<std::size_t>(pos)];
      coords_.row(pos) = data.coords.row(row);
      y_[pos] = data.y[row];
      X_.row(pos) = data.X.row(row);
    }
    if (distance_cache) build_distance_cache();
  }

  Index n() const { return y_.size(); }
  Index p() const { return X_.cols(); }
  int threads() const { return threads_; }
  void set_threads(int t) { threads_ = std::max(1, t); }
  const ConditioningStructure& structure() const { return cs_; }
  const Coords& ordered_coords() const { return coords_; }
  const VectorXd& ordered_y() const { return y_; }
  const MatrixXd& ordered_X() const { return X_; }
  bool uses_distance_cache() const { return !pair_offset_.empty(); }

  /// Sums the per-site pieces over `batch` (ordered positions, no repeats).
  void assemble(std::span<const int> batch, const CovarianceParams& theta, AssemblyLevel level,
                LikelihoodPieces& pieces, MinibatchWorkspace& ws, bool keep_blocks = false) const {
    theta.require_kernel_domain();
    if (batch.empty()) throw DomainError("assemble_pieces: empty batch");
    const DerivOrder order = level == AssemblyLevel::kValue             ? DerivOrder::kNone
                             : level == AssemblyLevel::kFisherDerivative ? DerivOrder::kSecond
                                                                         : DerivOrder::kFirst;
    const MaternEvaluator eval(theta.rho, theta.nu, order);
    for (int pos : batch) {
      if (pos < 0 || pos >= n()) throw DomainError("assemble_pieces: batch index out of range");
    }
    if (uses_distance_cache()) warm_term_cache(batch, theta, order, eval);

    const bool derivs = level != AssemblyLevel::kValue;
    pieces.reset(p(), derivs);
    ws.reset(level, static_cast<Index>(batch.size()));

    if (keep_blocks) {
      Scratch s;
      for (int pos : batch) site(pos, theta, level, eval, s, pieces, ws, true);
      return;
    }
    // Sites are summed in fixed chunks, and chunks are added in order, so the floating-point
    // result does not depend on how many workers ran.
    const std::size_t nb = batch.size();
    const std::size_t chunks = (nb + kChunk - 1) / kChunk;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), chunks);
    auto run_chunk = [&](std::size_t k, Scratch& s, LikelihoodPieces& cp, MinibatchWorkspace& cw) {
      cp.reset(p(), derivs);
      cw.reset(level, 0);
      for (std::size_t j = k * kChunk; j < std::min(nb, (k + 1) * kChunk); ++j) {
        site(batch[j], theta, level, eval, s, cp, cw, false);
      }
    };
    auto add = [&](const LikelihoodPieces& cp, const MinibatchWorkspace& cw) {
      pieces += cp;
      ws.fisher_natural += cw.fisher_natural;
      for (int c = 0; c < kNumTheta; ++c) ws.d_fisher_natural[c] += cw.d_fisher_natural[c];
    };
    if (workers <= 1) {
      Scratch s;
      LikelihoodPieces cp;
      MinibatchWorkspace cw;
      for (std::size_t k = 0; k < chunks; ++k) {
        run_chunk(k, s, cp, cw);
        add(cp, cw);
      }
      return;
    }
    std::vector<LikelihoodPieces> part_p(chunks);
    std::vector<MinibatchWorkspace> part_w(chunks);
    std::vector<std::exception_ptr> errs(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          Scratch s;
          for (std::size_t k = w; k < chunks; k += workers) run_chunk(k, s, part_p[k], part_w[k]);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t k = 0; k < chunks; ++k) add(part_p[k], part_w[k]);
  }

 private:
  static constexpr std::size_t kChunk = 16;

  struct Scratch {
    KernelMatrices km;
    Eigen::LLT<MatrixXd> llt;
    MatrixXd L, R, ZR;
    VectorXd v, z, r, x, ev;
    std::array<VectorXd, kNumTheta> c, w, t;
    std::array<std::array<VectorXd, kNumTheta>, kNumTheta> P, Q;
    std::array<VectorXd, kNumThetaPairs> N;
    std::vector<int> idx;
  };

  void build_distance_cache() {
    // Regular grids produce few distinct pair distances; evaluating the kernel once per distinct
    // distance is then much cheaper than once per pair.
    const Index n = this->n();
    std::size_t total = 0;
    for (Index i = 0; i < n; ++i) {
      const std::size_t k = cs_.neighbor_sets[static_cast<std::size_t>(i)].size() + 1;
      total += k * (k - 1) / 2;
    }
    if (total == 0 || total > 30'000'000) return;
    std::vector<double> all;
    all.reserve(total);
    std::vector<int> idx;
    for (Index i = 0; i < n; ++i) {
      block_index(i, idx);
      for (std::size_t r = 1; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < r; ++c) all.push_back(distance(idx[r], idx[c]));
      }
    }
    std::vector<double> uniq = all;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() * 4 > total) return;
    pair_ids_.resize(total);
    pair_offset_.resize(static_cast<std::size_t>(n) + 1);
    std::size_t at = 0;
    for (Index i = 0; i < n; ++i) {
      pair_offset_[static_cast<std::size_t>(i)] = at;
      const std::size_t k = cs_.neighbor_sets[static_cast<std::size_t>(i)].size() + 1;
      for (std::size_t q = 0; q < k * (k - 1) / 2; ++q, ++at) {
        pair_ids_[at] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), all[at]) - uniq.begin());
      }
    }
    pair_offset_[static_cast<std::size_t>(n)] = at;
    unique_dist_ = std::move(uniq);
    term_cache_.assign(unique_dist_.size(), MaternTerms{});
    term_stamp_.assign(unique_dist_.size(), 0);
  }

  double distance(Index a, Index b) const { return (coords_.row(a) - coords_.row(b)).norm(); }

  void block_index(Index pos, std::vector<int>& idx) const {
    const auto& nb = cs_.neighbor_sets[static_cast<std::size_t>(pos)];
    idx.assign(nb.begin(), nb.end());
    idx.push_back(static_cast<int>(pos));
  }

  void warm_term_cache(std::span<const int> batch, const CovarianceParams& theta, DerivOrder order,
                       const MaternEvaluator& eval) const {
    if (theta.rho != cached_rho_ || theta.nu != cached_nu_ || static_cast<int>(order) > cached_order_) {
      ++stamp_;
      cached_rho_ = theta.rho;
      cached_nu_ = theta.nu;
      cached_order_ = static_cast<int>(order);
    }
    for (int pos : batch) {
      for (std::size_t q = pair_offset_[static_cast<std::size_t>(pos)]; q < pair_offset_[static_cast<std::size_t>(pos) + 1];
           ++q) {
        const std::uint32_t id = pair_ids_[q];
        if (term_stamp_[id] == stamp_) continue;
        term_cache_[id] = eval(unique_dist_[id]);
        term_stamp_[id] = stamp_;
      }
    }
  }

  static void solve_lower(const MatrixXd& L, VectorXd& x) { L.triangularView<Eigen::Lower>().solveInPlace(x); }
  static void solve_upper_t(const MatrixXd& L, VectorXd& x) {
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  }

  void site(int pos, const CovarianceParams& theta, AssemblyLevel level, const MaternEvaluator& eval, Scratch& s,
            LikelihoodPieces& acc, MinibatchWorkspace& ws, bool keep_blocks) const {
    block_index(pos, s.idx);
    const Index k = static_cast<Index>(s.idx.size());
    const Index l = k - 1;
    const DerivOrder order = eval.order();
    if (uses_distance_cache()) {
      const std::size_t base = pair_offset_[static_cast<std::size_t>(pos)];
      fill_kernel_matrices(k, theta, order, [&](Index i, Index j) {
        return term_cache_[pair_ids_[base + static_cast<std::size_t>(i * (i - 1) / 2 + j)]];
      }, s.km);
    } else {
      fill_kernel_matrices(k, theta, order, [&](Index i, Index j) { return eval(distance(s.idx[i], s.idx[j])); }, s.km);
    }

    s.llt.compute(s.km.cov);
    if (s.llt.info() != Eigen::Success) {
      throw NumericalError("Cholesky of the conditioning block failed", pos);
    }
    s.L = s.llt.matrixL();
    const Index p = this->p();
    s.v.resize(k);
    s.R.resize(k, p);
    for (Index j = 0; j < k; ++j) {
      s.v[j] = y_[s.idx[j]];
      s.R.row(j) = X_.row(s.idx[j]);
    }
    if (keep_blocks) keep_block(pos, theta, s, ws);

    s.z = s.v;
    solve_lower(s.L, s.z);
    s.ZR = s.L.triangularView<Eigen::Lower>().solve(s.R);
    const double Lll = s.L(l, l);
    const double zl = s.z[l];
    s.x = s.ZR.row(l).transpose();
    acc.p1 += 2.0 * std::log(Lll);
    acc.p2 += zl * zl;
    acc.p3.noalias() += zl * s.x;
    acc.p4.noalias() += s.x * s.x.transpose();
    if (level == AssemblyLevel::kValue) return;

    // r = L^{-T} e_l; c_a = L^{-1} D_a r is column l of L^{-1} D_a L^{-T}.
    s.r.setZero(k);
    s.r[l] = 1.0;
    solve_upper_t(s.L, s.r);
    for (int a = 0; a < kNumTheta; ++a) {
      s.c[a] = s.km.d_cov[a] * s.r;
      solve_lower(s.L, s.c[a]);
      const double cl = s.c[a][l];
      const double sa = s.c[a].dot(s.z);
      s.w[a].noalias() = s.ZR.transpose() * s.c[a];
      acc.d_p1[a] += cl;
      acc.d_p2[a] -= 2.0 * zl * sa - zl * zl * cl;
      acc.d_p3[a].noalias() -= sa * s.x + zl * s.w[a] - cl * zl * s.x;
      acc.d_p4[a].noalias() -= s.x * s.w[a].transpose() + s.w[a] * s.x.transpose() - cl * s.x * s.x.transpose();
    }
    if (level == AssemblyLevel::kGradient) return;

    for (int a = 0; a < kNumTheta; ++a) {
      for (int b = a; b < kNumTheta; ++b) {
        const double v = 0.5 * (2.0 * s.c[a].dot(s.c[b]) - s.c[a][l] * s.c[b][l]);
        ws.fisher_natural(a, b) += v;
        if (b != a) ws.fisher_natural(b, a) += v;
      }
    }
    if (level == AssemblyLevel::kFisher) return;

    // Third-order traces. P[a][b] = L^{-1} D_a L^{-T} c_b; Q[a][b] is the same on the leading
    // (conditioning-only) block; N[ac] = L^{-1} D_ac r.
    for (int b = 0; b < kNumTheta; ++b) {
      s.t[b] = s.c[b];
      solve_upper_t(s.L, s.t[b]);
    }
    for (int a = 0; a < kNumTheta; ++a) {
      for (int b = 0; b < kNumTheta; ++b) {
        s.P[a][b] = s.km.d_cov[a] * s.t[b];
        solve_lower(s.L, s.P[a][b]);
      }
    }
    if (l > 0) {
      const auto LA = s.L.topLeftCorner(l, l).triangularView<Eigen::Lower>();
      for (int b = 0; b < kNumTheta; ++b) {
        s.t[b] = s.c[b].head(l);
        LA.transpose().solveInPlace(s.t[b]);
      }
      for (int a = 0; a < kNumTheta; ++a) {
        for (int b = 0; b < kNumTheta; ++b) {
          s.Q[a][b] = s.km.d_cov[a].topLeftCorner(l, l) * s.t[b];
          LA.solveInPlace(s.Q[a][b]);
        }
      }
    }
    for (int a = 0; a < kNumTheta; ++a) {
      for (int b = a; b < kNumTheta; ++b) {
        if (second_derivative_is_zero(a, b)) continue;
        auto& nv = s.N[pair_index(a, b)];
        nv = s.km.d2_cov[pair_index(a, b)] * s.r;
        solve_lower(s.L, nv);
      }
    }
    auto dpair = [&](int a, int c, int b) {
      // tr(N_ac M_b) minus its leading-block counterpart
      if (second_derivative_is_zero(a, c)) return 0.0;
      const VectorXd& nv = s.N[pair_index(a, c)];
      return 2.0 * nv.dot(s.c[b]) - nv[l] * s.c[b][l];
    };
    auto dtriple = [&](int a, int b, int c) {
      double t = s.c[a].dot(s.P[b][c]);
      if (l > 0) {
        t += s.c[a].head(l).dot(s.P[c][b].head(l));
        t += s.c[c].head(l).dot(s.Q[a][b]);
      }
      return t;
    };
    for (int c = 0; c < kNumTheta; ++c) {
      for (int a = 0; a < kNumTheta; ++a) {
        for (int b = a; b < kNumTheta; ++b) {
          const double v = 0.5 * (dpair(a, c, b) + dpair(b, c, a)) - dtriple(a, b, c);
          ws.d_fisher_natural[c](a, b) += v;
          if (b != a) ws.d_fisher_natural[c](b, a) += v;
        }
      }
    }
  }

  void keep_block(int pos, const CovarianceParams& theta, const Scratch& s, MinibatchWorkspace& ws) const {
    SiteBlock blk;
    blk.position = pos;
    const Index k = static_cast<Index>(s.idx.size());
    blk.neighbors.assign(s.idx.begin(), s.idx.end() - 1);
    blk.v = s.v;
    blk.R = s.R;
    blk.u = s.v.head(k - 1);
    blk.Q = s.R.topRows(k - 1);
    blk.B = s.km.cov;
    if (k > 1) {
      Coords nc(k - 1, 2);
      for (Index j = 0; j + 1 < k; ++j) nc.row(j) = coords_.row(s.idx[j]);
      blk.A = cov_block(nc, theta, false, DerivOrder::kNone).cov;
    }
    assert(k == 1 || (blk.A - blk.B.topLeftCorner(k - 1, k - 1)).cwiseAbs().maxCoeff() == 0.0);
    ws.blocks.push_back(std::move(blk));
  }

  ConditioningStructure cs_;
  int threads_;
  Coords coords_;
  VectorXd y_;
  MatrixXd X_;

  std::vector<std::size_t> pair_offset_;
  std::vector<std::uint32_t> pair_ids_;
  std::vector<double> unique_dist_;
  mutable std::vector<MaternTerms> term_cache_;
  mutable std::vector<std::uint32_t> term_stamp_;
  mutable std::uint32_t stamp_ = 0;
  mutable double cached_rho_ = -1.0;
  mutable double cached_nu_ = -1.0;
  mutable int cached_order_ = -1;
};

/// Convenience wrapper returning (pieces, workspace). want_derivs selects the gradient level.
inline std::pair<LikelihoodPieces, MinibatchWorkspace> assemble_pieces(const VecchiaModel& model,
                                                                       std::span<const int> batch,
                                                                       const CovarianceParams& theta,
                                                                       bool want_derivs) {
  std::pair<LikelihoodPieces, MinibatchWorkspace> out;
  model.assemble(batch, theta, want_derivs ? AssemblyLevel::kGradient : AssemblyLevel::kValue, out.first,
                 out.second);
  return out;
}

/// Minibatch Vecchia log-likelihood, -(n_B/2) log 2pi - (p1 + p2 - 2 b'p3 + b'p4 b)/2.
inline double minibatch_loglik(const LikelihoodPieces& pc, const VectorXd& beta, Index batch_size) {
  const double quad = pc.p1 + pc.p2 - 2.0 * beta.dot(pc.p3) + beta.dot(pc.p4 * beta);
  return -0.5 * static_cast<double>(batch_size) * std::log(2.0 * std::numbers::pi) - 0.5 * quad;
}

/// Same, rescaled by n/n_B so it estimates the full-data value.
inline double scaled_loglik(const LikelihoodPieces& pc, const VectorXd& beta, Index batch_size, Index n) {
  return static_cast<double>(n) / static_cast<double>(batch_size) * minibatch_loglik(pc, beta, batch_size);
}

/// Unscaled natural-theta derivative of the minibatch log-likelihood.
inline Vector4d loglik_theta_gradient_natural(const LikelihoodPieces& pc, const VectorXd& beta) {
  if (!pc.has_derivs) throw DomainError("gradient: pieces were assembled without derivatives");
  Vector4d g;
  for (int a = 0; a < kNumTheta; ++a) {
    g[a] = -0.5 * (pc.d_p1[a] + pc.d_p2[a] - 2.0 * beta.dot(pc.d_p3[a]) + beta.dot(pc.d_p4[a] * beta));
  }
  return g;
}

/// (n/n_B) * gradient of the likelihood in (beta, log theta); no prior.
inline VectorXd loglik_gradient(const LikelihoodPieces& pc, const VectorXd& beta, const CovarianceParams& theta,
                                Index n, Index batch_size) {
  const double scale = static_cast<double>(n) / static_cast<double>(batch_size);
  const Index p = beta.size();
  VectorXd g(p + kNumTheta);
  g.head(p) = scale * (pc.p3 - pc.p4 * beta);
  const Vector4d gt = loglik_theta_gradient_natural(pc, beta);
  const Vector4d t = theta.as_vector();
  for (int a = 0; a < kNumTheta; ++a) g[p + a] = scale * t[a] * gt[a];
  return g;
}

/// Stochastic log-posterior gradient in (beta, log theta), flat prior on beta.
inline VectorXd gradient(const LikelihoodPieces& pc, const VectorXd& beta, const CovarianceParams& theta, Index n,
                         Index batch_size, const PriorSpec& prior) {
  VectorXd g = loglik_gradient(pc, beta, theta, n, batch_size);
  g.tail(kNumTheta) += log_prior_and_grad(theta, prior).second;
  return g;
}

/// Fisher blocks in log-theta coordinates with drift Gamma_a = sum_c d(G^{-1})_{ac} / d eta_c.
inline FisherBlocks fisher_blocks(const LikelihoodPieces& pc, const MinibatchWorkspace& ws,
                                  const CovarianceParams& theta, Index batch_size, Index n, bool drift = true) {
  if (ws.level < AssemblyLevel::kFisher) throw DomainError("fisher_blocks: workspace lacks Fisher terms");
  if (drift && ws.level < AssemblyLevel::kFisherDerivative) {
    throw DomainError("fisher_blocks: workspace lacks Fisher derivatives (drift requested)");
  }
  FisherBlocks fb;
  fb.I_beta = pc.p4;
  fb.scale = static_cast<double>(n) / static_cast<double>(batch_size);
  fb.I_theta_natural = fb.scale * ws.fisher_natural;
  const Vector4d t = theta.as_vector();
  const Matrix4d J = t.asDiagonal();
  fb.I_theta = J * fb.I_theta_natural * J;
  fb.I_theta = 0.5 * (fb.I_theta + fb.I_theta.transpose());
  fb.jitter = 1e-8 * fb.I_theta.diagonal().mean();
  if (!drift) return fb;

  fb.has_drift = true;
  for (int c = 0; c < kNumTheta; ++c) fb.dI_natural[c] = fb.scale * ws.d_fisher_natural[c];
  const Eigen::LLT<Matrix4d> llt(fb.regularized_theta());
  if (llt.info() != Eigen::Success) throw NumericalError("Fisher information not positive definite");
  const Matrix4d Ginv = llt.solve(Matrix4d::Identity());
  for (int c = 0; c < kNumTheta; ++c) {
    Matrix4d dG;
    for (int a = 0; a < kNumTheta; ++a) {
      for (int b = 0; b < kNumTheta; ++b) {
        dG(a, b) = t[a] * t[b] * t[c] * fb.dI_natural[c](a, b) +
                   ((a == c ? 1.0 : 0.0) + (b == c ? 1.0 : 0.0)) * fb.I_theta(a, b);
      }
    }
    fb.drift_theta -= (Ginv * dG * Ginv).col(c);
  }
  return fb;
}

/// Full-data Vecchia log-likelihood at (beta, theta).
inline double vecchia_loglik(const VecchiaModel& model, const VectorXd& beta, const CovarianceParams& theta) {
  std::vector<int> all(static_cast<std::size_t>(model.n()));
  std::iota(all.begin(), all.end(), 0);
  LikelihoodPieces pc;
  MinibatchWorkspace ws;
  model.assemble(all, theta, AssemblyLevel::kValue, pc, ws);
  return minibatch_loglik(pc, beta, model.n());
}

/// Generalized least squares beta for fixed theta over the whole dataset.
inline VectorXd gls_beta(const VecchiaModel& model, const CovarianceParams& theta) {
  std::vector<int> all(static_cast<std::size_t>(model.n()));
  std::iota(all.begin(), all.end(), 0);
  LikelihoodPieces pc;
  MinibatchWorkspace ws;
  model.assemble(all, theta, AssemblyLevel::kValue, pc, ws);
  return pc.p4.ldlt().solve(pc.p3);
}

}  // namespace sgvecchia
