/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sgvecchia/diagnostics.hpp"
#include "sgvecchia/neighbors.hpp"
#include "sgvecchia/samplers.hpp"
#include "sgvecchia/simulate.hpp"
#include "sgvecchia/vecchia.hpp"

namespace sgvecchia {

/// Replicated simulate -> fit -> diagnose study on a grid.
struct BenchConfig {
  Index n1 = 100;
  Index n2 = 100;
  double sigma2 = 5.0;
  double nu = 1.0;
  double kappa = 1.0;
  double rho = 0.0;  // <= 0: chosen so the correlation at the grid diagonal is 1e-4
  VectorXd beta = (VectorXd(2) << -3.0, 5.0).finished();
  int replicates = 10;
  std::vector<Algorithm> algorithms{Algorithm::kSgrld};
  SamplerConfig sampler;  // algorithm field is overwritten per run
  int m = 15;
  OrderingType ordering = OrderingType::kMaxMin;
  Index maxmin_threshold = 100000;
  int m_sim = 120;
  std::string sim_method = "vecchia";  // exact | vecchia
  std::uint64_t seed = 1;
  PriorSpec prior;
  int threads = 1;  // replicate-level workers

  CovarianceParams truth() const {
    const double r = rho > 0.0 ? rho : choose_range_for_grid(nu, n1, n2);
    return {sigma2, r, nu, kappa * sigma2};
  }
};

struct ReplicateResult {
  Algorithm algorithm = Algorithm::kSgrld;
  int replicate = 0;
  bool ok = false;
  std::string error;
  Vector4d post_mean = Vector4d::Zero();
  std::array<Interval, kNumTheta> ci{};
  std::array<bool, kNumTheta> covered{};
  std::array<double, kNumTheta> ess_per_min{};
  double total_ms = 0.0;
  double h0 = 0.0;
};

struct BenchRow {
  Algorithm algorithm = Algorithm::kSgrld;
  std::string parameter;
  double mse = 0.0;
  double mc_se = 0.0;
  double coverage = 0.0;
  double ess_per_min = 0.0;
  int replicates_ok = 0;
};

struct BenchReport {
  CovarianceParams truth;
  std::vector<ReplicateResult> runs;
  std::vector<BenchRow> rows;

  const BenchRow* row(Algorithm a, const std::string& param) const {
    for (const auto& r : rows) {
      if (r.algorithm == a && r.parameter == param) return &r;
    }
    return nullptr;
  }
};

/// Diagnostics of one finished chain against the truth.
inline ReplicateResult summarize_chain(const Chain& chain, const CovarianceParams& truth) {
  ReplicateResult r;
  r.algorithm = chain.algorithm;
  r.ok = true;
  r.total_ms = chain.total_ms;
  r.h0 = chain.h0;
  const Vector4d t = truth.as_vector();
  for (int a = 0; a < kNumTheta; ++a) {
    const std::vector<double> col = chain.theta_column(a);
    r.post_mean[a] = mean(col);
    r.ci[a] = equal_tailed_interval(col, 0.95);
    r.covered[a] = r.ci[a].contains(t[a]);
    r.ess_per_min[a] = col.size() >= 10 ? ess_per_min(col, chain.total_ms) : 0.0;
  }
  return r;
}

inline std::vector<BenchRow> aggregate(const std::vector<ReplicateResult>& runs, const std::vector<Algorithm>& algs,
                                       const CovarianceParams& truth) {
  std::vector<BenchRow> rows;
  const Vector4d t = truth.as_vector();
  for (Algorithm alg : algs) {
    for (int a = 0; a < kNumTheta; ++a) {
      std::vector<double> est, ess;
      int cov = 0;
      for (const auto& r : runs) {
        if (r.algorithm != alg || !r.ok) continue;
        est.push_back(r.post_mean[a]);
        ess.push_back(r.ess_per_min[a]);
        cov += r.covered[a] ? 1 : 0;
      }
      BenchRow row;
      row.algorithm = alg;
      row.parameter = kThetaNames[static_cast<std::size_t>(a)];
      row.replicates_ok = static_cast<int>(est.size());
      if (!est.empty()) {
        row.mse = param_mse(est, t[a]);
        row.mc_se = mc_se(est, t[a]);
        row.coverage = static_cast<double>(cov) / static_cast<double>(est.size());
        row.ess_per_min = mean(ess);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline SimulatedData bench_dataset(const BenchConfig& cfg, int replicate) {
  SimConfig sc;
  sc.n1 = cfg.n1;
  sc.n2 = cfg.n2;
  sc.theta_true = cfg.truth();
  sc.beta_true = cfg.beta;
  sc.kappa = cfg.kappa;
  sc.seed = cfg.seed + static_cast<std::uint64_t>(replicate);
  sc.ordering = cfg.ordering;
  sc.maxmin_threshold = cfg.maxmin_threshold;
  return cfg.sim_method == "exact" ? simulate_exact(sc) : simulate_vecchia(sc, cfg.m_sim);
}

/// Runs every replicate and algorithm. `log` (optional) receives one line per finished run.
inline BenchReport run_bench(const BenchConfig& cfg, const std::function<void(const std::string&)>& log = {}) {
  BenchReport rep;
  rep.truth = cfg.truth();
  std::mutex mu;
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(std::max(1, cfg.threads)));

  auto worker = [&](int wid) {
    try {
      for (int r = next++; r < cfg.replicates; r = next++) {
        const SimulatedData sim = bench_dataset(cfg, r);
        ConditioningStructure cs = build_conditioning(sim.data.coords, cfg.m, cfg.ordering,
                                                      cfg.seed + static_cast<std::uint64_t>(r), cfg.maxmin_threshold);
        const VecchiaModel model(sim.data, std::move(cs));
        const auto [beta0, theta0] = default_initial_values(sim.data, cfg.prior);
        for (Algorithm alg : cfg.algorithms) {
          SamplerConfig sc = cfg.sampler;
          sc.algorithm = alg;
          sc.seed = cfg.sampler.seed + static_cast<std::uint64_t>(r);
          sc.batch_size = std::min<Index>(sc.batch_size, sim.data.n());
          ReplicateResult res;
          try {
            const Chain chain = run(model, cfg.prior, sc, beta0, theta0);
            res = summarize_chain(chain, rep.truth);
          } catch (const NumericalError& e) {
            res.ok = false;
            res.error = e.what();
          }
          res.algorithm = alg;
          res.replicate = r;
          std::lock_guard<std::mutex> lock(mu);
          rep.runs.push_back(res);
          if (log) {
            char buf[512];
            if (res.ok) {
              std::snprintf(buf, sizeof(buf),
                            "replicate %d %-8s mean=(%.4g, %.4g, %.4g, %.4g) ess/min=(%.3g, %.3g, %.3g, %.3g) %.1fs",
                            r, to_string(alg), res.post_mean[0], res.post_mean[1], res.post_mean[2],
                            res.post_mean[3], res.ess_per_min[0], res.ess_per_min[1], res.ess_per_min[2],
                            res.ess_per_min[3], res.total_ms / 1000.0);
            } else {
              std::snprintf(buf, sizeof(buf), "replicate %d %-8s failed: %s", r, to_string(alg), res.error.c_str());
            }
            log(buf);
          }
        }
      }
    } catch (...) {
      errs[static_cast<std::size_t>(wid)] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min(cfg.threads, cfg.replicates));
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(rep.runs.begin(), rep.runs.end(), [](const ReplicateResult& a, const ReplicateResult& b) {
    return std::pair(a.replicate, static_cast<int>(a.algorithm)) < std::pair(b.replicate, static_cast<int>(b.algorithm));
  });
  rep.rows = aggregate(rep.runs, cfg.algorithms, rep.truth);
  return rep;
}

inline void write_bench_csv(const std::filesystem::path& path, const BenchReport& rep) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "algorithm,parameter,mse,mc_se,coverage,ess_per_min,replicates\n";
  for (const auto& r : rep.rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6g,%.6g,%.4g,%.6g,%d\n", to_string(r.algorithm), r.parameter.c_str(),
                  r.mse, r.mc_se, r.coverage, r.ess_per_min, r.replicates_ok);
    os << buf;
  }
}

}  // namespace sgvecchia
