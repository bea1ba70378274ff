/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>

#include "sgvecchia/sgvecchia.hpp"

#ifndef SGVECCHIA_VERSION
#define SGVECCHIA_VERSION "unknown"
#endif

namespace sgvecchia::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"dataset", {"path", "s1_column", "s2_column", "y_column", "covariates", "intercept", "quadratic_mean"}},
      {"neighbors", {"m", "ordering", "maxmin_threshold", "cache_dir", "seed"}},
      {"sampler",
       {"algorithm", "n_iters", "burn_in", "batch_size", "h0", "halve_every_epochs", "floor_fraction", "schedule",
        "drift", "inject_noise", "use_prior", "stopping_rule", "thin", "seed", "rms_decay", "momentum", "adam_beta1",
        "adam_beta2", "eps", "init_sigma2", "init_rho", "init_nu", "init_tau2"}},
      {"priors",
       {"sigma2_shape", "sigma2_rate", "rho_shape", "rho_rate", "nu_meanlog", "nu_sdlog", "tau2_shape", "tau2_rate"}},
      {"output", {"dataset", "test_dataset", "metadata", "chain", "summary", "predictions", "report"}},
      {"simulate", {"n1", "n2", "sigma2", "rho", "nu", "kappa", "beta0", "beta1", "method", "m_sim", "seed", "holdout"}},
      {"predict", {"train", "test", "chain", "m", "max_draws", "samples", "seed"}},
      {"bench",
       {"replicates", "n1", "n2", "sigma2", "rho", "nu", "kappa", "algorithms", "m_sim", "sim_method", "seed"}},
  };
  return s;
}

inline std::string version_stamp() { return SGVECCHIA_VERSION; }

/// Resolves relative paths against the config file's directory.
inline std::filesystem::path resolve(const Config& c, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || c.origin().empty() || c.origin().front() == '<') return path;
  return std::filesystem::path(c.origin()).parent_path() / path;
}

inline PriorSpec read_priors(const Config& c) {
  PriorSpec p;
  p.sigma2 = {c.get_double("priors", "sigma2_shape", p.sigma2.shape), c.get_double("priors", "sigma2_rate", p.sigma2.rate)};
  p.rho = {c.get_double("priors", "rho_shape", p.rho.shape), c.get_double("priors", "rho_rate", p.rho.rate)};
  p.nu = {c.get_double("priors", "nu_meanlog", p.nu.meanlog), c.get_double("priors", "nu_sdlog", p.nu.sdlog)};
  p.tau2 = {c.get_double("priors", "tau2_shape", p.tau2.shape), c.get_double("priors", "tau2_rate", p.tau2.rate)};
  for (const char* k : {"sigma2_shape", "sigma2_rate", "rho_shape", "rho_rate", "nu_sdlog", "tau2_shape", "tau2_rate"}) {
    if (c.has("priors", k) && !(c.get_double("priors", k, 1.0) > 0.0)) c.fail("priors", k, std::string(k) + " must be positive");
  }
  return p;
}

inline OrderingType read_ordering(const Config& c) {
  const std::string o = c.get_string("neighbors", "ordering", "maxmin");
  if (o == "maxmin") return OrderingType::kMaxMin;
  if (o == "random") return OrderingType::kRandom;
  c.fail("neighbors", "ordering", "ordering must be maxmin or random, got '" + o + "'");
}

/// Sampler settings. batch_size "auto" follows the 250 / 500 rule and is capped at n.
inline SamplerConfig read_sampler(const Config& c, Index n, const Overrides& ov) {
  SamplerConfig s;
  const std::string alg = c.get_string("sampler", "algorithm", "sgrld");
  const auto a = parse_algorithm(alg);
  if (!a) c.fail("sampler", "algorithm", "unknown algorithm '" + alg + "'");
  s.algorithm = *a;
  s.n_iters = c.get_long("sampler", "n_iters", 20000);
  if (s.n_iters <= 0) c.fail("sampler", "n_iters", "n_iters must be positive");
  s.burn_in = c.is_auto("sampler", "burn_in") ? -1 : c.get_long("sampler", "burn_in", -1);
  if (s.burn_in >= s.n_iters) c.fail("sampler", "burn_in", "burn_in must be smaller than n_iters");
  if (c.is_auto("sampler", "batch_size")) {
    s.batch_size = std::min<Index>(n <= 10000 ? 250 : 500, n);
  } else {
    const long b = c.get_long("sampler", "batch_size", 250);
    if (b < 1) c.fail("sampler", "batch_size", "batch_size must be positive");
    s.batch_size = std::min<Index>(b, n);
  }
  s.h0 = c.is_auto("sampler", "h0") ? 0.0 : c.get_double("sampler", "h0", 0.0);
  if (c.has("sampler", "h0") && !c.is_auto("sampler", "h0") && !(s.h0 > 0.0)) c.fail("sampler", "h0", "h0 must be positive");
  s.schedule.halve_every_epochs = static_cast<int>(c.get_long("sampler", "halve_every_epochs", 5));
  s.schedule.floor_fraction = c.get_double("sampler", "floor_fraction", 0.01);
  if (!(s.schedule.floor_fraction > 0.0 && s.schedule.floor_fraction <= 1.0)) {
    c.fail("sampler", "floor_fraction", "floor_fraction must lie in (0, 1]");
  }
  s.schedule.enabled = c.get_bool("sampler", "schedule", true);
  s.drift = c.get_bool("sampler", "drift", true);
  s.inject_noise = c.get_bool("sampler", "inject_noise", true);
  s.use_prior = c.get_bool("sampler", "use_prior", true);
  s.stopping_rule = c.get_bool("sampler", "stopping_rule", false);
  s.thin = static_cast<int>(c.get_long("sampler", "thin", 1));
  if (s.thin < 1) c.fail("sampler", "thin", "thin must be at least 1");
  s.seed = ov.seed ? *ov.seed : c.get_u64("sampler", "seed", 1);
  s.opt.rms_decay = c.get_double("sampler", "rms_decay", 0.99);
  s.opt.momentum = c.get_double("sampler", "momentum", 0.9);
  s.opt.adam_beta1 = c.get_double("sampler", "adam_beta1", 0.9);
  s.opt.adam_beta2 = c.get_double("sampler", "adam_beta2", 0.999);
  s.opt.eps = c.get_double("sampler", "eps", 1e-8);
  return s;
}

inline SpatialDataset read_dataset(const Config& c, const std::string& section, const std::string& key,
                                   bool require_y = true) {
  const std::filesystem::path path = resolve(c, c.require_string(section, key));
  ColumnMap map;
  map.s1 = c.get_string("dataset", "s1_column", "s1");
  map.s2 = c.get_string("dataset", "s2_column", "s2");
  map.y = c.get_string("dataset", "y_column", "y");
  map.covariates = c.get_list("dataset", "covariates");
  map.intercept = c.get_bool("dataset", "intercept", false);
  map.quadratic_mean = c.get_bool("dataset", "quadratic_mean", false);
  map.require_y = require_y;
  return read_dataset_csv(path, map);
}

inline int cmd_simulate(const Config& c, const Overrides& ov, std::ostream& out) {
  c.require_known(schema());
  const Index n1 = c.get_long("simulate", "n1", 50), n2 = c.get_long("simulate", "n2", 50);
  if (n1 < 2 || n2 < 2) c.fail("simulate", "n1", "grid dimensions must be at least 2");
  SimConfig sc;
  sc.n1 = n1;
  sc.n2 = n2;
  const double sigma2 = c.get_double("simulate", "sigma2", 5.0);
  const double nu = c.get_double("simulate", "nu", 1.0);
  const double kappa = c.get_double("simulate", "kappa", 1.0);
  if (!(sigma2 > 0.0)) c.fail("simulate", "sigma2", "sigma2 must be positive");
  if (!(nu > 0.0)) c.fail("simulate", "nu", "nu must be positive");
  if (!(kappa >= 0.0)) c.fail("simulate", "kappa", "kappa must be non-negative");
  const double rho = c.is_auto("simulate", "rho") ? choose_range_for_grid(nu, n1, n2) : c.get_double("simulate", "rho", 1.0);
  if (!(rho > 0.0)) c.fail("simulate", "rho", "rho must be positive");
  sc.theta_true = {sigma2, rho, nu, kappa * sigma2};
  sc.kappa = kappa;
  sc.beta_true = (VectorXd(2) << c.get_double("simulate", "beta0", -3.0), c.get_double("simulate", "beta1", 5.0)).finished();
  sc.seed = ov.seed ? *ov.seed : c.get_u64("simulate", "seed", 1);
  sc.ordering = read_ordering(c);
  sc.maxmin_threshold = c.get_long("neighbors", "maxmin_threshold", 100000);
  std::string method = c.get_string("simulate", "method", "auto");
  if (method == "auto") method = sc.N() <= 4000 ? "exact" : "vecchia";
  if (method != "exact" && method != "vecchia") c.fail("simulate", "method", "method must be auto, exact or vecchia");
  const int m_sim = static_cast<int>(c.get_long("simulate", "m_sim", 120));
  if (m_sim < 1) c.fail("simulate", "m_sim", "m_sim must be positive");
  SimulatedData sim = method == "exact" ? simulate_exact(sc) : simulate_vecchia(sc, m_sim);

  const std::filesystem::path dpath = resolve(c, c.get_string("output", "dataset", "simulated.csv"));
  const long holdout = c.get_long("simulate", "holdout", 0);
  if (holdout < 0 || holdout >= sim.data.n()) c.fail("simulate", "holdout", "holdout must lie in [0, N)");
  if (holdout > 0) {
    // a seeded random subset goes to the test file
    std::vector<int> perm = random_order(sim.data.n(), sc.seed ^ 0x5DEECE66DULL);
    const Index nt = holdout, ntr = sim.data.n() - holdout;
    auto take = [&](Index off, Index cnt) {
      SpatialDataset d;
      d.coords.resize(cnt, 2);
      d.y.resize(cnt);
      d.X.resize(cnt, sim.data.p());
      for (Index i = 0; i < cnt; ++i) {
        const int r = perm[static_cast<std::size_t>(off + i)];
        d.coords.row(i) = sim.data.coords.row(r);
        d.y[i] = sim.data.y[r];
        d.X.row(i) = sim.data.X.row(r);
      }
      return d;
    };
    const std::filesystem::path tpath = resolve(c, c.get_string("output", "test_dataset", "simulated_test.csv"));
    write_dataset_csv(tpath, take(ntr, nt));
    write_dataset_csv(dpath, take(0, ntr));
    out << "wrote " << tpath.string() << " (" << nt << " sites)\n";
  } else {
    write_dataset_csv(dpath, sim.data);
  }
  const std::filesystem::path mpath =
      resolve(c, c.get_string("output", "metadata", dpath.filename().string() + ".meta.json"));
  write_json(mpath.is_absolute() ? mpath : dpath.parent_path() / mpath.filename(), simulation_metadata(sim, version_stamp()));
  out << "wrote " << dpath.string() << " (" << sim.data.n() - holdout << " sites, method " << method << ", seed "
      << sc.seed << ", version " << version_stamp() << ")\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "theta_true = (sigma2 %.6g, rho %.6g, nu %.6g, tau2 %.6g)\n", sigma2, rho, nu,
                kappa * sigma2);
  out << buf;
  return 0;
}

inline void print_summary(std::ostream& out, const Config& c, const SamplerConfig& s, const SpatialDataset& d, int m,
                          const Chain& chain) {
  out << "sgvecchia fit  version " << version_stamp() << "  seed " << s.seed << "\n";
  out << "config " << c.origin() << "\n";
  for (const auto& sec : c.sections()) {
    out << "[" << sec << "]\n";
    for (const auto& l : c.echo(sec)) out << "  " << l << "\n";
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "algorithm %s  n %lld  p %lld  m %d  batch %lld  iterations %ld  burn_in %ld  epochs %.2f\n"
                "h0 %.6g  final_h %.6g  draws %zu  time %.2f s%s\n",
                to_string(s.algorithm), static_cast<long long>(d.n()), static_cast<long long>(d.p()), m,
                static_cast<long long>(s.batch_size), chain.iterations_run, s.effective_burn_in(), chain.epochs,
                chain.h0, chain.final_h, chain.size(), chain.total_ms / 1000.0,
                chain.stopped_early ? "  (stopping rule fired)" : "");
  out << buf;
  out << "parameter        mean        lo95        hi95     ess/min\n";
  const Index np = chain.p + kNumTheta;
  for (Index j = 0; j < np; ++j) {
    const std::vector<double> col = chain.column(j);
    const std::string name = j < chain.p ? "beta_" + std::to_string(j) : kThetaNames[static_cast<std::size_t>(j - chain.p)];
    const Interval ci = equal_tailed_interval(col);
    const double epm = col.size() >= 10 && chain.total_ms > 0 ? ess_per_min(col, chain.total_ms) : 0.0;
    std::snprintf(buf, sizeof(buf), "%-10s %11.5g %11.5g %11.5g %11.4g\n", name.c_str(), mean(col), ci.lo, ci.hi, epm);
    out << buf;
  }
}

inline int cmd_fit(const Config& c, const Overrides& ov, std::ostream& out) {
  c.require_known(schema());
  const SpatialDataset data = read_dataset(c, "dataset", "path");
  const int m = static_cast<int>(c.get_long("neighbors", "m", 15));
  if (m < 1) c.fail("neighbors", "m", "m must be at least 1");
  const SamplerConfig s = read_sampler(c, data.n(), ov);
  const PriorSpec prior = read_priors(c);
  const OrderingType ord = read_ordering(c);
  const std::string cache = c.get_string("neighbors", "cache_dir", "");
  ConditioningStructure cs = build_conditioning(data.coords, m, ord, c.get_u64("neighbors", "seed", s.seed),
                                                c.get_long("neighbors", "maxmin_threshold", 100000),
                                                cache.empty() ? std::filesystem::path() : resolve(c, cache));
  const VecchiaModel model(data, std::move(cs), ov.threads);
  auto [beta0, theta0] = default_initial_values(data, prior);
  theta0.sigma2 = c.get_double("sampler", "init_sigma2", theta0.sigma2);
  theta0.rho = c.get_double("sampler", "init_rho", theta0.rho);
  theta0.nu = c.get_double("sampler", "init_nu", theta0.nu);
  theta0.tau2 = c.get_double("sampler", "init_tau2", theta0.tau2);
  if (!theta0.strictly_positive()) c.fail("sampler", "init_sigma2", "initial covariance parameters must be positive");
  const Chain chain = run(model, prior, s, beta0, theta0);
  const std::filesystem::path cpath = resolve(c, c.get_string("output", "chain", "chain.csv"));
  write_chain_csv(cpath, chain);
  if (c.has("output", "summary")) {
    std::ofstream os(resolve(c, c.get_string("output", "summary", "")));
    print_summary(os, c, s, data, m, chain);
  }
  print_summary(out, c, s, data, m, chain);
  out << "wrote " << cpath.string() << " (" << chain.size() << " draws)\n";
  return 0;
}

inline int cmd_predict(const Config& c, const Overrides& ov, std::ostream& out) {
  c.require_known(schema());
  const std::string train_key = c.has("predict", "train") ? "predict" : "dataset";
  const SpatialDataset train = read_dataset(c, train_key, train_key == "predict" ? "train" : "path");
  const std::filesystem::path tpath = resolve(c, c.require_string("predict", "test"));
  const CsvTable tt = read_csv(tpath);
  const bool has_y = tt.column(c.get_string("dataset", "y_column", "y")) >= 0;
  const SpatialDataset test = read_dataset(c, "predict", "test", false);
  const Chain chain = read_chain_csv(resolve(c, c.get_string("predict", "chain", c.get_string("output", "chain", "chain.csv"))));
  if (chain.empty()) c.fail("predict", "chain", "chain file has no draws");
  if (chain.p != train.p() || test.p() != train.p()) c.fail("predict", "chain", "chain, training and test covariates disagree");
  PredictOptions po;
  po.m = static_cast<int>(c.get_long("predict", "m", c.get_long("neighbors", "m", 15)));
  if (po.m < 1) c.fail("predict", "m", "m must be at least 1");
  po.max_draws = static_cast<std::size_t>(c.get_long("predict", "max_draws", 500));
  po.total_samples = static_cast<std::size_t>(c.get_long("predict", "samples", 4000));
  po.seed = ov.seed ? *ov.seed : c.get_u64("predict", "seed", 1);
  po.threads = ov.threads;
  const PredictionResult pr = predict(train, test.coords, test.X, chain, po);
  const std::filesystem::path opath = resolve(c, c.get_string("output", "predictions", "predictions.csv"));
  write_predictions_csv(opath, test.coords, pr);
  out << "wrote " << opath.string() << " (" << test.n() << " sites, version " << version_stamp() << ", seed "
      << po.seed << ")\n";
  if (has_y) {
    std::vector<double> pm(pr.mean.data(), pr.mean.data() + pr.mean.size());
    std::vector<double> obs(test.y.data(), test.y.data() + test.y.size());
    Index cov = 0;
    for (Index i = 0; i < test.n(); ++i) cov += (pr.lower95[i] <= test.y[i] && test.y[i] <= pr.upper95[i]) ? 1 : 0;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "mse %.6g  r2 %.6g  coverage95 %.4f\n", mse(pm, obs), r2(pm, obs),
                  static_cast<double>(cov) / static_cast<double>(test.n()));
    out << buf;
  }
  return 0;
}

inline int cmd_bench(const Config& c, const Overrides& ov, std::ostream& out) {
  c.require_known(schema());
  BenchConfig b;
  b.n1 = c.get_long("bench", "n1", 100);
  b.n2 = c.get_long("bench", "n2", 100);
  if (b.n1 < 2 || b.n2 < 2) c.fail("bench", "n1", "grid dimensions must be at least 2");
  b.sigma2 = c.get_double("bench", "sigma2", 5.0);
  b.nu = c.get_double("bench", "nu", 1.0);
  b.kappa = c.get_double("bench", "kappa", 1.0);
  b.rho = c.is_auto("bench", "rho") ? 0.0 : c.get_double("bench", "rho", 0.0);
  b.replicates = static_cast<int>(c.get_long("bench", "replicates", 5));
  if (b.replicates < 1) c.fail("bench", "replicates", "replicates must be positive");
  b.algorithms.clear();
  for (const auto& name : c.get_list("bench", "algorithms")) {
    const auto a = parse_algorithm(name);
    if (!a) c.fail("bench", "algorithms", "unknown algorithm '" + name + "'");
    b.algorithms.push_back(*a);
  }
  if (b.algorithms.empty()) b.algorithms = {Algorithm::kSgrld, Algorithm::kPsgld, Algorithm::kAdamSgld, Algorithm::kMsgld};
  b.m_sim = static_cast<int>(c.get_long("bench", "m_sim", 120));
  b.sim_method = c.get_string("bench", "sim_method", "vecchia");
  if (b.sim_method != "exact" && b.sim_method != "vecchia") c.fail("bench", "sim_method", "sim_method must be exact or vecchia");
  b.seed = ov.seed ? *ov.seed : c.get_u64("bench", "seed", 1);
  b.m = static_cast<int>(c.get_long("neighbors", "m", 15));
  b.ordering = read_ordering(c);
  b.maxmin_threshold = c.get_long("neighbors", "maxmin_threshold", 100000);
  b.prior = read_priors(c);
  b.sampler = read_sampler(c, b.n1 * b.n2, ov);
  b.threads = ov.threads;
  const CovarianceParams t = b.truth();
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "sgvecchia bench  version %s  seed %llu  N %lld  truth (sigma2 %.4g, rho %.4g, nu %.4g, tau2 %.4g)\n",
                version_stamp().c_str(), static_cast<unsigned long long>(b.seed), static_cast<long long>(b.n1 * b.n2),
                t.sigma2, t.rho, t.nu, t.tau2);
  out << buf << std::flush;
  const BenchReport rep = run_bench(b, [&](const std::string& line) { out << line << "\n" << std::flush; });
  out << "algorithm  parameter        mse (mc_se)         coverage   ess/min\n";
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%-10s %-9s %10.4g (%8.3g) %10.3f %9.4g\n", to_string(r.algorithm),
                  r.parameter.c_str(), r.mse, r.mc_se, r.coverage, r.ess_per_min);
    out << buf;
  }
  const std::filesystem::path rpath = resolve(c, c.get_string("output", "report", "bench_report.csv"));
  write_bench_csv(rpath, rep);
  out << "wrote " << rpath.string() << "\n";
  return 0;
}

}  // namespace sgvecchia::cli
