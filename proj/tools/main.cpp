/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace sgvecchia;
  CLI::App app{"Vecchia-approximated stochastic gradient MCMC for Matern GP regression"};
  app.set_version_flag("--version", std::string(SGVECCHIA_VERSION));
  app.require_subcommand(1);
  std::string config;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "override the seed in the config file");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "configuration file")->required();
    return sub;
  };
  CLI::App* sim = add("simulate", "simulate a grid dataset");
  CLI::App* fit = add("fit", "run a sampler and write the chain");
  CLI::App* pred = add("predict", "kriging predictions from a chain");
  CLI::App* bench = add("bench", "replicated simulation study");
  CLI11_PARSE(app, argc, argv);

  cli::Overrides ov;
  if (app.count("--seed")) ov.seed = seed;
  ov.threads = threads;
  try {
    const Config cfg = Config::load(config);
    if (sim->parsed()) return cli::cmd_simulate(cfg, ov, std::cout);
    if (fit->parsed()) return cli::cmd_fit(cfg, ov, std::cout);
    if (pred->parsed()) return cli::cmd_predict(cfg, ov, std::cout);
    if (bench->parsed()) return cli::cmd_bench(cfg, ov, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << config << ": " << e.what() << "\n";
    return 2;
  } catch (const CsvError& e) {
    std::cerr << "csv error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what();
    if (e.iteration() >= 0) std::cerr << " at iteration " << e.iteration();
    if (e.site() >= 0) std::cerr << " at site " << e.site();
    std::cerr << "\n";
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
