/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace sgvecchia {

/// Invalid argument outside a function's mathematical domain (non-positive theta, negative distance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown: failed Cholesky, singular Fisher block, non-finite gradient.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long site = -1, long iteration = -1)
      : std::runtime_error(what), site_(site), iteration_(iteration) {}

  long site() const noexcept { return site_; }
  long iteration() const noexcept { return iteration_; }

 private:
  long site_;
  long iteration_;
};

/// Covariance block with coincident locations.
class DegenerateMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed configuration text; line is 1-based, 0 when not attributable to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Malformed CSV input; row is the 1-based file line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& file, long row, const std::string& what)
      : std::runtime_error(file + (row > 0 ? " row " + std::to_string(row) : std::string()) + ": " + what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

}  // namespace sgvecchia
