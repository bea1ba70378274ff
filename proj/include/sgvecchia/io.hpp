/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgvecchia/error.hpp"
#include "sgvecchia/predict.hpp"
#include "sgvecchia/samplers.hpp"
#include "sgvecchia/simulate.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

/// Numeric CSV table with a header row. rows[i] came from file line line_of[i].
struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<long> line_of;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
  }
  int require_column(const std::string& name) const {
    const int j = column(name);
    if (j < 0) throw CsvError(file, 1, "missing column '" + name + "'");
    return j;
  }
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = line.find(sep, start);
    out.push_back(trim(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable t;
  t.file = path.string();
  std::ifstream in(path);
  if (!in) throw CsvError(t.file, 0, "cannot open file");
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw CsvError(t.file, lineno, "no header row");
  for (auto f : detail::split(line)) t.header.emplace_back(f);
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line);
    if (fields.size() != t.header.size()) {
      throw CsvError(t.file, lineno,
                     "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_double(fields[j], row[j])) {
        throw CsvError(t.file, lineno, "field '" + t.header[j] + "' is not a number: '" + std::string(fields[j]) + "'");
      }
    }
    t.rows.push_back(std::move(row));
    t.line_of.push_back(lineno);
  }
  return t;
}

/// Column mapping for generic tables (Argo-style files).
struct ColumnMap {
  std::string s1 = "s1";
  std::string s2 = "s2";
  std::string y = "y";
  std::vector<std::string> covariates;  // empty: every x_* column in order
  bool intercept = false;               // prepend a column of ones (mapped covariates only)
  bool quadratic_mean = false;          // X = (1, s1, s2, s1^2, s2^2, s1 s2)
  bool require_y = true;
};

inline MatrixXd quadratic_design(const Coords& c) {
  MatrixXd X(c.rows(), 6);
  X.col(0).setOnes();
  X.col(1) = c.col(0);
  X.col(2) = c.col(1);
  X.col(3) = c.col(0).array().square().matrix();
  X.col(4) = c.col(1).array().square().matrix();
  X.col(5) = c.col(0).cwiseProduct(c.col(1));
  return X;
}

/// Builds a dataset from a table. Rows with duplicate coordinates are rejected with the row named.
inline SpatialDataset dataset_from_table(const CsvTable& t, const ColumnMap& map = {}) {
  const int js1 = t.require_column(map.s1), js2 = t.require_column(map.s2);
  const int jy = map.require_y ? t.require_column(map.y) : t.column(map.y);
  std::vector<int> jx;
  if (!map.quadratic_mean) {
    if (map.covariates.empty()) {
      for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (t.header[j].rfind("x_", 0) == 0) jx.push_back(static_cast<int>(j));
      }
    } else {
      for (const auto& c : map.covariates) jx.push_back(t.require_column(c));
    }
  }
  const Index n = static_cast<Index>(t.rows.size());
  if (n == 0) throw CsvError(t.file, 1, "no data rows");
  SpatialDataset d;
  d.coords.resize(n, 2);
  d.y.setZero(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    d.coords(i, 0) = r[static_cast<std::size_t>(js1)];
    d.coords(i, 1) = r[static_cast<std::size_t>(js2)];
    if (jy >= 0) d.y[i] = r[static_cast<std::size_t>(jy)];
  }
  if (map.quadratic_mean) {
    d.X = quadratic_design(d.coords);
  } else {
    const Index off = map.intercept ? 1 : 0;
    d.X.resize(n, off + static_cast<Index>(jx.size()));
    if (map.intercept) d.X.col(0).setOnes();
    for (Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < jx.size(); ++j) {
        d.X(i, off + static_cast<Index>(j)) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(jx[j])];
      }
    }
  }
  if (d.X.cols() == 0) throw CsvError(t.file, 1, "no covariate columns");
  // name the first offending row for duplicate sites
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return std::pair(d.coords(a, 0), d.coords(a, 1)) < std::pair(d.coords(b, 0), d.coords(b, 1));
  });
  for (std::size_t q = 1; q < idx.size(); ++q) {
    if (d.coords.row(idx[q]) == d.coords.row(idx[q - 1])) {
      const Index later = std::max(idx[q], idx[q - 1]);
      throw CsvError(t.file, t.line_of[static_cast<std::size_t>(later)], "duplicate site coordinates");
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (!d.coords.row(i).allFinite() || !std::isfinite(d.y[i]) || !d.X.row(i).allFinite()) {
      throw CsvError(t.file, t.line_of[static_cast<std::size_t>(i)], "non-finite value");
    }
  }
  return d;
}

inline SpatialDataset read_dataset_csv(const std::filesystem::path& path, const ColumnMap& map = {}) {
  return dataset_from_table(read_csv(path), map);
}

inline void write_dataset_csv(const std::filesystem::path& path, const SpatialDataset& d) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "s1,s2,y";
  for (Index j = 0; j < d.p(); ++j) os << ",x_" << j;
  os << '\n';
  for (Index i = 0; i < d.n(); ++i) {
    os << detail::fmt(d.coords(i, 0)) << ',' << detail::fmt(d.coords(i, 1)) << ',' << detail::fmt(d.y[i]);
    for (Index j = 0; j < d.p(); ++j) os << ',' << detail::fmt(d.X(i, j));
    os << '\n';
  }
}

/// Sidecar with the simulation truth, seed and ordering.
inline nlohmann::json simulation_metadata(const SimulatedData& s, const std::string& version) {
  nlohmann::json j;
  j["method"] = s.method;
  j["seed"] = s.seed;
  j["ordering"] = to_string(s.ordering);
  j["theta_true"] = {{"sigma2", s.theta.sigma2}, {"rho", s.theta.rho}, {"nu", s.theta.nu}, {"tau2", s.theta.tau2}};
  j["beta_true"] = std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size());
  j["n"] = s.data.n();
  j["x_raw"] = std::vector<double>(s.x_raw.data(), s.x_raw.data() + s.x_raw.size());
  j["version"] = version;
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

inline std::string chain_header(Index p) {
  std::string h = "iter";
  for (Index j = 0; j < p; ++j) h += ",beta_" + std::to_string(j);
  h += ",sigma2,rho,nu,tau2,wall_ms";
  return h;
}

inline void write_chain_csv(const std::filesystem::path& path, const Chain& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << chain_header(c.p) << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << c.iteration[i];
    for (Index j = 0; j < c.draws[i].size(); ++j) os << ',' << detail::fmt(c.draws[i][j]);
    os << ',' << detail::fmt(c.wall_ms[i]) << '\n';
  }
}

inline Chain read_chain_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const int ji = t.require_column("iter");
  const int jw = t.require_column("wall_ms");
  Chain c;
  std::vector<int> cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j].rfind("beta_", 0) == 0) cols.push_back(static_cast<int>(j));
  }
  c.p = static_cast<Index>(cols.size());
  for (const char* name : kThetaNames) cols.push_back(t.require_column(name));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    VectorXd d(static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) d[static_cast<Index>(j)] = r[static_cast<std::size_t>(cols[j])];
    if (!(d.tail(kNumTheta).array() > 0.0).all()) throw CsvError(t.file, t.line_of[i], "covariance draw not positive");
    c.iteration.push_back(static_cast<long>(r[static_cast<std::size_t>(ji)]));
    c.draws.push_back(std::move(d));
    c.wall_ms.push_back(r[static_cast<std::size_t>(jw)]);
  }
  if (!c.wall_ms.empty()) c.total_ms = c.wall_ms.back();
  return c;
}

inline void write_predictions_csv(const std::filesystem::path& path, const Coords& coords, const PredictionResult& r) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "s1,s2,mean,lo95,hi95\n";
  for (Index i = 0; i < coords.rows(); ++i) {
    os << detail::fmt(coords(i, 0)) << ',' << detail::fmt(coords(i, 1)) << ',' << detail::fmt(r.mean[i]) << ','
       << detail::fmt(r.lower95[i]) << ',' << detail::fmt(r.upper95[i]) << '\n';
  }
}

}  // namespace sgvecchia
