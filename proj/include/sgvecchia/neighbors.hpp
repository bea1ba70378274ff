/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgvecchia/kdtree.hpp"
#include "sgvecchia/types.hpp"

namespace sgvecchia {

enum class OrderingType : int { kMaxMin = 0, kRandom = 1 };

inline const char* to_string(OrderingType t) { return t == OrderingType::kMaxMin ? "maxmin" : "random"; }

/// Site permutation plus, for every ordered position i, the ascending positions N_i of its
/// conditioning set (all N_i entries are < i and |N_i| = min(i, m)).
struct ConditioningStructure {
  std::vector<int> order;                       // order[position] = original row
  std::vector<std::vector<int>> neighbor_sets;  // by position
  int m = 0;
  OrderingType ordering = OrderingType::kMaxMin;

  Index n() const { return static_cast<Index>(order.size()); }
};

/// Greedy max-min ordering: start at the site nearest the centroid, then repeatedly take the site
/// farthest from everything already ordered. O(n^2); ties go to the lowest original index.
inline std::vector<int> maxmin_order(const Coords& coords) {
  const Index n = coords.rows();
  std::vector<int> order;
  if (n == 0) return order;
  order.reserve(static_cast<std::size_t>(n));
  const double cx = coords.col(0).mean(), cy = coords.col(1).mean();
  int first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    const double dx = coords(i, 0) - cx, dy = coords(i, 1) - cy;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best) {
      best = d2;
      first = static_cast<int>(i);
    }
  }
  std::vector<double> mind(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  int next = first;
  for (Index step = 0; step < n; ++step) {
    order.push_back(next);
    used[static_cast<std::size_t>(next)] = 1;
    const double px = coords(next, 0), py = coords(next, 1);
    int arg = -1;
    double far = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double dx = coords(j, 0) - px, dy = coords(j, 1) - py;
      double& mj = mind[static_cast<std::size_t>(j)];
      mj = std::min(mj, dx * dx + dy * dy);
      if (mj > far) {
        far = mj;
        arg = static_cast<int>(j);
      }
    }
    next = arg;
  }
  return order;
}

/// Uniform random permutation (Fisher-Yates driven by a seeded 64-bit Mersenne twister).
inline std::vector<int> random_order(Index n, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}

/// Conditioning sets of the m nearest previously-ordered sites (Euclidean distance, ties to the
/// lower original index), found through a rank-restricted kd-tree search.
inline ConditioningStructure nearest_ordered_neighbors(const Coords& coords, std::vector<int> order, int m) {
  const Index n = coords.rows();
  if (m < 1) throw DomainError("conditioning size m must be at least 1");
  if (static_cast<Index>(order.size()) != n) throw DomainError("order length does not match coordinates");
  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int row = order[pos];
    if (row < 0 || row >= n || rank[static_cast<std::size_t>(row)] != -1) {
      throw DomainError("order is not a permutation");
    }
    rank[static_cast<std::size_t>(row)] = static_cast<int>(pos);
  }
  ConditioningStructure cs;
  cs.m = m;
  cs.neighbor_sets.resize(static_cast<std::size_t>(n));
  const KdTree2 tree(coords, rank);
  for (Index pos = 1; pos < n; ++pos) {
    auto& set = cs.neighbor_sets[static_cast<std::size_t>(pos)];
    if (pos <= m) {
      set.resize(static_cast<std::size_t>(pos));
      std::iota(set.begin(), set.end(), 0);
      continue;
    }
    const int row = order[static_cast<std::size_t>(pos)];
    const auto hits = tree.knn(coords(row, 0), coords(row, 1), m, static_cast<int>(pos));
    set.reserve(hits.size());
    for (const auto& h : hits) set.push_back(rank[static_cast<std::size_t>(h.index)]);
    std::sort(set.begin(), set.end());
  }
  cs.order = std::move(order);
  return cs;
}

// ---------------------------------------------------------------------------------------------
// On-disk cache keyed by (coordinate hash, m, ordering, seed).

/// FNV-1a over the raw coordinate bytes (row-major x, y pairs).
inline std::uint64_t coords_hash(const Coords& coords) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index i = 0; i < coords.rows(); ++i) {
    for (int c = 0; c < 2; ++c) {
      const double v = coords(i, c);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

struct ConditioningCacheKey {
  std::uint64_t coords_hash = 0;
  int m = 0;
  OrderingType ordering = OrderingType::kMaxMin;
  std::uint64_t seed = 0;  // only meaningful for random ordering

  std::string file_name() const {
    std::ostringstream os;
    os << "cs_" << std::hex << coords_hash << std::dec << "_m" << m << "_" << to_string(ordering);
    if (ordering == OrderingType::kRandom) os << "_s" << seed;
    os << ".bin";
    return os.str();
  }
};

namespace detail {
inline constexpr char kCacheMagic[8] = {'S', 'G', 'V', 'C', 'S', '0', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
bool read_pod(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}
}  // namespace detail

inline void save_conditioning(const std::filesystem::path& file, const ConditioningCacheKey& key,
                              const ConditioningStructure& cs) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write conditioning cache " + file.string());
  os.write(detail::kCacheMagic, sizeof(detail::kCacheMagic));
  detail::write_pod(os, key.coords_hash);
  detail::write_pod(os, static_cast<std::int32_t>(key.m));
  detail::write_pod(os, static_cast<std::int32_t>(key.ordering));
  detail::write_pod(os, key.seed);
  detail::write_pod(os, static_cast<std::int64_t>(cs.n()));
  for (int v : cs.order) detail::write_pod(os, static_cast<std::int32_t>(v));
  for (const auto& set : cs.neighbor_sets) {
    detail::write_pod(os, static_cast<std::int32_t>(set.size()));
    for (int v : set) detail::write_pod(os, static_cast<std::int32_t>(v));
  }
}

/// Returns false if the file is missing, truncated, or written for a different key.
inline bool load_conditioning(const std::filesystem::path& file, const ConditioningCacheKey& key,
                              ConditioningStructure& cs) {
  std::ifstream is(file, std::ios::binary);
  if (!is) return false;
  char magic[sizeof(detail::kCacheMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kCacheMagic, sizeof(magic)) != 0) return false;
  std::uint64_t hash = 0, seed = 0;
  std::int32_t m = 0, ordering = 0;
  std::int64_t n = 0;
  if (!detail::read_pod(is, hash) || !detail::read_pod(is, m) || !detail::read_pod(is, ordering) ||
      !detail::read_pod(is, seed) || !detail::read_pod(is, n)) {
    return false;
  }
  if (hash != key.coords_hash || m != key.m || ordering != static_cast<std::int32_t>(key.ordering) ||
      (key.ordering == OrderingType::kRandom && seed != key.seed) || n < 0) {
    return false;
  }
  ConditioningStructure out;
  out.m = m;
  out.ordering = key.ordering;
  out.order.resize(static_cast<std::size_t>(n));
  for (auto& v : out.order) {
    std::int32_t x;
    if (!detail::read_pod(is, x)) return false;
    v = x;
  }
  out.neighbor_sets.resize(static_cast<std::size_t>(n));
  for (auto& set : out.neighbor_sets) {
    std::int32_t len;
    if (!detail::read_pod(is, len) || len < 0 || len > m) return false;
    set.resize(static_cast<std::size_t>(len));
    for (auto& v : set) {
      std::int32_t x;
      if (!detail::read_pod(is, x)) return false;
      v = x;
    }
  }
  cs = std::move(out);
  return true;
}

/// Orders the sites and builds conditioning sets. Above `maxmin_threshold` sites, max-min is
/// replaced by a random order. When `cache_dir` is non-empty the structure is read from / written
/// to a cache file there.
inline ConditioningStructure build_conditioning(const Coords& coords, int m, OrderingType requested,
                                                std::uint64_t seed, Index maxmin_threshold = 100000,
                                                const std::filesystem::path& cache_dir = {}) {
  const OrderingType ordering =
      (requested == OrderingType::kMaxMin && coords.rows() > maxmin_threshold) ? OrderingType::kRandom : requested;
  ConditioningCacheKey key{coords_hash(coords), m, ordering, ordering == OrderingType::kRandom ? seed : 0};
  ConditioningStructure cs;
  if (!cache_dir.empty() && load_conditioning(cache_dir / key.file_name(), key, cs)) return cs;
  std::vector<int> order =
      ordering == OrderingType::kMaxMin ? maxmin_order(coords) : random_order(coords.rows(), seed);
  cs = nearest_ordered_neighbors(coords, std::move(order), m);
  cs.ordering = ordering;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    save_conditioning(cache_dir / key.file_name(), key, cs);
  }
  return cs;
}

}  // namespace sgvecchia
