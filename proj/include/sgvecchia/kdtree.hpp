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
#include <climits>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "sgvecchia/types.hpp"

namespace sgvecchia {

/// Static 2-D kd-tree answering k-nearest-neighbour queries restricted to points whose rank is
/// below a bound. Distance ties resolve to the lower point index.
class KdTree2 {
 public:
  /// `rank[i]` is the admission rank of point i; empty means every point has rank 0.
  explicit KdTree2(const Coords& pts, std::vector<int> rank = {}) : pts_(pts), rank_(std::move(rank)) {
    const Index n = pts_.rows();
    if (rank_.empty()) rank_.assign(static_cast<std::size_t>(n), 0);
    perm_.resize(static_cast<std::size_t>(n));
    std::iota(perm_.begin(), perm_.end(), 0);
    if (n > 0) {
      nodes_.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 2));
      build(0, static_cast<int>(n));
    }
  }

  struct Hit {
    double dist2;
    int index;
    bool operator<(const Hit& o) const { return dist2 != o.dist2 ? dist2 < o.dist2 : index < o.index; }
  };

  /// Up to k nearest points with rank < max_rank, sorted by (distance, index).
  std::vector<Hit> knn(double qx, double qy, int k, int max_rank = INT_MAX) const {
    std::vector<Hit> heap;
    if (nodes_.empty() || k <= 0) return heap;
    heap.reserve(static_cast<std::size_t>(k) + 1);
    search(0, qx, qy, k, max_rank, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

 private:
  static constexpr int kLeafSize = 8;

  struct Node {
    int lo, hi;          // range in perm_
    int left = -1, right = -1;
    int min_rank;
    double xmin, xmax, ymin, ymax;
  };

  int build(int lo, int hi) {
    Node node{lo, hi, -1, -1, INT_MAX, std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()};
    for (int t = lo; t < hi; ++t) {
      const int i = perm_[static_cast<std::size_t>(t)];
      node.xmin = std::min(node.xmin, pts_(i, 0));
      node.xmax = std::max(node.xmax, pts_(i, 0));
      node.ymin = std::min(node.ymin, pts_(i, 1));
      node.ymax = std::max(node.ymax, pts_(i, 1));
      node.min_rank = std::min(node.min_rank, rank_[static_cast<std::size_t>(i)]);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (hi - lo > kLeafSize) {
      const int dim = (node.xmax - node.xmin) >= (node.ymax - node.ymin) ? 0 : 1;
      const int mid = lo + (hi - lo) / 2;
      std::nth_element(perm_.begin() + lo, perm_.begin() + mid, perm_.begin() + hi,
                       [&](int a, int b) { return pts_(a, dim) < pts_(b, dim); });
      const int l = build(lo, mid);
      const int r = build(mid, hi);
      nodes_[static_cast<std::size_t>(id)].left = l;
      nodes_[static_cast<std::size_t>(id)].right = r;
    }
    return id;
  }

  static double box_dist2(const Node& nd, double qx, double qy) {
    const double dx = qx < nd.xmin ? nd.xmin - qx : (qx > nd.xmax ? qx - nd.xmax : 0.0);
    const double dy = qy < nd.ymin ? nd.ymin - qy : (qy > nd.ymax ? qy - nd.ymax : 0.0);
    return dx * dx + dy * dy;
  }

  void search(int id, double qx, double qy, int k, int max_rank, std::vector<Hit>& heap) const {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.min_rank >= max_rank) return;
    if (static_cast<int>(heap.size()) == k && box_dist2(nd, qx, qy) > heap.front().dist2) return;
    if (nd.left < 0) {
      for (int t = nd.lo; t < nd.hi; ++t) {
        const int i = perm_[static_cast<std::size_t>(t)];
        if (rank_[static_cast<std::size_t>(i)] >= max_rank) continue;
        const double dx = pts_(i, 0) - qx, dy = pts_(i, 1) - qy;
        const Hit h{dx * dx + dy * dy, i};
        if (static_cast<int>(heap.size()) < k) {
          heap.push_back(h);
          std::push_heap(heap.begin(), heap.end());
        } else if (h < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = h;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const Node& l = nodes_[static_cast<std::size_t>(nd.left)];
    const Node& r = nodes_[static_cast<std::size_t>(nd.right)];
    if (box_dist2(l, qx, qy) <= box_dist2(r, qx, qy)) {
      search(nd.left, qx, qy, k, max_rank, heap);
      search(nd.right, qx, qy, k, max_rank, heap);
    } else {
      search(nd.right, qx, qy, k, max_rank, heap);
      search(nd.left, qx, qy, k, max_rank, heap);
    }
  }

  Coords pts_;
  std::vector<int> rank_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

}  // namespace sgvecchia
