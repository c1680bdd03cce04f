#pragma once

// Edmonds-Karp max-flow on a small dense network with integer capacities.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace rco {

class MaxFlow {
 public:
  using Capacity = std::int64_t;
  static constexpr Capacity kInfinite = std::numeric_limits<Capacity>::max() / 4;

  explicit MaxFlow(int vertices) : n_(vertices), cap_(static_cast<std::size_t>(vertices) * vertices, 0) {}

  [[nodiscard]] int size() const { return n_; }

  void add_arc(int from, int to, Capacity c) {
    auto& slot = cap_[idx(from, to)];
    slot = std::min(kInfinite, slot + c);
  }

  void add_edge(int u, int v, Capacity c) {
    add_arc(u, v, c);
    add_arc(v, u, c);
  }

  /// Maximum s-t flow value. Leaves the residual network in place for
  /// source_side().
  Capacity run(int s, int t) {
    residual_ = cap_;
    Capacity total = 0;
    std::vector<int> parent(n_);
    while (true) {
      std::fill(parent.begin(), parent.end(), -1);
      parent[s] = s;
      std::queue<int> bfs;
      bfs.push(s);
      while (!bfs.empty() && parent[t] < 0) {
        const int u = bfs.front();
        bfs.pop();
        for (int v = 0; v < n_; ++v) {
          if (parent[v] < 0 && residual_[idx(u, v)] > 0) {
            parent[v] = u;
            bfs.push(v);
          }
        }
      }
      if (parent[t] < 0) break;
      Capacity push = kInfinite;
      for (int v = t; v != s; v = parent[v]) push = std::min(push, residual_[idx(parent[v], v)]);
      for (int v = t; v != s; v = parent[v]) {
        residual_[idx(parent[v], v)] -= push;
        residual_[idx(v, parent[v])] += push;
      }
      total += push;
      if (total >= kInfinite) break;
    }
    return total;
  }

  /// Vertices reachable from s in the residual network of the last run().
  [[nodiscard]] std::vector<bool> source_side(int s) const {
    std::vector<bool> seen(n_, false);
    std::vector<int> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n_; ++v) {
        if (!seen[v] && residual_[idx(u, v)] > 0) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return seen;
  }

 private:
  [[nodiscard]] std::size_t idx(int u, int v) const { return static_cast<std::size_t>(u) * n_ + v; }

  int n_;
  std::vector<Capacity> cap_;
  std::vector<Capacity> residual_;
};

}  // namespace rco
