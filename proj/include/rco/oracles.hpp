#pragma once

// Separation oracles: explicit row lists, node boxes, and the combinatorial
// models (grid shortest path, assignment, spanning tree, TSP).

#include "rco/linalg.hpp"
#include "rco/maxflow.hpp"
#include "rco/separation.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rco {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Most violated row of A x <= b, smallest index on ties.
inline SeparationResult separate_explicit(const RowMajorMatrix& a, const Vector& b, const Vector& x,
                                          double tol = kSeparationTol) {
  if (a.cols() != x.size() || a.rows() != b.size()) throw DimensionMismatch("separate_explicit: size mismatch");
  Eigen::Index best = -1;
  double worst = tol;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double v = a.row(i).dot(x) - b(i);
    if (v > worst) {
      worst = v;
      best = i;
    }
  }
  if (best < 0) return Feasible{};
  return Violated{a.row(best).transpose(), b(best), worst};
}

class ExplicitRowsOracle final : public SeparationOracle {
 public:
  ExplicitRowsOracle(RowMajorMatrix a, Vector b, double tol = kSeparationTol)
      : a_(std::move(a)), b_(std::move(b)), tol_(tol) {}

  [[nodiscard]] SeparationResult separate(const Vector& x) const override { return separate_explicit(a_, b_, x, tol_); }

  [[nodiscard]] const RowMajorMatrix& a() const { return a_; }
  [[nodiscard]] const Vector& b() const { return b_; }

 private:
  RowMajorMatrix a_;
  Vector b_;
  double tol_;
};

/// Most violated bound of l <= x <= u.
inline SeparationResult separate_box(const Vector& lower, const Vector& upper, const Vector& x,
                                     double tol = kSeparationTol) {
  Eigen::Index best = -1;
  double worst = tol;
  double sign = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) - upper(i) > worst) {
      worst = x(i) - upper(i);
      best = i;
      sign = 1.0;
    }
    if (lower(i) - x(i) > worst) {
      worst = lower(i) - x(i);
      best = i;
      sign = -1.0;
    }
  }
  if (best < 0) return Feasible{};
  Vector a = Vector::Zero(x.size());
  a(best) = sign;
  return Violated{std::move(a), sign > 0 ? upper(best) : -lower(best), worst};
}

/// Box rows of a branch-and-bound node checked before the model's oracle.
class BoxedOracle final : public SeparationOracle {
 public:
  BoxedOracle(Vector lower, Vector upper, const SeparationOracle& inner, double tol = kSeparationTol)
      : lower_(std::move(lower)), upper_(std::move(upper)), inner_(&inner), tol_(tol) {}
  BoxedOracle(Vector, Vector, const SeparationOracle&&, double = kSeparationTol) = delete;

  [[nodiscard]] SeparationResult separate(const Vector& x) const override {
    SeparationResult r = separate_box(lower_, upper_, x, tol_);
    if (!is_feasible(r)) return r;
    return inner_->separate(x);
  }

 private:
  Vector lower_;
  Vector upper_;
  const SeparationOracle* inner_;
  double tol_;
};

enum class GraphKind { GridSP, Assignment, MstComplete, MstGrid, Tsp };

inline std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::GridSP: return "grid-sp";
    case GraphKind::Assignment: return "assignment";
    case GraphKind::MstComplete: return "mst";
    case GraphKind::MstGrid: return "mst-grid";
    case GraphKind::Tsp: return "tsp";
  }
  return "unknown";
}

struct Edge {
  int u = 0;
  int v = 0;
};

/// Graph of a combinatorial model; variable e is the indicator of edges[e].
struct GraphModel {
  GraphKind kind = GraphKind::GridSP;
  /// Grid side r for grid models, |V| otherwise.
  int param = 0;
  int vertices = 0;
  bool directed = false;
  int source = -1;
  int sink = -1;
  std::vector<Edge> edges;

  [[nodiscard]] int num_vars() const { return static_cast<int>(edges.size()); }
};

namespace detail {

inline std::vector<Edge> grid_edges(int r) {
  std::vector<Edge> e;
  for (int row = 0; row < r; ++row) {
    for (int col = 0; col < r; ++col) {
      const int id = row * r + col;
      if (col + 1 < r) e.push_back({id, id + 1});
      if (row + 1 < r) e.push_back({id, id + r});
    }
  }
  return e;
}

inline std::vector<Edge> complete_edges(int v) {
  std::vector<Edge> e;
  for (int i = 0; i < v; ++i) {
    for (int j = i + 1; j < v; ++j) e.push_back({i, j});
  }
  return e;
}

}  // namespace detail

/// r x r grid, edges directed left-to-right and top-to-bottom, from the top
/// left corner to the bottom right corner.
inline GraphModel make_grid_sp(int r) {
  if (r < 2) throw std::invalid_argument("make_grid_sp: r must be at least 2");
  GraphModel g;
  g.kind = GraphKind::GridSP;
  g.param = r;
  g.vertices = r * r;
  g.directed = true;
  g.source = 0;
  g.sink = r * r - 1;
  g.edges = detail::grid_edges(r);
  return g;
}

/// Complete bipartite graph with |V|/2 vertices per side.
inline GraphModel make_assignment(int v) {
  if (v < 2 || v % 2 != 0) throw std::invalid_argument("make_assignment: |V| must be even and positive");
  GraphModel g;
  g.kind = GraphKind::Assignment;
  g.param = v;
  g.vertices = v;
  const int half = v / 2;
  for (int i = 0; i < half; ++i) {
    for (int j = 0; j < half; ++j) g.edges.push_back({i, half + j});
  }
  return g;
}

inline GraphModel make_mst_complete(int v) {
  if (v < 2) throw std::invalid_argument("make_mst_complete: |V| must be at least 2");
  GraphModel g;
  g.kind = GraphKind::MstComplete;
  g.param = v;
  g.vertices = v;
  g.edges = detail::complete_edges(v);
  return g;
}

inline GraphModel make_mst_grid(int r) {
  if (r < 2) throw std::invalid_argument("make_mst_grid: r must be at least 2");
  GraphModel g;
  g.kind = GraphKind::MstGrid;
  g.param = r;
  g.vertices = r * r;
  g.edges = detail::grid_edges(r);
  return g;
}

inline GraphModel make_tsp(int v) {
  if (v < 3) throw std::invalid_argument("make_tsp: |V| must be at least 3");
  GraphModel g;
  g.kind = GraphKind::Tsp;
  g.param = v;
  g.vertices = v;
  g.edges = detail::complete_edges(v);
  return g;
}

inline GraphModel make_graph_model(GraphKind kind, int param) {
  switch (kind) {
    case GraphKind::GridSP: return make_grid_sp(param);
    case GraphKind::Assignment: return make_assignment(param);
    case GraphKind::MstComplete: return make_mst_complete(param);
    case GraphKind::MstGrid: return make_mst_grid(param);
    case GraphKind::Tsp: return make_tsp(param);
  }
  throw std::invalid_argument("make_graph_model: unknown kind");
}

/// Number of inequalities of the full model, box rows included, as counted in
/// the benchmark tables (exponential families evaluated in floating point).
inline double model_row_count(const GraphModel& g) {
  const double n = g.num_vars();
  const double v = g.vertices;
  switch (g.kind) {
    case GraphKind::GridSP: return n + 2.0 * v;
    case GraphKind::Assignment: return v + n;
    case GraphKind::MstComplete:
    case GraphKind::MstGrid: return std::ldexp(1.0, g.vertices) + n;
    case GraphKind::Tsp: return std::ldexp(1.0, g.vertices) + 3.0 * n - 2.0;
  }
  return 0.0;
}

struct EqualityRow {
  Vector a;
  double b = 0.0;
};

/// Equations of the model: flow conservation, assignment and degree rows, or
/// the spanning tree cardinality row.
inline std::vector<EqualityRow> equality_rows(const GraphModel& g) {
  const int n = g.num_vars();
  std::vector<EqualityRow> rows;
  switch (g.kind) {
    case GraphKind::GridSP:
      for (int i = 0; i < g.vertices; ++i) {
        EqualityRow r{Vector::Zero(n), 0.0};
        for (int e = 0; e < n; ++e) {
          if (g.edges[e].u == i) r.a(e) += 1.0;
          if (g.edges[e].v == i) r.a(e) -= 1.0;
        }
        r.b = i == g.source ? 1.0 : (i == g.sink ? -1.0 : 0.0);
        rows.push_back(std::move(r));
      }
      break;
    case GraphKind::Assignment:
    case GraphKind::Tsp: {
      const double degree = g.kind == GraphKind::Tsp ? 2.0 : 1.0;
      for (int i = 0; i < g.vertices; ++i) {
        EqualityRow r{Vector::Zero(n), degree};
        for (int e = 0; e < n; ++e) {
          if (g.edges[e].u == i || g.edges[e].v == i) r.a(e) = 1.0;
        }
        rows.push_back(std::move(r));
      }
      break;
    }
    case GraphKind::MstComplete:
    case GraphKind::MstGrid:
      rows.push_back({Vector::Ones(n), static_cast<double>(g.vertices - 1)});
      break;
  }
  return rows;
}

/// Screens each equation a^T x = b as the pair a^T x <= b, -a^T x <= -b and
/// returns the most violated one.
inline SeparationResult separate_equalities(const std::vector<EqualityRow>& rows, const Vector& x,
                                            double tol = kSeparationTol) {
  const EqualityRow* best = nullptr;
  double worst = tol;
  double sign = 0.0;
  for (const auto& r : rows) {
    const double v = r.a.dot(x) - r.b;
    if (v > worst) {
      worst = v;
      best = &r;
      sign = 1.0;
    }
    if (-v > worst) {
      worst = -v;
      best = &r;
      sign = -1.0;
    }
  }
  if (!best) return Feasible{};
  return Violated{sign * best->a, sign * best->b, worst};
}

inline SeparationResult separate_graph_equalities(const GraphModel& g, const Vector& x,
                                                  double tol = kSeparationTol) {
  return separate_equalities(equality_rows(g), x, tol);
}

namespace detail {

inline constexpr double kFlowScale = 1e9;

inline MaxFlow::Capacity scaled(double v) {
  return static_cast<MaxFlow::Capacity>(std::llround(std::max(0.0, v) * kFlowScale));
}

}  // namespace detail

/// Subtour elimination sum_{e in E(X)} x_e <= |X| - 1. For each vertex k one
/// max-flow problem finds the X containing k minimising |X| - x(E(X)); the
/// most violated set over all k is returned.
inline SeparationResult separate_mst_subtour(const GraphModel& g, const Vector& x, double tol = kSeparationTol) {
  const int nv = g.vertices;
  const int n = g.num_vars();
  if (x.size() != n) throw DimensionMismatch("separate_mst_subtour: size mismatch");
  std::vector<double> half_degree(nv, 0.0);
  for (int e = 0; e < n; ++e) {
    const double w = std::max(0.0, x(e));
    half_degree[g.edges[e].u] += 0.5 * w;
    half_degree[g.edges[e].v] += 0.5 * w;
  }
  const int s = nv;
  const int t = nv + 1;
  std::vector<bool> best_set;
  double best_violation = tol;
  for (int k = 0; k < nv; ++k) {
    MaxFlow net(nv + 2);
    for (int e = 0; e < n; ++e) net.add_edge(g.edges[e].u, g.edges[e].v, detail::scaled(0.5 * x(e)));
    for (int i = 0; i < nv; ++i) {
      net.add_arc(s, i, i == k ? MaxFlow::kInfinite : detail::scaled(half_degree[i]));
      net.add_arc(i, t, detail::scaled(1.0));
    }
    net.run(s, t);
    std::vector<bool> side = net.source_side(s);
    side.resize(nv);
    int size = 0;
    for (int i = 0; i < nv; ++i) size += side[i] ? 1 : 0;
    double inside = 0.0;
    for (int e = 0; e < n; ++e) {
      if (side[g.edges[e].u] && side[g.edges[e].v]) inside += x(e);
    }
    const double violation = inside - (size - 1);
    if (violation > best_violation) {
      best_violation = violation;
      best_set = std::move(side);
    }
  }
  if (best_set.empty()) return Feasible{};
  Vector a = Vector::Zero(n);
  int size = 0;
  for (int i = 0; i < nv; ++i) size += best_set[i] ? 1 : 0;
  for (int e = 0; e < n; ++e) {
    if (best_set[g.edges[e].u] && best_set[g.edges[e].v]) a(e) = 1.0;
  }
  return Violated{std::move(a), static_cast<double>(size - 1), best_violation};
}

/// Global minimum cut of the support graph with capacities x_e, via |V| - 1
/// max-flow problems from vertex 0.
struct MinCut {
  double value = 0.0;
  std::vector<bool> side;
};

inline MinCut global_min_cut(const GraphModel& g, const Vector& x) {
  const int nv = g.vertices;
  const int n = g.num_vars();
  MaxFlow base(nv);
  for (int e = 0; e < n; ++e) base.add_edge(g.edges[e].u, g.edges[e].v, detail::scaled(x(e)));
  MinCut best;
  best.value = std::numeric_limits<double>::infinity();
  for (int t = 1; t < nv; ++t) {
    MaxFlow net = base;
    net.run(0, t);
    std::vector<bool> side = net.source_side(0);
    double cut = 0.0;
    for (int e = 0; e < n; ++e) {
      if (side[g.edges[e].u] != side[g.edges[e].v]) cut += x(e);
    }
    if (cut < best.value) {
      best.value = cut;
      best.side = std::move(side);
    }
  }
  return best;
}

/// Cut row sum_{e in delta(X)} x_e >= 2 for a minimum cut X, as
/// -sum x_e <= -2.
inline SeparationResult separate_tsp_cut(const GraphModel& g, const Vector& x, double tol = kSeparationTol) {
  if (x.size() != g.num_vars()) throw DimensionMismatch("separate_tsp_cut: size mismatch");
  const MinCut cut = global_min_cut(g, x);
  if (!(cut.value < 2.0 - tol)) return Feasible{};
  Vector a = Vector::Zero(g.num_vars());
  for (int e = 0; e < g.num_vars(); ++e) {
    if (cut.side[g.edges[e].u] != cut.side[g.edges[e].v]) a(e) = -1.0;
  }
  return Violated{std::move(a), -2.0, 2.0 - cut.value};
}

/// Oracle of a combinatorial model. Equations are screened first, then the
/// exponential family (subtour rows or cut rows) where the model has one.
class GraphOracle final : public SeparationOracle {
 public:
  explicit GraphOracle(GraphModel g, double tol = kSeparationTol)
      : g_(std::move(g)), eq_(equality_rows(g_)), tol_(tol) {}

  [[nodiscard]] SeparationResult separate(const Vector& x) const override {
    SeparationResult r = separate_equalities(eq_, x, tol_);
    if (!is_feasible(r)) return r;
    switch (g_.kind) {
      case GraphKind::MstComplete:
      case GraphKind::MstGrid: return separate_mst_subtour(g_, x, tol_);
      case GraphKind::Tsp: return separate_tsp_cut(g_, x, tol_);
      default: return Feasible{};
    }
  }

  [[nodiscard]] const GraphModel& model() const { return g_; }

 private:
  GraphModel g_;
  std::vector<EqualityRow> eq_;
  double tol_;
};

/// True iff the oracle accepts x.
inline bool check_membership(const SeparationOracle& oracle, const Vector& x) {
  return is_feasible(oracle.separate(x));
}

inline bool check_membership(const GraphModel& g, const Vector& x, double tol) {
  return is_feasible(GraphOracle(g, tol).separate(x));
}

inline bool check_membership(const RowMajorMatrix& a, const Vector& b, const Vector& x, double tol) {
  return is_feasible(separate_explicit(a, b, x, tol));
}

}  // namespace rco
