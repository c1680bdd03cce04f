#pragma once

// Seeded instance generators and the line-oriented instance file format.
//
// Random numbers come from std::mt19937_64 (whose output sequence is fixed by
// the C++ standard) seeded with the instance seed. Conversions are done here
// rather than with <random> distributions so that instances are reproducible
// across standard library implementations:
//   uniform01()        = (next() >> 11) * 2^-53
//   uniform(lo, hi)    = lo + (hi - lo) * uniform01()
//   uniform_int(lo,hi) = lo + next() % span, rejecting draws above the last
//                        full multiple of span.

#include "rco/linalg.hpp"
#include "rco/oracles.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rco {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1U;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw = next();
    while (draw >= limit) draw = next();
    return lo + static_cast<std::int64_t>(draw % span);
  }

 private:
  std::mt19937_64 engine_;
};

inline constexpr double kEigenvalueFloor = 1e-6;

/// Q = sum_i w_i v_i v_i^T with w_i uniform on [0, 1] (redrawn below 1e-6)
/// and v_i orthonormalised uniform [-1, 1] vectors (redrawn when nearly
/// dependent). All eigenvalues are drawn before the vectors.
inline Matrix gen_q(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_q: n must be positive");
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    double v = rng.uniform01();
    while (v < kEigenvalueFloor) v = rng.uniform01();
    w(i) = v;
  }
  Matrix basis(n, n);
  for (int i = 0; i < n; ++i) {
    while (true) {
      Vector v(n);
      for (int k = 0; k < n; ++k) v(k) = rng.uniform(-1.0, 1.0);
      const double raw = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < i; ++j) v -= basis.col(j).dot(v) * basis.col(j);
      }
      const double norm = v.norm();
      if (norm > 1e-8 * std::max(1.0, raw)) {
        basis.col(i) = v / norm;
        break;
      }
    }
  }
  Matrix q = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) q.noalias() += w(i) * basis.col(i) * basis.col(i).transpose();
  q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
  return q;
}

struct ExplicitRows {
  RowMajorMatrix a;
  Vector b;
};

using FeasibleSet = std::variant<ExplicitRows, GraphModel>;

/// Objective (c, Q), feasible set and integer box of a problem.
struct Instance {
  std::string family;
  std::string label;
  std::uint64_t seed = 0;
  /// Family size parameter: n for random, r for grids, |V| otherwise.
  int size = 0;
  Vector c;
  Matrix q;
  FeasibleSet feasible_set;
  std::vector<long long> lower;
  std::vector<long long> upper;

  [[nodiscard]] int n() const { return static_cast<int>(c.size()); }

  /// Number of model rows: explicit rows, or the closed-form count of the
  /// combinatorial model.
  [[nodiscard]] double m() const {
    if (const auto* r = std::get_if<ExplicitRows>(&feasible_set)) return static_cast<double>(r->a.rows());
    return model_row_count(std::get<GraphModel>(feasible_set));
  }
};

inline std::unique_ptr<SeparationOracle> make_oracle(const Instance& inst) {
  if (const auto* r = std::get_if<ExplicitRows>(&inst.feasible_set)) {
    return std::make_unique<ExplicitRowsOracle>(r->a, r->b);
  }
  return std::make_unique<GraphOracle>(std::get<GraphModel>(inst.feasible_set));
}

/// Random binary instance: A uniform integers in [0, 10], b_i = floor(sum_j
/// a_ij / 2), c uniform in [-1, 1]. Draw order: c, Q, A.
inline Instance gen_random_binary(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("gen_random_binary: n and m must be positive");
  Rng rng(seed);
  Instance inst;
  inst.family = "random";
  inst.seed = seed;
  inst.size = n;
  inst.label = "random-n" + std::to_string(n) + "-m" + std::to_string(m) + "-s" + std::to_string(seed);
  inst.c.resize(n);
  for (int i = 0; i < n; ++i) inst.c(i) = rng.uniform(-1.0, 1.0);
  inst.q = gen_q(n, rng);
  ExplicitRows rows;
  rows.a.resize(m, n);
  rows.b.resize(m);
  for (int i = 0; i < m; ++i) {
    std::int64_t sum = 0;
    for (int j = 0; j < n; ++j) {
      const std::int64_t v = rng.uniform_int(0, 10);
      rows.a(i, j) = static_cast<double>(v);
      sum += v;
    }
    rows.b(i) = static_cast<double>(sum / 2);
  }
  inst.feasible_set = std::move(rows);
  inst.lower.assign(n, 0);
  inst.upper.assign(n, 1);
  return inst;
}

/// Combinatorial instance over `g`: unit expected weights, binary box.
inline Instance gen_graph_instance(GraphModel g, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst;
  const int n = g.num_vars();
  inst.family = to_string(g.kind);
  inst.seed = seed;
  inst.size = g.param;
  const char* tag = (g.kind == GraphKind::GridSP || g.kind == GraphKind::MstGrid) ? "-r" : "-v";
  inst.label = inst.family + tag + std::to_string(g.param) + "-s" + std::to_string(seed);
  inst.c = Vector::Ones(n);
  inst.q = gen_q(n, rng);
  inst.feasible_set = std::move(g);
  inst.lower.assign(n, 0);
  inst.upper.assign(n, 1);
  return inst;
}

inline Instance gen_grid_sp(int r, std::uint64_t seed) { return gen_graph_instance(make_grid_sp(r), seed); }
inline Instance gen_assignment(int v, std::uint64_t seed) { return gen_graph_instance(make_assignment(v), seed); }
inline Instance gen_mst_complete(int v, std::uint64_t seed) { return gen_graph_instance(make_mst_complete(v), seed); }
inline Instance gen_mst_grid(int r, std::uint64_t seed) { return gen_graph_instance(make_mst_grid(r), seed); }
inline Instance gen_tsp(int v, std::uint64_t seed) { return gen_graph_instance(make_tsp(v), seed); }

inline std::optional<GraphKind> graph_kind_from_string(std::string_view s) {
  for (auto k : {GraphKind::GridSP, GraphKind::Assignment, GraphKind::MstComplete, GraphKind::MstGrid,
                 GraphKind::Tsp}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Generates any family by name. `m` is only used by "random".
inline Instance generate(const std::string& family, int size, int m, std::uint64_t seed) {
  if (family == "random") return gen_random_binary(size, m, seed);
  if (auto k = graph_kind_from_string(family)) return gen_graph_instance(make_graph_model(*k, size), seed);
  throw std::invalid_argument("unknown instance family '" + family + "'");
}

// ---------------------------------------------------------------------------
// File format (version 1). Line oriented, '#' starts a comment line, blank
// lines are ignored, tokens are separated by whitespace. Reals are written in
// the shortest form that parses back to the identical double.
//
//   rco-instance 1
//   family <name>
//   label <text without spaces>
//   seed <u64>
//   size <int>
//   n <int>
//   c <n reals>
//   q                      followed by n lines, line i holds Q(i,0..i)
//   lower <n ints>
//   upper <n ints>
//   rows <m>               followed by m lines "a_1 ... a_n b"
//     or
//   graph <kind> <param>   kind in grid-sp|assignment|mst|mst-grid|tsp
//   end
// ---------------------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-comment, non-blank line split into tokens.
  std::vector<std::string> next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return tokens;
    }
    throw ParseError(number_ + 1, std::string("unexpected end of file, expecting ") + expecting);
  }

  std::vector<std::string> keyed(const char* key, std::size_t args) {
    auto t = next(key);
    if (t.front() != key) throw ParseError(number_, std::string("expected '") + key + "', found '" + t.front() + "'");
    if (t.size() != args + 1) {
      throw ParseError(number_, std::string("'") + key + "' expects " + std::to_string(args) + " values");
    }
    return t;
  }

  [[nodiscard]] std::size_t line() const { return number_; }

  template <class T>
  T parse(const std::string& s) const {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ParseError(number_, "malformed number '" + s + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) throw ParseError(number_, "non-finite number '" + s + "'");
    }
    return v;
  }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

}  // namespace detail

inline void write_instance(std::ostream& out, const Instance& inst) {
  using detail::format_real;
  const int n = inst.n();
  out << "rco-instance 1\n";
  out << "family " << inst.family << "\n";
  out << "label " << inst.label << "\n";
  out << "seed " << inst.seed << "\n";
  out << "size " << inst.size << "\n";
  out << "n " << n << "\n";
  out << "c";
  for (int i = 0; i < n; ++i) out << ' ' << format_real(inst.c(i));
  out << "\nq\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) out << (j ? " " : "") << format_real(inst.q(i, j));
    out << '\n';
  }
  out << "lower";
  for (auto v : inst.lower) out << ' ' << v;
  out << "\nupper";
  for (auto v : inst.upper) out << ' ' << v;
  out << '\n';
  if (const auto* r = std::get_if<ExplicitRows>(&inst.feasible_set)) {
    out << "rows " << r->a.rows() << '\n';
    for (Eigen::Index i = 0; i < r->a.rows(); ++i) {
      for (int j = 0; j < n; ++j) out << format_real(r->a(i, j)) << ' ';
      out << format_real(r->b(i)) << '\n';
    }
  } else {
    const auto& g = std::get<GraphModel>(inst.feasible_set);
    out << "graph " << to_string(g.kind) << ' ' << g.param << '\n';
  }
  out << "end\n";
}

inline Instance read_instance(std::istream& in) {
  detail::LineReader rd(in);
  Instance inst;
  auto header = rd.next("header");
  if (header.size() != 2 || header[0] != "rco-instance" || header[1] != "1") {
    throw ParseError(rd.line(), "not an rco-instance version 1 file");
  }
  inst.family = rd.keyed("family", 1)[1];
  inst.label = rd.keyed("label", 1)[1];
  inst.seed = rd.parse<std::uint64_t>(rd.keyed("seed", 1)[1]);
  inst.size = rd.parse<int>(rd.keyed("size", 1)[1]);
  const int n = rd.parse<int>(rd.keyed("n", 1)[1]);
  if (n < 1) throw ParseError(rd.line(), "n must be positive");
  const auto nz = static_cast<std::size_t>(n);

  auto ct = rd.keyed("c", nz);
  inst.c.resize(n);
  for (int i = 0; i < n; ++i) inst.c(i) = rd.parse<double>(ct[i + 1]);

  rd.keyed("q", 0);
  const std::size_t q_line = rd.line();
  inst.q.resize(n, n);
  for (int i = 0; i < n; ++i) {
    auto row = rd.next("q row");
    if (row.size() != static_cast<std::size_t>(i + 1)) {
      throw ParseError(rd.line(), "q row " + std::to_string(i) + " must have " + std::to_string(i + 1) + " values");
    }
    for (int j = 0; j <= i; ++j) {
      const double v = rd.parse<double>(row[j]);
      inst.q(i, j) = v;
      inst.q(j, i) = v;
    }
  }
  try {
    (void)spd_sqrt_inverse(inst.q);
  } catch (const std::exception& e) {
    throw ParseError(q_line, std::string("q is not symmetric positive definite: ") + e.what());
  }

  auto lo = rd.keyed("lower", nz);
  auto up = rd.keyed("upper", nz);
  inst.lower.resize(nz);
  inst.upper.resize(nz);
  for (std::size_t i = 0; i < nz; ++i) {
    inst.lower[i] = rd.parse<long long>(lo[i + 1]);
    inst.upper[i] = rd.parse<long long>(up[i + 1]);
    if (inst.lower[i] > inst.upper[i]) throw ParseError(rd.line(), "empty box in coordinate " + std::to_string(i));
  }

  auto fs = rd.next("rows or graph");
  if (fs.front() == "rows") {
    if (fs.size() != 2) throw ParseError(rd.line(), "'rows' expects a count");
    const long long m = rd.parse<long long>(fs[1]);
    if (m < 0) throw ParseError(rd.line(), "negative row count");
    ExplicitRows rows;
    rows.a.resize(m, n);
    rows.b.resize(m);
    for (long long i = 0; i < m; ++i) {
      auto t = rd.next("explicit row");
      if (t.size() != nz + 1) throw ParseError(rd.line(), "explicit row must have n + 1 values");
      for (int j = 0; j < n; ++j) rows.a(i, j) = rd.parse<double>(t[j]);
      rows.b(i) = rd.parse<double>(t[nz]);
    }
    inst.feasible_set = std::move(rows);
  } else if (fs.front() == "graph") {
    if (fs.size() != 3) throw ParseError(rd.line(), "'graph' expects kind and parameter");
    auto kind = graph_kind_from_string(fs[1]);
    if (!kind) throw ParseError(rd.line(), "unknown graph kind '" + fs[1] + "'");
    GraphModel g;
    try {
      g = make_graph_model(*kind, rd.parse<int>(fs[2]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(rd.line(), e.what());
    }
    if (g.num_vars() != n) throw ParseError(rd.line(), "graph has " + std::to_string(g.num_vars()) + " edges, n is " + std::to_string(n));
    inst.feasible_set = std::move(g);
  } else {
    throw ParseError(rd.line(), "expected 'rows' or 'graph', found '" + fs.front() + "'");
  }
  auto end = rd.next("end");
  if (end.size() != 1 || end[0] != "end") throw ParseError(rd.line(), "expected 'end'");
  return inst;
}

inline std::string instance_to_string(const Instance& inst) {
  std::ostringstream ss;
  write_instance(ss, inst);
  return ss.str();
}

inline Instance instance_from_string(const std::string& text) {
  std::istringstream ss(text);
  return read_instance(ss);
}

inline void write_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_instance(out, inst);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_instance(in);
}

}  // namespace rco
