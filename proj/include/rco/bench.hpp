#pragma once

// Run records, benchmark manifests, CSV output and performance profiles.

#include "rco/bnb.hpp"
#include "rco/instances.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace rco {

inline constexpr const char* kCsvVersionLine = "# rco-runs 1";
inline constexpr const char* kCsvColumns = "label,family,n,m,status,value,bound,time_s,nodes,iters,ps_pct";
inline constexpr const char* kProfileVersionLine = "# rco-profile 1";

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunRecord {
  std::string instance;
  std::string solver;
  std::string family;
  long long n = 0;
  double m = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double value = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  double time_s = 0.0;
  std::size_t nodes = 0;
  std::size_t iters = 0;
  double ps_pct = 0.0;

  /// CSV label column: "<instance>@<solver>".
  [[nodiscard]] std::string label() const { return instance + "@" + solver; }
};

/// Percentage of EllAS iterations that rebuilt the pseudo-inverse from scratch.
inline double recompute_percent(const SolveStats& s) {
  if (s.ellas_iterations == 0) return 0.0;
  return std::min(100.0, 100.0 * static_cast<double>(s.pinv_recomputes) / static_cast<double>(s.ellas_iterations));
}

inline RunRecord make_record(const Instance& inst, const std::string& solver, const SolveResult& r) {
  RunRecord rec;
  rec.instance = inst.label;
  rec.solver = solver;
  rec.family = inst.family;
  rec.n = inst.n();
  rec.m = inst.m();
  rec.status = r.stats.status;
  rec.value = r.incumbent ? r.incumbent->value : std::numeric_limits<double>::infinity();
  rec.bound = r.stats.bound;
  rec.time_s = r.stats.wall_time;
  rec.nodes = r.stats.nodes;
  rec.iters = r.stats.ellas_iterations;
  rec.ps_pct = recompute_percent(r.stats);
  return rec;
}

namespace detail {

inline std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_real(v);
}

inline double parse_real(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw CsvError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw CsvError("not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::string to_csv_line(const RunRecord& r) {
  std::ostringstream out;
  out << r.label() << ',' << r.family << ',' << r.n << ',' << detail::csv_real(r.m) << ',' << to_string(r.status)
      << ',' << detail::csv_real(r.value) << ',' << detail::csv_real(r.bound) << ',' << detail::csv_real(r.time_s)
      << ',' << r.nodes << ',' << r.iters << ',' << detail::csv_real(r.ps_pct);
  return out.str();
}

/// Averages over solved runs, grouped by (solver, family, n, m).
inline void write_summary(std::ostream& out, const std::vector<RunRecord>& runs) {
  struct Acc {
    std::size_t total = 0, solved = 0;
    double time = 0, nodes = 0, iters = 0, ps = 0;
  };
  std::map<std::tuple<std::string, std::string, long long, double>, Acc> groups;
  for (const auto& r : runs) {
    auto& a = groups[{r.solver, r.family, r.n, r.m}];
    ++a.total;
    if (r.status != SolveStatus::Optimal) continue;
    ++a.solved;
    a.time += r.time_s;
    a.nodes += static_cast<double>(r.nodes);
    a.iters += static_cast<double>(r.iters);
    a.ps += r.ps_pct;
  }
  out << "# summary: solver,family,n,m,solved,total,time_s,nodes,iters,ps_pct (averages over solved)\n";
  for (const auto& [key, a] : groups) {
    const auto& [solver, family, n, m] = key;
    out << "# " << solver << ',' << family << ',' << n << ',' << detail::csv_real(m) << ',' << a.solved << ','
        << a.total;
    if (a.solved == 0) {
      out << ",,,,\n";
      continue;
    }
    const double k = static_cast<double>(a.solved);
    out << ',' << detail::csv_real(a.time / k) << ',' << detail::csv_real(a.nodes / k) << ','
        << detail::csv_real(a.iters / k) << ',' << detail::csv_real(a.ps / k) << '\n';
  }
}

inline void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs, bool summary = true) {
  out << kCsvVersionLine << '\n' << kCsvColumns << '\n';
  for (const auto& r : runs) out << to_csv_line(r) << '\n';
  if (summary && !runs.empty()) write_summary(out, runs);
}

/// Reads a runs CSV. Columns are located by header name, so extra columns and
/// reordering are tolerated; '#' lines are skipped.
inline std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  std::vector<RunRecord> out;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  const auto need = [&](const char* name) {
    auto it = col.find(name);
    if (it == col.end()) throw CsvError(std::string("missing required column '") + name + "'");
    return it->second;
  };
  std::size_t c_label = 0, c_status = 0, c_time = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = detail::split(t, ',');
    if (header.empty()) {
      header = fields;
      for (std::size_t i = 0; i < header.size(); ++i) col[detail::trim(header[i])] = i;
      c_label = need("label");
      c_status = need("status");
      c_time = need("time_s");
      continue;
    }
    if (fields.size() != header.size()) {
      throw CsvError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    }
    RunRecord r;
    const std::string label = fields[c_label];
    const auto at = label.rfind('@');
    r.instance = at == std::string::npos ? label : label.substr(0, at);
    r.solver = at == std::string::npos ? "default" : label.substr(at + 1);
    const std::string& st = fields[c_status];
    if (st == "Optimal") r.status = SolveStatus::Optimal;
    else if (st == "Infeasible") r.status = SolveStatus::Infeasible;
    else if (st == "TimeLimit") r.status = SolveStatus::TimeLimit;
    else throw CsvError("line " + std::to_string(lineno) + ": unknown status '" + st + "'");
    r.time_s = detail::parse_real(fields[c_time]);
    if (auto it = col.find("family"); it != col.end()) r.family = fields[it->second];
    if (auto it = col.find("value"); it != col.end()) r.value = detail::parse_real(fields[it->second]);
    if (auto it = col.find("bound"); it != col.end()) r.bound = detail::parse_real(fields[it->second]);
    if (auto it = col.find("nodes"); it != col.end()) r.nodes = static_cast<std::size_t>(detail::parse_real(fields[it->second]));
    if (auto it = col.find("iters"); it != col.end()) r.iters = static_cast<std::size_t>(detail::parse_real(fields[it->second]));
    if (auto it = col.find("n"); it != col.end()) r.n = static_cast<long long>(detail::parse_real(fields[it->second]));
    if (auto it = col.find("m"); it != col.end()) r.m = detail::parse_real(fields[it->second]);
    if (auto it = col.find("ps_pct"); it != col.end()) r.ps_pct = detail::parse_real(fields[it->second]);
    out.push_back(std::move(r));
  }
  if (header.empty()) throw CsvError("missing header line");
  return out;
}

// ---------------------------------------------------------------------------
// Performance profiles

struct ProfilePoint {
  double tau = 1.0;
  std::vector<double> rho;  // indexed like Profile::solvers
};

struct Profile {
  std::vector<std::string> solvers;
  std::vector<ProfilePoint> points;
};

inline std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (double t = 1.0; t <= 1024.0; t *= 2.0) taus.push_back(t);
  return taus;
}

/// rho_s(tau): fraction of problems whose time ratio to the best solver is
/// at most tau. Runs that did not finish Optimal count as r = inf. Problems
/// no solver finished are kept in the denominator.
inline Profile performance_profile(const std::vector<RunRecord>& runs, const std::vector<double>& taus) {
  Profile prof;
  std::map<std::string, std::size_t> solver_index;
  std::map<std::string, std::size_t> problem_index;
  for (const auto& r : runs) {
    if (solver_index.emplace(r.solver, prof.solvers.size()).second) prof.solvers.push_back(r.solver);
    problem_index.emplace(r.instance, problem_index.size());
  }
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t np = problem_index.size();
  const std::size_t ns = prof.solvers.size();
  std::vector<std::vector<double>> t(np, std::vector<double>(ns, inf));
  for (const auto& r : runs) {
    if (r.status != SolveStatus::Optimal || !std::isfinite(r.time_s)) continue;
    auto& slot = t[problem_index[r.instance]][solver_index[r.solver]];
    slot = std::min(slot, std::max(r.time_s, 0.0));
  }
  std::vector<std::vector<double>> ratio(np, std::vector<double>(ns, inf));
  for (std::size_t p = 0; p < np; ++p) {
    const double best = *std::min_element(t[p].begin(), t[p].end());
    if (!std::isfinite(best)) continue;
    for (std::size_t s = 0; s < ns; ++s) {
      if (!std::isfinite(t[p][s])) continue;
      // Zero times tie with the best.
      ratio[p][s] = best > 0.0 ? t[p][s] / best : (t[p][s] > 0.0 ? inf : 1.0);
    }
  }
  for (double tau : taus) {
    ProfilePoint pt;
    pt.tau = tau;
    pt.rho.assign(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
      std::size_t count = 0;
      for (std::size_t p = 0; p < np; ++p) count += ratio[p][s] <= tau ? 1 : 0;
      pt.rho[s] = np == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(np);
    }
    prof.points.push_back(std::move(pt));
  }
  return prof;
}

inline void write_profile_csv(std::ostream& out, const Profile& prof) {
  out << kProfileVersionLine << '\n' << "tau";
  for (const auto& s : prof.solvers) out << ',' << s;
  out << '\n';
  for (const auto& pt : prof.points) {
    out << detail::csv_real(pt.tau);
    for (double r : pt.rho) out << ',' << detail::csv_real(r);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Benchmark manifests
//
// One entry per line, '#' comments allowed:
//   gen <family> <size> <seed> [m]
//   file <path>
//   solvers <tag>[,<tag>...]      (default: ellas)
// Solver tags: ellas (warm-started), ellas-cold.

struct ManifestEntry {
  std::string family;
  int size = 0;
  int m = 0;
  std::uint64_t seed = 0;
  std::string path;  // set for file entries
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> solvers{"ellas"};
};

inline bool known_solver(const std::string& tag) { return tag == "ellas" || tag == "ellas-cold"; }

inline Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    std::istringstream ss(t);
    std::string kind;
    ss >> kind;
    const auto fail = [&](const std::string& what) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": " + what);
    };
    if (kind == "gen") {
      ManifestEntry e;
      if (!(ss >> e.family >> e.size >> e.seed)) fail("expected 'gen <family> <size> <seed> [m]'");
      ss >> e.m;
      m.entries.push_back(std::move(e));
    } else if (kind == "file") {
      ManifestEntry e;
      if (!(ss >> e.path)) fail("expected 'file <path>'");
      m.entries.push_back(std::move(e));
    } else if (kind == "solvers") {
      std::string list;
      ss >> list;
      m.solvers = detail::split(list, ',');
      for (const auto& s : m.solvers) {
        if (!known_solver(s)) fail("unknown solver '" + s + "'");
      }
    } else {
      fail("unknown entry '" + kind + "'");
    }
  }
  return m;
}

inline Instance load_entry(const ManifestEntry& e) {
  if (!e.path.empty()) return read_instance(e.path);
  return generate(e.family, e.size, e.m, e.seed);
}

struct BenchOptions {
  double opt_tol = 1e-4;
  double time_limit = 60.0;
  unsigned threads = 1;
};

inline SolveParams solver_params(const std::string& tag, const BenchOptions& opt) {
  SolveParams p;
  p.opt_tol = opt.opt_tol;
  p.time_limit = opt.time_limit;
  p.warm_start = tag != "ellas-cold";
  return p;
}

/// Runs every (instance, solver) pair. Results follow manifest order
/// whatever the completion order.
inline std::vector<RunRecord> run_bench(const Manifest& m, const BenchOptions& opt) {
  const std::size_t ns = m.solvers.size();
  const std::size_t total = m.entries.size() * ns;
  std::vector<RunRecord> out(total);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto worker = [&] {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      try {
        const Instance inst = load_entry(m.entries[job / ns]);
        const std::string& tag = m.solvers[job % ns];
        out[job] = make_record(inst, tag, solve(inst, solver_params(tag, opt)));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace rco
