#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gstg/em.hpp"
#include "gstg/greedy.hpp"
#include "gstg/metrics.hpp"
#include "gstg/omp.hpp"
#include "gstg/problem.hpp"

namespace gstg {

struct SolverSpec {
  std::string kind;    // greedy | em | omp
  double eps = 0.01;   // ignored by omp
  double theta = 1.0;  // multiplier on default_tau; ignored by omp
};

struct ExperimentConfig {
  int N = 512;
  int K = 20;
  std::vector<int> M_list;
  std::vector<double> snr_list;
  int trials = 100;
  std::string ensemble = "gaussian";
  std::vector<SolverSpec> solvers;
  std::uint64_t base_seed = 0;
  std::string output_path = "metrics.csv";
  std::string figure;  // fig2 | fig3 | fig4 | fig5; required only for plotdata

  void validate() const {
    if (N < 1 || K < 1 || K > N)
      throw std::invalid_argument("config: need 1 <= K <= N");
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (M_list.empty()) throw std::invalid_argument("config: M_list is empty");
    for (int M : M_list)
      if (M < 1 || M >= N)
        throw std::invalid_argument("config: every M must satisfy 1 <= M < N");
    if (snr_list.empty()) throw std::invalid_argument("config: snr_list is empty");
    if (ensemble != "gaussian" && ensemble != "uniform_spherical")
      throw std::invalid_argument(
          "config: ensemble must be gaussian or uniform_spherical");
    if (solvers.empty()) throw std::invalid_argument("config: no solvers listed");
    for (const auto& s : solvers) {
      if (s.kind != "greedy" && s.kind != "em" && s.kind != "omp")
        throw std::invalid_argument("config: unknown solver kind " + s.kind);
      if (!(s.eps >= 0.0 && s.eps <= 1.0))
        throw std::invalid_argument("config: solver eps must be in [0,1]");
      if (!(s.theta >= 0.0))
        throw std::invalid_argument("config: solver theta must be >= 0");
    }
    if (output_path.empty()) throw std::invalid_argument("config: output path empty");
    if (!figure.empty() && figure != "fig2" && figure != "fig3" &&
        figure != "fig4" && figure != "fig5")
      throw std::invalid_argument("config: figure must be one of fig2..fig5");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  if (v.find(':') != std::string::npos) {
    int a, b, s;
    char c1, c2;
    std::istringstream ss(v);
    if (!(ss >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || s < 1)
      throw std::invalid_argument("config: bad range syntax (want lo:hi:step): " + v);
    for (int m = a; m <= b; m += s) out.push_back(m);
    return out;
  }
  std::istringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(trim(cell)));
  return out;
}

inline std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  std::istringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(trim(cell)));
  return out;
}

inline SolverSpec parse_solver_spec(const std::string& v) {
  SolverSpec sp;
  std::istringstream ss(v);
  std::string tok;
  if (!(ss >> sp.kind))
    throw std::invalid_argument("config: empty solver entry");
  while (ss >> tok) {
    const auto p = tok.find('=');
    if (p == std::string::npos)
      throw std::invalid_argument("config: bad solver option " + tok);
    const std::string key = tok.substr(0, p), val = tok.substr(p + 1);
    if (key == "eps")
      sp.eps = std::stod(val);
    else if (key == "theta")
      sp.theta = std::stod(val);
    else
      throw std::invalid_argument("config: unknown solver option " + key);
  }
  return sp;
}

}  // namespace detail

// Key = value format, one pair per line, # starts a comment. Keys: N, K,
// M_list (comma list or lo:hi:step), snr_list (comma list), trials,
// ensemble, base_seed, output, figure, and one `solver = kind [eps=..]
// [theta=..]` line per solver entry.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    try {
      if (key == "N")
        cfg.N = std::stoi(val);
      else if (key == "K")
        cfg.K = std::stoi(val);
      else if (key == "M_list")
        cfg.M_list = detail::parse_int_list(val);
      else if (key == "snr_list")
        cfg.snr_list = detail::parse_double_list(val);
      else if (key == "trials")
        cfg.trials = std::stoi(val);
      else if (key == "ensemble")
        cfg.ensemble = val;
      else if (key == "base_seed")
        cfg.base_seed = std::stoull(val);
      else if (key == "output")
        cfg.output_path = val;
      else if (key == "figure")
        cfg.figure = val;
      else if (key == "solver")
        cfg.solvers.push_back(detail::parse_solver_spec(val));
      else
        throw std::invalid_argument("config: unknown key " + key);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": cannot parse value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  return parse_config(f);
}

namespace detail {

struct TrialMetrics {
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double support = std::numeric_limits<double>::quiet_NaN();
  double iters = std::numeric_limits<double>::quiet_NaN();
  double time = std::numeric_limits<double>::quiet_NaN();
};

inline TrialMetrics run_one(const SensingProblem& prob, const SolverSpec& sp,
                            int M, int N) {
  TrialMetrics tm;
  try {
    RecoveryResult res;
    if (sp.kind == "omp") {
      OmpOptions o;
      o.max_support = std::min(M, N);
      res = recover_omp(prob, o);
    } else {
      Hyperparams h;
      h.sigma2 = prob.sigma2;
      h.eps = sp.eps;
      h.tau = sp.theta * default_tau(M, N, prob.sigma2);
      EmOptions opts;
      res = (sp.kind == "em") ? recover_em(prob, h, opts)
                              : recover_greedy(prob, h, opts);
    }
    tm.rmse = rmse(res.x_hat, *prob.x_true);
    tm.support = double(res.support.size());
    tm.iters = double(res.iterations);
    tm.time = res.wall_time;
  } catch (const std::exception&) {
    // leave NaN: this trial is excluded from the aggregates
  }
  return tm;
}

}  // namespace detail

// Runs trials for every (M, snr) cell and solver, in parallel over
// (M, snr, trial) tasks. Within a trial every solver sees the same problem
// (seed = base_seed + trial), so comparisons are paired. Aggregation order
// is fixed, so the result is independent of the number of jobs.
inline std::vector<MetricsRow> run_sweep_rows(const ExperimentConfig& cfg,
                                              int jobs = 0) {
  cfg.validate();
  const int nm = int(cfg.M_list.size()), ns = int(cfg.snr_list.size());
  const int nsol = int(cfg.solvers.size()), nt = cfg.trials;
  const size_t ntask = size_t(nm) * ns * nt;
  std::vector<detail::TrialMetrics> store(ntask * nsol);

  if (jobs <= 0) jobs = int(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  if (size_t(jobs) > ntask) jobs = int(ntask);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= ntask) break;
      const int t = int(i % nt);
      const int si = int((i / nt) % ns);
      const int mi = int(i / (size_t(nt) * ns));
      const int M = cfg.M_list[mi];
      const SensingProblem prob =
          make_problem(M, cfg.N, cfg.K, cfg.snr_list[si], cfg.ensemble,
                       cfg.base_seed + std::uint64_t(t));
      for (int sj = 0; sj < nsol; ++sj)
        store[(i * nsol) + sj] = detail::run_one(prob, cfg.solvers[sj], M, cfg.N);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<MetricsRow> rows;
  rows.reserve(size_t(nsol) * nm * ns);
  std::vector<double> vr(nt), vs(nt), vi(nt), vt(nt);
  for (int sj = 0; sj < nsol; ++sj)
    for (int mi = 0; mi < nm; ++mi)
      for (int si = 0; si < ns; ++si) {
        for (int t = 0; t < nt; ++t) {
          const size_t i = (size_t(mi) * ns + si) * nt + t;
          const auto& tm = store[i * nsol + sj];
          vr[t] = tm.rmse;
          vs[t] = tm.support;
          vi[t] = tm.iters;
          vt[t] = tm.time;
        }
        const auto ar = detail::aggregate(vr), as = detail::aggregate(vs);
        const auto ai = detail::aggregate(vi), at = detail::aggregate(vt);
        MetricsRow r;
        r.solver = cfg.solvers[sj].kind;
        r.M = cfg.M_list[mi];
        r.snr_db = cfg.snr_list[si];
        r.theta = cfg.solvers[sj].theta;
        r.eps = cfg.solvers[sj].eps;
        r.trials = ar.count;
        r.rmse_mean = ar.mean;
        r.rmse_std = ar.stdev;
        r.support_mean = as.mean;
        r.support_std = as.stdev;
        r.iters_mean = ai.mean;
        r.iters_std = ai.stdev;
        r.time_mean = at.mean;
        r.time_std = at.stdev;
        rows.push_back(std::move(r));
      }
  return rows;
}

// Long-format companion table for one figure analog: one row per
// (series, x, metric) triple.
inline void emit_plotdata(const ExperimentConfig& cfg,
                          const std::vector<MetricsRow>& rows,
                          const std::string& path) {
  if (cfg.figure.empty())
    throw std::invalid_argument("emit_plotdata: config has no figure key");
  std::string x_name;
  if (cfg.figure == "fig2")
    x_name = "theta";
  else if (cfg.figure == "fig5")
    x_name = "snr_db";
  else
    x_name = "M";  // fig3, fig4

  std::ofstream f(path);
  if (!f) throw std::runtime_error("emit_plotdata: cannot open " + path);
  f << "figure,series,x_name,x_value,metric,value\n";
  static const char* metric_names[8] = {
      "rmse_mean", "rmse_std",  "support_mean", "support_std",
      "iters_mean", "iters_std", "time_mean",   "time_std"};
  for (const auto& r : rows) {
    std::string series = r.solver;
    if (r.solver != "omp") {
      series += " eps=" + detail::fmt_g17(r.eps);
      if (x_name != "theta") series += " theta=" + detail::fmt_g17(r.theta);
    }
    double x_value;
    if (x_name == "theta")
      x_value = r.theta;
    else if (x_name == "snr_db")
      x_value = r.snr_db;
    else
      x_value = double(r.M);
    const double vals[8] = {r.rmse_mean, r.rmse_std,  r.support_mean,
                            r.support_std, r.iters_mean, r.iters_std,
                            r.time_mean, r.time_std};
    for (int k = 0; k < 8; ++k)
      f << cfg.figure << ',' << series << ',' << x_name << ','
        << detail::fmt_g17(x_value) << ',' << metric_names[k] << ','
        << detail::fmt_g17(vals[k]) << "\n";
  }
  if (!f.good()) throw std::runtime_error("emit_plotdata: write failed: " + path);
}

// Full sweep: compute rows, write the metrics CSV to cfg.output_path, and
// optionally the plot table next to it (<figure>_plotdata.csv).
inline std::vector<MetricsRow> run_sweep(const ExperimentConfig& cfg,
                                         int jobs = 0,
                                         bool emit_plot = false) {
  const std::vector<MetricsRow> rows = run_sweep_rows(cfg, jobs);
  save_metrics_csv(cfg.output_path, rows);
  if (emit_plot) {
    const std::filesystem::path out(cfg.output_path);
    const std::filesystem::path pp =
        out.parent_path() / (cfg.figure + "_plotdata.csv");
    emit_plotdata(cfg, rows, pp.string());
  }
  return rows;
}

}  // namespace gstg
