#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gstg/problem.hpp"

namespace gstg {

// Relative squared error ||x_hat - x_true||^2 / ||x_true||^2.
inline double rmse(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_true) {
  if (x_hat.size() != x_true.size())
    throw std::invalid_argument("rmse: dimension mismatch");
  const double den = x_true.squaredNorm();
  if (!(den > 0.0)) throw std::invalid_argument("rmse: x_true must be nonzero");
  return (x_hat - x_true).squaredNorm() / den;
}

struct MetricsRow {
  std::string solver;
  int M = 0;
  double snr_db = 0.0;
  double theta = 1.0;
  double eps = 0.01;
  int trials = 0;  // trials aggregated (failed trials excluded)
  double rmse_mean = 0.0, rmse_std = 0.0;
  double support_mean = 0.0, support_std = 0.0;
  double iters_mean = 0.0, iters_std = 0.0;
  double time_mean = 0.0, time_std = 0.0;
};

namespace detail {

// Kahan-compensated mean and sample std over a fixed-order sequence; NaN
// entries (failed trials) are skipped. Order-fixed summation keeps parallel
// and serial sweeps bit-identical.
struct Aggregate {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stdev = std::numeric_limits<double>::quiet_NaN();
  int count = 0;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline Aggregate aggregate(const std::vector<double>& vals) {
  Aggregate out;
  double sum = 0.0, comp = 0.0;
  int n = 0;
  for (double v : vals) {
    if (std::isnan(v)) continue;
    const double t = v - comp;
    const double s = sum + t;
    comp = (s - sum) - t;
    sum = s;
    ++n;
  }
  out.count = n;
  if (n == 0) return out;
  out.mean = sum / n;
  double ss = 0.0, sc = 0.0;
  for (double v : vals) {
    if (std::isnan(v)) continue;
    const double d = (v - out.mean) * (v - out.mean);
    const double t = d - sc;
    const double s = ss + t;
    sc = (s - ss) - t;
    ss = s;
  }
  out.stdev = (n > 1) ? std::sqrt(ss / (n - 1)) : 0.0;
  return out;
}

}  // namespace detail

inline constexpr const char* kMetricsHeader =
    "solver,M,snr_db,theta,eps,trials,rmse_mean,rmse_std,support_mean,"
    "support_std,iters_mean,iters_std,time_mean,time_std";

inline void save_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "schema_version=1\n" << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    os << r.solver << ',' << r.M << ',' << detail::fmt_g17(r.snr_db) << ','
       << detail::fmt_g17(r.theta) << ',' << detail::fmt_g17(r.eps) << ','
       << r.trials << ',' << detail::fmt_g17(r.rmse_mean) << ','
       << detail::fmt_g17(r.rmse_std) << ',' << detail::fmt_g17(r.support_mean)
       << ',' << detail::fmt_g17(r.support_std) << ','
       << detail::fmt_g17(r.iters_mean) << ',' << detail::fmt_g17(r.iters_std)
       << ',' << detail::fmt_g17(r.time_mean) << ','
       << detail::fmt_g17(r.time_std) << "\n";
  }
}

inline void save_metrics_csv(const std::string& path,
                             const std::vector<MetricsRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_metrics_csv: cannot open " + path);
  save_metrics_csv(f, rows);
  if (!f.good()) throw std::runtime_error("save_metrics_csv: write failed: " + path);
}

inline std::vector<MetricsRow> load_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "schema_version=1")
    throw std::invalid_argument("load_metrics_csv: missing schema_version=1 line");
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw std::invalid_argument("load_metrics_csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv(line);
    if (f.size() != 14)
      throw std::invalid_argument("load_metrics_csv: expected 14 fields");
    MetricsRow r;
    r.solver = f[0];
    r.M = std::stoi(f[1]);
    r.snr_db = std::stod(f[2]);
    r.theta = std::stod(f[3]);
    r.eps = std::stod(f[4]);
    r.trials = std::stoi(f[5]);
    r.rmse_mean = std::stod(f[6]);
    r.rmse_std = std::stod(f[7]);
    r.support_mean = std::stod(f[8]);
    r.support_std = std::stod(f[9]);
    r.iters_mean = std::stod(f[10]);
    r.iters_std = std::stod(f[11]);
    r.time_mean = std::stod(f[12]);
    r.time_std = std::stod(f[13]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_metrics_csv: cannot open " + path);
  return load_metrics_csv(f);
}

}  // namespace gstg
