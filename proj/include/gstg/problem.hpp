#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gstg/rng.hpp"

namespace gstg {

struct SensingProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> x_true;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  std::string ensemble = "gaussian";  // "gaussian" | "uniform_spherical"
};

// Entries i.i.d. N(0, 1/M), drawn column by column, so columns have expected
// unit norm.
inline Eigen::MatrixXd gen_gaussian_ensemble(int M, int N, std::uint64_t seed) {
  if (M < 1 || N < 1)
    throw std::invalid_argument("gen_gaussian_ensemble: M, N must be >= 1");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(double(M));
  Eigen::MatrixXd A(M, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i) A(i, j) = scale * rng.next_gaussian();
  return A;
}

// Columns i.i.d. uniform on the unit sphere (normalized Gaussian vectors).
inline Eigen::MatrixXd gen_uniform_spherical(int M, int N, std::uint64_t seed) {
  if (M < 2) throw std::invalid_argument("gen_uniform_spherical: M must be >= 2");
  if (N < 1) throw std::invalid_argument("gen_uniform_spherical: N must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd A(M, N);
  for (int j = 0; j < N; ++j) {
    double nrm = 0.0;
    do {
      for (int i = 0; i < M; ++i) A(i, j) = rng.next_gaussian();
      nrm = A.col(j).norm();
    } while (nrm == 0.0);
    A.col(j) /= nrm;
  }
  return A;
}

// Support of exactly K indices, uniform without replacement via partial
// Fisher-Yates; amplitudes i.i.d. standard normal.
inline Eigen::VectorXd gen_sparse_signal(int N, int K, std::uint64_t seed) {
  if (K < 1 || K > N)
    throw std::invalid_argument("gen_sparse_signal: need 1 <= K <= N");
  Rng rng(seed);
  std::vector<int> idx(N);
  for (int i = 0; i < N; ++i) idx[i] = i;
  for (int i = 0; i < K; ++i) {
    const int j = i + int(rng.next_below(std::uint64_t(N - i)));
    std::swap(idx[i], idx[j]);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  for (int i = 0; i < K; ++i) x[idx[i]] = rng.next_gaussian();
  return x;
}

// sigma^2 = (K/M) 10^(-snr_db/10): noise calibrated against the expected
// signal energy K/M carried by a unit-norm-column ensemble.
inline double noise_variance_for_snr(int K, int M, double snr_db) {
  if (K < 1 || M < 1)
    throw std::invalid_argument("noise_variance_for_snr: K, M must be >= 1");
  return (double(K) / double(M)) * std::pow(10.0, -snr_db / 10.0);
}

// Recommended threshold tau = (M/N) sigma^2.
inline double default_tau(int M, int N, double sigma2) {
  if (M > N) throw std::invalid_argument("default_tau: requires M <= N");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("default_tau: sigma2 must be >= 0");
  return (double(M) / double(N)) * sigma2;
}

inline Eigen::VectorXd add_noise(const Eigen::VectorXd& y_clean, double sigma2,
                                 std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("add_noise: sigma2 must be >= 0");
  if (sigma2 == 0.0) return y_clean;
  Rng rng(seed);
  Eigen::VectorXd y = y_clean;
  const double s = std::sqrt(sigma2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += s * rng.next_gaussian();
  return y;
}

// One synthetic instance: A, K-sparse x, y = Ax + e at the requested SNR.
// Sub-streams for matrix, signal, and noise are derived from the one seed,
// so the instance is a pure function of (M, N, K, snr_db, ensemble, seed).
inline SensingProblem make_problem(int M, int N, int K, double snr_db,
                                   const std::string& ensemble,
                                   std::uint64_t seed) {
  SensingProblem p;
  p.seed = seed;
  p.ensemble = ensemble;
  if (ensemble == "gaussian")
    p.A = gen_gaussian_ensemble(M, N, Rng::derive_seed(seed, 1));
  else if (ensemble == "uniform_spherical")
    p.A = gen_uniform_spherical(M, N, Rng::derive_seed(seed, 1));
  else
    throw std::invalid_argument("make_problem: unknown ensemble '" + ensemble + "'");
  p.x_true = gen_sparse_signal(N, K, Rng::derive_seed(seed, 2));
  p.sigma2 = noise_variance_for_snr(K, M, snr_db);
  p.y = add_noise(p.A * (*p.x_true), p.sigma2, Rng::derive_seed(seed, 3));
  return p;
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    size_t pos = 0;
    const double v = std::stod(cell, &pos);
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

// Format (one value block per line, comma separated, %.17g so a round trip
// is bit exact):
//   line 1: M,N,sigma2,seed,ensemble        (header, literal)
//   line 2: the five values
//   lines 3..M+2: rows of A, N values each
//   next line: y, M values
//   optional last line: x_true, N values
inline void save_problem_csv(std::ostream& os, const SensingProblem& p) {
  const Eigen::Index M = p.A.rows(), N = p.A.cols();
  os << "M,N,sigma2,seed,ensemble\n";
  os << M << ',' << N << ',' << detail::fmt_g17(p.sigma2) << ',' << p.seed
     << ',' << p.ensemble << '\n';
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < N; ++j)
      os << (j ? "," : "") << detail::fmt_g17(p.A(i, j));
    os << '\n';
  }
  for (Eigen::Index i = 0; i < M; ++i)
    os << (i ? "," : "") << detail::fmt_g17(p.y[i]);
  os << '\n';
  if (p.x_true) {
    for (Eigen::Index j = 0; j < N; ++j)
      os << (j ? "," : "") << detail::fmt_g17((*p.x_true)[j]);
    os << '\n';
  }
}

inline void save_problem_csv(const std::string& path, const SensingProblem& p) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_problem_csv: cannot open " + path);
  save_problem_csv(f, p);
}

inline SensingProblem load_problem_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("M,N,sigma2,seed,ensemble", 0) != 0)
    throw std::invalid_argument("load_problem_csv: bad or missing header");
  if (!std::getline(is, line))
    throw std::invalid_argument("load_problem_csv: missing value line");

  SensingProblem p;
  Eigen::Index M = 0, N = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    M = std::stoll(cell);
    std::getline(ss, cell, ',');
    N = std::stoll(cell);
    std::getline(ss, cell, ',');
    p.sigma2 = std::stod(cell);
    std::getline(ss, cell, ',');
    p.seed = std::stoull(cell);
    if (!std::getline(ss, cell, ','))
      throw std::invalid_argument("load_problem_csv: missing ensemble field");
    p.ensemble = cell;
  }
  if (M < 1 || N < 1) throw std::invalid_argument("load_problem_csv: bad dimensions");

  p.A.resize(M, N);
  for (Eigen::Index i = 0; i < M; ++i) {
    if (!std::getline(is, line))
      throw std::invalid_argument("load_problem_csv: truncated A block");
    const auto row = detail::parse_csv_line(line);
    if (Eigen::Index(row.size()) != N)
      throw std::invalid_argument("load_problem_csv: row length mismatch in A");
    for (Eigen::Index j = 0; j < N; ++j) p.A(i, j) = row[j];
  }
  if (!std::getline(is, line))
    throw std::invalid_argument("load_problem_csv: missing y line");
  {
    const auto row = detail::parse_csv_line(line);
    if (Eigen::Index(row.size()) != M)
      throw std::invalid_argument("load_problem_csv: y length mismatch");
    p.y = Eigen::Map<const Eigen::VectorXd>(row.data(), M);
  }
  if (std::getline(is, line) && !line.empty()) {
    const auto row = detail::parse_csv_line(line);
    if (Eigen::Index(row.size()) != N)
      throw std::invalid_argument("load_problem_csv: x_true length mismatch");
    p.x_true = Eigen::Map<const Eigen::VectorXd>(row.data(), N);
  }
  return p;
}

inline SensingProblem load_problem_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("load_problem_csv: cannot open " + path);
  return load_problem_csv(f);
}

}  // namespace gstg
