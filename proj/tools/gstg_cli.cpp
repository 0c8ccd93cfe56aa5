// Command-line front end: single-problem recovery, Monte Carlo sweeps, and a
// quick self-check of the numerical core.
//
// Exit codes: 0 success, 2 validation/usage failure, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gstg/gstg.hpp"

namespace {

struct RecoverArgs {
  std::string file;
  int N = 0, M = 0, K = 0;
  double snr = 25.0;
  std::string ensemble = "gaussian";
  std::uint64_t seed = 0;
  std::string solver = "greedy";
  double eps = 0.01;
  double theta = 1.0;
};

int cmd_recover(const RecoverArgs& a) {
  gstg::SensingProblem prob;
  if (!a.file.empty()) {
    prob = gstg::load_problem_csv(a.file);
  } else {
    if (a.N <= 0 || a.M <= 0 || a.K <= 0)
      throw std::invalid_argument(
          "recover: need --file, or --N --M --K (with optional --snr --seed)");
    prob = gstg::make_problem(a.M, a.N, a.K, a.snr, a.ensemble, a.seed);
  }
  const int M = int(prob.A.rows()), N = int(prob.A.cols());

  gstg::RecoveryResult res;
  if (a.solver == "omp") {
    gstg::OmpOptions o;
    o.max_support = std::min(M, N);
    bool warn = false;
    res = gstg::recover_omp(prob, o, &warn);
    if (warn) std::cout << "warning=rank_deficient_or_stalled\n";
  } else if (a.solver == "greedy" || a.solver == "em") {
    gstg::Hyperparams h;
    h.sigma2 = prob.sigma2;
    h.eps = a.eps;
    h.tau = a.theta * gstg::default_tau(M, N, prob.sigma2);
    gstg::EmOptions opts;
    res = (a.solver == "em") ? gstg::recover_em(prob, h, opts)
                             : gstg::recover_greedy(prob, h, opts);
  } else {
    throw std::invalid_argument("recover: unknown solver " + a.solver);
  }

  std::cout << "solver=" << a.solver << "\n"
            << "M=" << M << " N=" << N
            << " sigma2=" << gstg::detail::fmt_g17(prob.sigma2) << "\n"
            << "support_size=" << res.support.size()
            << " iterations=" << res.iterations
            << " wall_time=" << gstg::detail::fmt_g17(res.wall_time) << "\n";
  std::cout << "support=";
  for (size_t i = 0; i < res.support.size(); ++i)
    std::cout << (i ? " " : "") << res.support[i];
  std::cout << "\n";
  if (a.solver != "omp")
    std::cout << "eta_final=" << gstg::detail::fmt_g17(res.eta_final) << "\n";
  if (prob.x_true)
    std::cout << "rmse=" << gstg::detail::fmt_g17(gstg::rmse(res.x_hat, *prob.x_true))
              << "\n";
  return 0;
}

int resolve_jobs(int jobs_flag) {
  if (const char* env = std::getenv("SBL_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw std::invalid_argument("SBL_JOBS must be a positive integer");
    return int(v);
  }
  return jobs_flag;
}

int cmd_sweep(const std::string& config_path, int jobs, bool emit_plot) {
  const gstg::ExperimentConfig cfg = gstg::parse_config(config_path);
  if (emit_plot && cfg.figure.empty())
    throw std::invalid_argument(
        "sweep: --emit-plotdata needs a `figure = figN` key in the config");
  const auto rows = gstg::run_sweep(cfg, resolve_jobs(jobs), emit_plot);
  std::cout << "wrote " << rows.size() << " rows to " << cfg.output_path << "\n";
  if (emit_plot) {
    const std::filesystem::path out(cfg.output_path);
    std::cout << "wrote plot data to "
              << (out.parent_path() / (cfg.figure + "_plotdata.csv")).string()
              << "\n";
  }
  return 0;
}

// Compact property suite over the numerical core. Any failure exits 3.
int cmd_selfcheck() {
  struct Check {
    const char* name;
    bool (*fn)();
  };
  const Check checks[] = {
      {"incomplete gamma basics",
       [] {
         const double a = std::exp(gstg::log_upper_incomplete_gamma(1.0, 0.0));
         const double b = std::exp(gstg::log_upper_incomplete_gamma(1.0, 2.0));
         const double c = std::exp(gstg::log_upper_incomplete_gamma(0.5, 0.0));
         return std::abs(a - 1.0) < 1e-12 &&
                std::abs(b - 0.13533528323661269) < 1e-12 &&
                std::abs(c - 1.7724538509055160) < 1e-12;
       }},
      {"exponential prior at eps=1",
       [] {
         gstg::Hyperparams h;
         h.tau = 2.0;
         h.eps = 1.0;
         h.eta = 2.0;
         return std::abs(gstg::stg_pdf(0.0, h) - 2.0) < 1e-12 &&
                std::abs(gstg::stg_pdf(0.7, h) - 2.0 * std::exp(-1.4)) < 1e-12;
       }},
      {"Laplace marginal",
       [] {
         gstg::Hyperparams h;
         h.tau = 0.37;
         h.eps = 1.0;
         h.eta = 1.0;
         const double got = gstg::marginal_pdf(1.3, h);
         const double want = std::sqrt(0.5) * std::exp(-std::sqrt(2.0) * 1.3);
         return std::abs(got - want) <= 1e-7 * want;
       }},
      {"cubic discriminant classification",
       [] {
         const auto r1 = gstg::cubic::real_roots(1, -6, 11, -6);
         const auto r2 = gstg::cubic::real_roots(1, 0, -3, 2);
         const auto r3 = gstg::cubic::real_roots(1, 0, 0, -8);
         return r1.size() == 3 && std::abs(r1[0] - 1) < 1e-9 &&
                std::abs(r1[2] - 3) < 1e-9 && r2.size() == 2 &&
                std::abs(r2[0] + 2) < 1e-9 && r3.size() == 1 &&
                std::abs(r3[0] - 2) < 1e-12 &&
                gstg::cubic::discriminant(1, 0, 0, 1) == -27.0;
       }},
      {"variance update solves its cubic",
       [] {
         gstg::Rng rng(11);
         for (int i = 0; i < 20; ++i) {
           gstg::Hyperparams h;
           h.tau = std::exp(-10.0 * rng.next_uniform());
           h.eps = rng.next_uniform();
           h.eta = std::exp(3.0 * (rng.next_uniform() - 0.5));
           const double ex2 = std::exp(6.0 * (rng.next_uniform() - 0.5));
           const double a = gstg::update_alpha_em(ex2, h);
           const double f = 2 * h.eta * a * a * a +
                            (3 - 2 * h.eps + 2 * h.eta * h.tau) * a * a +
                            (h.tau - ex2) * a - h.tau * ex2;
           const double scale = std::max({1.0, a * a * a, ex2 * h.tau});
           if (!(a > 0.0) || std::abs(f) > 1e-9 * scale) return false;
         }
         return true;
       }},
      {"EM trace monotone",
       [] {
         const auto prob = gstg::make_problem(24, 48, 4, 20.0, "gaussian", 5);
         gstg::Hyperparams h;
         h.sigma2 = prob.sigma2;
         h.tau = gstg::default_tau(24, 48, prob.sigma2);
         const auto res = gstg::recover_em(prob, h, gstg::EmOptions{});
         for (size_t i = 1; i < res.logL_trace.size(); ++i) {
           const double slack =
               1e-9 * std::max(1.0, std::abs(res.logL_trace[i - 1]));
           if (res.logL_trace[i] < res.logL_trace[i - 1] - slack) return false;
         }
         return res.logL_trace.size() == size_t(res.iterations) + 1;
       }},
      {"greedy exact recovery, verified bookkeeping",
       [] {
         auto prob = gstg::make_problem(40, 96, 5, 60.0, "gaussian", 9);
         gstg::Hyperparams h;
         h.sigma2 = prob.sigma2;
         h.tau = gstg::default_tau(40, 96, prob.sigma2);
         gstg::GreedyState st;
         const auto res = gstg::recover_greedy(prob, h, gstg::EmOptions{}, &st);
         const double dev = gstg::verify_bookkeeping(st, prob.A, prob.y, prob.sigma2);
         // S and Q scale with 1/sigma2 here, so the deviation bound does too
         const double scale = std::max(1.0, st.S_all.lpNorm<Eigen::Infinity>());
         return gstg::rmse(res.x_hat, *prob.x_true) < 1e-4 && dev <= 1e-8 * scale;
       }},
      {"OMP single atom",
       [] {
         gstg::SensingProblem p;
         p.A = gstg::gen_gaussian_ensemble(16, 32, 3);
         p.y = 3.0 * p.A.col(5);
         p.sigma2 = 0.0;
         gstg::OmpOptions o;
         o.max_support = 16;
         const auto res = gstg::recover_omp(p, o);
         return res.support == std::vector<int>{5} && res.iterations == 1 &&
                std::abs(res.x_hat[5] - 3.0) < 1e-10;
       }},
      {"metrics definitions",
       [] {
         Eigen::VectorXd x(3);
         x << 1, -2, 0.5;
         return gstg::rmse(x, x) == 0.0 &&
                std::abs(gstg::rmse(Eigen::VectorXd::Zero(3), x) - 1.0) < 1e-15 &&
                std::abs(gstg::rmse(2 * x, x) - 1.0) < 1e-15;
       }},
  };
  bool all = true;
  for (const auto& c : checks) {
    bool pass = false;
    std::string err;
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      err = e.what();
    }
    std::cout << (pass ? "ok" : "FAIL") << ": " << c.name;
    if (!err.empty()) std::cout << " (" << err << ")";
    std::cout << "\n";
    all = all && pass;
  }
  if (!all) {
    std::cout << "selfcheck FAILED\n";
    return 3;
  }
  std::cout << "selfcheck passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian learning with the G-STG prior"};
  app.require_subcommand(1);

  RecoverArgs ra;
  auto* rec = app.add_subcommand("recover", "Recover one problem");
  rec->add_option("--file", ra.file, "Problem CSV (overrides generation flags)");
  rec->add_option("--N", ra.N, "Signal length");
  rec->add_option("--M", ra.M, "Measurement count");
  rec->add_option("--K", ra.K, "Sparsity of the generated signal");
  rec->add_option("--snr", ra.snr, "SNR in dB (default 25)");
  rec->add_option("--ensemble", ra.ensemble, "gaussian | uniform_spherical");
  rec->add_option("--seed", ra.seed, "RNG seed");
  rec->add_option("--solver", ra.solver, "greedy | em | omp");
  rec->add_option("--eps", ra.eps, "Shape parameter in [0,1]");
  rec->add_option("--theta", ra.theta, "Multiplier on the default threshold");

  std::string config_path;
  int jobs = 0;
  bool emit_plot = false;
  auto* sw = app.add_subcommand("sweep", "Run a Monte Carlo sweep");
  sw->add_option("--config", config_path, "Sweep config file")->required();
  sw->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  sw->add_flag("--emit-plotdata", emit_plot, "Also write long-format plot CSV");

  auto* sc = app.add_subcommand("selfcheck", "Run the built-in property suite");

  try {
    app.parse(argc, argv);
    if (rec->parsed()) return cmd_recover(ra);
    if (sw->parsed()) return cmd_sweep(config_path, jobs, emit_plot);
    if (sc->parsed()) return cmd_selfcheck();
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gstg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
