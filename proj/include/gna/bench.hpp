#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gna/driver.hpp"
#include "gna/errors.hpp"
#include "gna/fixedpoint.hpp"
#include "gna/io.hpp"

namespace gna {

inline MethodKind parse_method(const std::string& name) {
  for (MethodKind kind :
       {MethodKind::Anderson, MethodKind::GoodAndersonBroydenI,
        MethodKind::BroydenII, MethodKind::DFP, MethodKind::BFGS,
        MethodKind::SRk, MethodKind::GMRES, MethodKind::CG}) {
    if (name == method_name(kind)) return kind;
  }
  throw ConfigError("unknown method '" + name + "'");
}

struct BenchConfig {
  std::string problem = "synthetic";  // synthetic | ridge
  // synthetic
  Eigen::Index d = 25;
  double kappa = 1e-2;
  std::uint64_t seed = 0;
  // ridge
  std::string dataset;
  std::string format = "dense";  // dense | libsvm
  std::optional<double> lambda;
  std::optional<double> kappa_target;  // solves for lambda such that h*mu = target
  std::optional<double> step;

  std::vector<MethodConfig> methods;
  std::size_t n_max = 0;  // 0 = full memory
  int iters = 100;
  std::string out_dir = "bench_out";
  double lambda_reg = 1e-10;
  int workers = 4;

  void validate() const {
    if (methods.empty()) throw ConfigError("bench: empty method list");
    if (iters < 1) throw ConfigError("bench: iteration budget must be >= 1");
    if (problem != "synthetic" && problem != "ridge")
      throw ConfigError("bench: problem must be synthetic or ridge");
    if (problem == "ridge" && dataset.empty())
      throw ConfigError("bench: ridge problem needs a dataset path");
  }
};

// Flat key=value text; '#' starts a comment. CLI flags override these.
inline BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  BenchConfig cfg;
  cfg.methods.clear();
  double beta = -1.0;
  bool line_search = false;
  std::vector<std::string> method_names;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) continue;
    try {
      if (key == "problem") cfg.problem = val;
      else if (key == "d") cfg.d = std::stol(val);
      else if (key == "kappa") cfg.kappa = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "dataset") cfg.dataset = val;
      else if (key == "format") cfg.format = val;
      else if (key == "lambda") cfg.lambda = std::stod(val);
      else if (key == "kappa_target") cfg.kappa_target = std::stod(val);
      else if (key == "step") cfg.step = std::stod(val);
      else if (key == "beta") beta = std::stod(val);
      else if (key == "line_search") line_search = val == "1" || val == "true";
      else if (key == "nmax") cfg.n_max = std::stoul(val);
      else if (key == "iters") cfg.iters = std::stoi(val);
      else if (key == "out") cfg.out_dir = val;
      else if (key == "reg") cfg.lambda_reg = std::stod(val);
      else if (key == "workers") cfg.workers = std::stoi(val);
      else if (key == "methods") {
        std::istringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) method_names.push_back(tok);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for config key '" + key + "'");
    }
  }
  for (const std::string& name : method_names)
    cfg.methods.push_back({parse_method(name), beta, line_search});
  return cfg;
}

inline LinearFixedPoint build_bench_problem(const BenchConfig& cfg) {
  if (cfg.problem == "synthetic")
    return make_random_spd_problem(cfg.d, cfg.kappa, cfg.seed);

  Dataset ds = cfg.format == "libsvm" ? load_libsvm_dataset(cfg.dataset)
                                      : load_dense_dataset(cfg.dataset);
  double lambda = cfg.lambda.value_or(0.0);
  if (cfg.kappa_target) {
    const Eigen::MatrixXd AtA = ds.A.transpose() * ds.A;
    const double L0 = detail::power_iteration(
        [&](const Eigen::VectorXd& v) { return AtA * v; }, AtA.rows());
    const double mu0 =
        L0 - detail::power_iteration(
                 [&](const Eigen::VectorXd& v) { return L0 * v - AtA * v; },
                 AtA.rows(), 54321);
    const double kt = *cfg.kappa_target;
    if (!(kt > 0.0 && kt < 1.0))
      throw ConfigError("bench: kappa target must be in (0,1)");
    lambda = (kt * (L0 + mu0) - 2.0 * mu0) / (2.0 - 2.0 * kt);
    if (lambda < 0.0)
      throw ConfigError(
          "bench: the dataset's natural kappa already exceeds the target; "
          "no lambda >= 0 reaches it");
  }
  return make_ridge_problem(ds.A, ds.b, lambda, cfg.step);
}

inline Eigen::VectorXd bench_start_point(const BenchConfig& cfg,
                                         const LinearFixedPoint& problem) {
  if (cfg.problem == "ridge") return Eigen::VectorXd::Ones(problem.d);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd y0(problem.d);
  for (Eigen::Index i = 0; i < problem.d; ++i) y0(i) = gauss(rng);
  if (problem.x_star) y0 += *problem.x_star;
  return y0;
}

struct BenchCellSummary {
  std::string name;
  double final_res = 0.0;
  double min_res = 0.0;
  long bound_violations = 0;
  int restarts = 0;
};

struct BenchSummary {
  std::vector<BenchCellSummary> cells;
  long total_bound_violations = 0;
};

namespace detail {

inline long count_bound_violations(const RunRecord& record) {
  long v = 0;
  double r1_w = 0.0;
  if (!record.rows.empty() && record.rows.front().res_w)
    r1_w = *record.rows.front().res_w;
  // Residuals at the double-precision floor are converged noise, not
  // violations.
  const double floor = 1e-13 * r1_w;
  for (const RunRow& row : record.rows)
    if (row.res_w && row.bound &&
        *row.res_w > *row.bound * (1.0 + 1e-9) + floor)
      ++v;
  return v;
}

// GMRES has no online form; its trace is the offline Theorem-1 curve.
inline RunRecord gmres_offline_trace(const LinearFixedPoint& problem,
                                     const Eigen::VectorXd& y0,
                                     const BenchConfig& cfg,
                                     const MethodConfig& method) {
  StopWatch watch;
  const int cap = static_cast<int>(
      std::min<std::size_t>(cfg.n_max == 0 ? 200 : cfg.n_max,
                            static_cast<std::size_t>(cfg.iters)));
  BaselineResult base = run_baseline(problem, y0, cap);
  const auto inst = DenseInstruments::make(problem, method);
  RunRecord record;
  long ops = cap;
  double r1_w = 0.0;
  for (int N = 1; N <= cap; ++N) {
    OfflineResult res;
    try {
      res = offline_extrapolate(problem, base.history, N, method,
                                cfg.lambda_reg);
    } catch (const Error&) {
      ++record.restarts;
      continue;
    }
    ++ops;  // the residual evaluation
    RunRow row;
    row.iter = N;
    row.res_l2 = res.residual_norm;
    if (inst.active) {
      const Eigen::VectorXd r =
          problem.apply_g(res.y_extr) - res.y_extr;
      row.res_w = inst.w_norm(r);
      if (N == 1) r1_w = *row.res_w;
      if (problem.kappa && N >= 2)
        row.bound = chebyshev_factor(*problem.kappa, N) * r1_w;  // amp = 1
    }
    if (problem.x_star) row.err_l2 = (res.y_extr - *problem.x_star).norm();
    row.ops = ops;
    row.seconds = watch.seconds();
    record.rows.push_back(row);
  }
  return record;
}

}  // namespace detail

// Runs the method grid (concurrently, up to cfg.workers cells at a time),
// writes one CSV per cell plus a summary file with final residuals and the
// bound-violation count.
inline BenchSummary run_bench(const BenchConfig& cfg) {
  cfg.validate();
  const LinearFixedPoint problem = build_bench_problem(cfg);
  const Eigen::VectorXd y0 = bench_start_point(cfg, problem);
  std::filesystem::create_directories(cfg.out_dir);

  struct Cell {
    MethodConfig method;
    std::string name;
    RunRecord record;
  };
  std::vector<Cell> cells;
  for (const MethodConfig& m : cfg.methods) {
    std::string name = method_name(m.kind);
    if (m.line_search) name += "_ls";
    cells.push_back({m, name, {}});
  }

  auto run_cell = [&](Cell& cell) {
    if (cell.method.kind == MethodKind::GMRES)
      cell.record = detail::gmres_offline_trace(problem, y0, cfg, cell.method);
    else
      cell.record = online_accelerate(problem, y0, cell.method, cfg.n_max,
                                      cfg.iters, cfg.lambda_reg);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.workers));
  for (std::size_t start = 0; start < cells.size(); start += workers) {
    std::vector<std::future<void>> batch;
    const std::size_t stop = std::min(cells.size(), start + workers);
    for (std::size_t i = start; i < stop; ++i)
      batch.push_back(
          std::async(std::launch::async, run_cell, std::ref(cells[i])));
    for (auto& f : batch) f.get();
  }

  BenchSummary summary;
  std::ofstream sum(cfg.out_dir + "/summary.txt");
  if (!sum) throw IoError("cannot write summary in " + cfg.out_dir);
  for (Cell& cell : cells) {
    write_csv(cfg.out_dir + "/" + cell.name + ".csv", cell.record);
    BenchCellSummary cs;
    cs.name = cell.name;
    cs.restarts = cell.record.restarts;
    cs.bound_violations = detail::count_bound_violations(cell.record);
    cs.final_res =
        cell.record.rows.empty() ? 0.0 : cell.record.rows.back().res_l2;
    cs.min_res = cs.final_res;
    for (const RunRow& row : cell.record.rows)
      cs.min_res = std::min(cs.min_res, row.res_l2);
    summary.total_bound_violations += cs.bound_violations;
    sum << cs.name << " final_res=" << detail::format_double(cs.final_res)
        << " min_res=" << detail::format_double(cs.min_res)
        << " bound_violations=" << cs.bound_violations
        << " restarts=" << cs.restarts << "\n";
    summary.cells.push_back(std::move(cs));
  }
  sum << "total_bound_violations=" << summary.total_bound_violations << "\n";
  if (!sum) throw IoError("summary write failed in " + cfg.out_dir);
  return summary;
}

}  // namespace gna
