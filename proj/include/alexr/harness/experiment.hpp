#pragma once

// Seeded multi-run execution and rate sweeps. Artifacts for an experiment
// named N go to <out>/N/:
//
//   records/<solver>__seed<k>.csv   one per (solver, seed)
//   aggregate.csv                   seed mean and std per solver and row
//   manifest.json                   the resolved config
//
// A rate sweep writes sweep.json, sweep.csv and manifest.json instead.
// Everything is staged in a sibling directory and moved into place only when
// complete.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "alexr/harness/config.hpp"
#include "alexr/harness/records.hpp"
#include "alexr/metrics/metrics.hpp"

namespace alexr {

namespace fs = std::filesystem;

/// Gap function on the output iterate for the chosen measure.
inline std::function<double(std::span<const double>)> make_gap_metric(const BuiltProblem& bp,
                                                                      GapKind kind) {
  switch (kind) {
    case GapKind::distance: {
      const HardInstance& h = *bp.hard;
      return [x_star = h.x_star, mu = h.mu](std::span<const double> x) {
        return distance_sq_gap(x, x_star, mu);
      };
    }
    case GapKind::objective: {
      auto p = bp.problem;
      return [p, f_star = *bp.f_star](std::span<const double> x) {
        return objective_gap(*p, x, f_star);
      };
    }
    case GapKind::none: break;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Staging

class StagedDirectory {
 public:
  StagedDirectory(const fs::path& out, const std::string& name)
      : final_(out / name), staging_(out / ("." + name + ".staging")) {
    fs::create_directories(out);
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;
  ~StagedDirectory() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  fs::path commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
    return final_;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string manifest_text(const ExperimentConfig& cfg, const BuiltProblem& bp) {
  Json j = config_to_json(cfg);
  // Informational only; ignored when the manifest is read back.
  Json resolved = Json::object();
  resolved["gap"] = to_string(resolve_gap(cfg.gap, bp));
  resolved["n"] = bp.problem->n();
  resolved["dim"] = bp.problem->dim();
  Json solvers = Json::array();
  for (const auto& s : cfg.solvers) {
    const SolverConfig sc = resolve_solver(s, *bp.problem, cfg.seeds.front());
    Json e = Json::object();
    e["name"] = s.name;
    std::visit(
        [&](const auto& c) {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, AlexrConfig>) {
            e["eta"] = c.eta;
            e["tau"] = c.tau;
            e["theta"] = c.theta;
          } else {
            e["step"] = c.step;
            e["gamma"] = c.gamma;
            if (c.variant == BaselineVariant::msvr)
              e["msvr_beta"] = msvr_beta(bp.problem->n(), c.S, c.gamma);
          }
        },
        sc);
    solvers.push_back(e);
  }
  resolved["solvers"] = solvers;
  j["resolved"] = resolved;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateRow {
  std::string solver;
  std::size_t t = 0;
  std::uint64_t oracle_count = 0;
  std::size_t n_seeds = 0;
  double objective_mean = 0.0;
  double objective_std = 0.0;
  double gap_mean = 0.0;
  double gap_std = 0.0;
};

namespace detail {
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}
}  // namespace detail

/// Seed mean and sample std per row index; all records of one solver share
/// the evaluation grid.
inline std::vector<AggregateRow> aggregate_records(std::span<const RunRecord> records) {
  std::vector<AggregateRow> out;
  std::vector<std::string> order;
  for (const auto& r : records)
    if (std::find(order.begin(), order.end(), r.solver) == order.end()) order.push_back(r.solver);
  for (const auto& name : order) {
    std::vector<const RunRecord*> group;
    for (const auto& r : records)
      if (r.solver == name) group.push_back(&r);
    std::size_t rows = group.front()->rows.size();
    for (auto* r : group) rows = std::min(rows, r->rows.size());
    for (std::size_t k = 0; k < rows; ++k) {
      AggregateRow a;
      a.solver = name;
      a.t = group.front()->rows[k].t;
      a.oracle_count = group.front()->rows[k].oracle_count;
      a.n_seeds = group.size();
      std::vector<double> obj, gap;
      for (auto* r : group) {
        obj.push_back(r->rows[k].objective);
        gap.push_back(r->rows[k].gap);
      }
      std::tie(a.objective_mean, a.objective_std) = detail::mean_std(obj);
      std::tie(a.gap_mean, a.gap_std) = detail::mean_std(gap);
      out.push_back(a);
    }
  }
  return out;
}

inline std::string aggregate_csv(std::span<const AggregateRow> rows) {
  std::string s = "solver,t,oracle_count,n_seeds,objective_mean,objective_std,gap_mean,gap_std\n";
  for (const auto& a : rows)
    s += a.solver + ',' + std::to_string(a.t) + ',' + std::to_string(a.oracle_count) + ',' +
         std::to_string(a.n_seeds) + ',' + format_double(a.objective_mean) + ',' +
         format_double(a.objective_std) + ',' + format_double(a.gap_mean) + ',' +
         format_double(a.gap_std) + '\n';
  return s;
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentResult {
  fs::path directory;
  std::vector<RunRecord> records;
  std::vector<AggregateRow> aggregate;
};

inline std::string record_file_name(const std::string& solver, std::uint64_t seed,
                                    RecordFormat format) {
  return solver + "__seed" + std::to_string(seed) + record_extension(format);
}

/// Runs every (solver, seed) cell; cells execute on up to cfg.workers threads.
inline std::vector<RunRecord> run_cells(const ExperimentConfig& cfg, const BuiltProblem& bp) {
  const GapKind gap = resolve_gap(cfg.gap, bp);
  RunOptions opt;
  opt.eval_every = cfg.eval_every;
  opt.record_wall_time = cfg.record_wall_time;
  opt.gap_metric = make_gap_metric(bp, gap);

  struct Cell {
    const SolverSpec* solver;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& s : cfg.solvers)
    for (auto seed : cfg.seeds) cells.push_back({&s, seed});
  // Resolve up front so configuration errors surface before any work.
  std::vector<SolverConfig> configs;
  for (const auto& c : cells) {
    configs.push_back(resolve_solver(*c.solver, *bp.problem, c.seed));
    std::visit([&](const auto& sc) { sc.validate(*bp.problem); }, configs.back());
  }

  std::vector<RunRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      try {
        records[k] = run(configs[k], *bp.problem, opt, cells[k].solver->name);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };
  const std::size_t threads = std::min(cfg.workers, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  const BuiltProblem bp = build_problem(cfg.problem);
  StagedDirectory stage(out, cfg.name);
  ExperimentResult result;
  result.records = run_cells(cfg, bp);

  fs::create_directories(stage.path() / "records");
  for (const auto& rec : result.records)
    emit_records(rec, (stage.path() / "records" / record_file_name(rec.solver, rec.seed, cfg.format)).string(),
                 cfg.format);
  result.aggregate = aggregate_records(result.records);
  write_text(stage.path() / "aggregate.csv", aggregate_csv(result.aggregate));
  write_text(stage.path() / "manifest.json", manifest_text(cfg, bp));
  result.directory = stage.commit();
  return result;
}

// ---------------------------------------------------------------------------
// Rate sweep

struct SweepPoint {
  double epsilon = 0.0;
  bool converged = false;
  double iterations = 0.0;
  std::uint64_t oracle_count = 0;
};

struct SweepReport {
  std::string solver;
  std::string gap;
  std::string mode;
  std::vector<SweepPoint> points;
  std::optional<RateFit> fit;
  std::string fit_error;
};

namespace detail {
using AnySolver = std::variant<Alexr, Baseline>;

inline AnySolver make_solver(const SolverConfig& c, const ProblemInstance& p) {
  return std::visit(
      [&](const auto& cfg) -> AnySolver {
        if constexpr (std::is_same_v<std::decay_t<decltype(cfg)>, AlexrConfig>)
          return AnySolver(std::in_place_type<Alexr>, p, cfg);
        else
          return AnySolver(std::in_place_type<Baseline>, p, cfg);
      },
      c);
}
}  // namespace detail

inline const SolverSpec& sweep_solver(const ExperimentConfig& cfg) {
  if (!cfg.sweep->solver.empty())
    for (const auto& s : cfg.solvers)
      if (s.name == cfg.sweep->solver) return s;
  for (const auto& s : cfg.solvers)
    if (s.preset != Preset::none) return s;
  return cfg.solvers.front();
}

/// Runs all seeds in lockstep and returns the first checked iteration at which
/// the seed-mean gap is <= eps (gaps are averaged first, then thresholded).
inline SweepPoint sweep_one(const ExperimentConfig& cfg, const BuiltProblem& bp,
                            const SolverSpec& spec, GapKind gap_kind, double eps) {
  const auto gap = make_gap_metric(bp, gap_kind);
  std::vector<detail::AnySolver> solvers;
  solvers.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds)
    solvers.push_back(detail::make_solver(resolve_solver(spec, *bp.problem, seed, eps), *bp.problem));
  auto mean_gap = [&] {
    double s = 0.0;
    for (const auto& sv : solvers)
      s += std::visit([&](const auto& x) { return gap(x.output()); }, sv);
    return s / static_cast<double>(solvers.size());
  };
  SweepPoint pt;
  pt.epsilon = eps;
  const auto& sw = *cfg.sweep;
  for (std::size_t t = 0;; ++t) {
    if (t % sw.check_every == 0 || t == sw.budget) {
      if (mean_gap() <= eps) {
        pt.converged = true;
        pt.iterations = static_cast<double>(t);
        pt.oracle_count = std::visit([](const auto& x) { return x.oracle_count(); }, solvers.front());
        return pt;
      }
    }
    if (t == sw.budget) return pt;
    for (auto& sv : solvers) std::visit([](auto& x) { x.step(); }, sv);
  }
}

inline SweepReport sweep_rate(const ExperimentConfig& cfg, const BuiltProblem& bp) {
  if (!cfg.sweep) throw ConfigError("sweep", "missing required field");
  const auto& sw = *cfg.sweep;
  SweepReport rep;
  rep.mode = sw.mode;
  std::vector<std::pair<double, double>> targets;
  if (sw.mode == "planted") {
    rep.solver = "planted";
    rep.gap = "planted";
    for (double eps : sw.epsilons) {
      SweepPoint pt;
      pt.epsilon = eps;
      pt.iterations = std::pow(sw.planted_constant / eps, sw.planted_exponent);
      pt.converged = pt.iterations <= static_cast<double>(sw.budget);
      rep.points.push_back(pt);
    }
  } else {
    const SolverSpec& spec = sweep_solver(cfg);
    const GapKind kind = resolve_gap(cfg.gap, bp);
    if (kind == GapKind::none)
      throw ConfigError("gap", "a rate sweep needs a gap measure (distance or objective)");
    rep.solver = spec.name;
    rep.gap = to_string(kind);
    for (double eps : sw.epsilons) rep.points.push_back(sweep_one(cfg, bp, spec, kind, eps));
  }
  for (const auto& pt : rep.points)
    if (pt.converged) targets.emplace_back(pt.epsilon, std::max(pt.iterations, 1.0));
  try {
    rep.fit = fit_rate(targets);
  } catch (const InvalidArgument& e) {
    rep.fit_error = std::string(e.what()) + " (" + std::to_string(targets.size()) +
                    " of " + std::to_string(rep.points.size()) + " targets converged)";
  }
  return rep;
}

inline std::string sweep_json(const SweepReport& rep) {
  Json j = Json::object();
  j["solver"] = rep.solver;
  j["gap"] = rep.gap;
  j["mode"] = rep.mode;
  Json pts = Json::array();
  for (const auto& p : rep.points) {
    Json e = Json::object();
    e["epsilon"] = p.epsilon;
    e["converged"] = p.converged;
    e["iterations"] = p.converged ? Json(p.iterations) : Json(nullptr);
    e["oracle_count"] = p.oracle_count;
    pts.push_back(e);
  }
  j["points"] = pts;
  if (rep.fit) {
    Json f = Json::object();
    f["slope"] = rep.fit->slope;
    f["intercept"] = rep.fit->intercept;
    f["r_squared"] = rep.fit->r_squared;
    j["fit"] = f;
    j["fit_error"] = nullptr;
  } else {
    j["fit"] = nullptr;
    j["fit_error"] = rep.fit_error;
  }
  return j.dump(2) + "\n";
}

inline std::string sweep_csv(const SweepReport& rep) {
  std::string s = "epsilon,converged,iterations,oracle_count\n";
  for (const auto& p : rep.points)
    s += format_double(p.epsilon) + ',' + (p.converged ? "1" : "0") + ',' +
         (p.converged ? format_double(p.iterations) : std::string("nan")) + ',' +
         std::to_string(p.oracle_count) + '\n';
  return s;
}

struct SweepResult {
  fs::path directory;
  SweepReport report;
};

inline SweepResult run_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  const BuiltProblem bp = build_problem(cfg.problem);
  StagedDirectory stage(out, cfg.name);
  SweepResult res;
  res.report = sweep_rate(cfg, bp);
  write_text(stage.path() / "sweep.json", sweep_json(res.report));
  write_text(stage.path() / "sweep.csv", sweep_csv(res.report));
  write_text(stage.path() / "manifest.json", manifest_text(cfg, bp));
  res.directory = stage.commit();
  return res;
}

}  // namespace alexr
