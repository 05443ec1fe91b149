#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "alexr/algorithms/alexr.hpp"
#include "alexr/algorithms/baselines.hpp"

namespace alexr {

using SolverConfig = std::variant<AlexrConfig, BaselineConfig>;

template <typename S>
concept IterativeSolver = requires(S s, const S cs) {
  s.step();
  { cs.iteration() } -> std::convertible_to<std::size_t>;
  { cs.oracle_count() } -> std::convertible_to<std::uint64_t>;
  { cs.output() } -> std::convertible_to<Vector>;
  { cs.average() } -> std::convertible_to<Vector>;
  { cs.iterate() } -> std::convertible_to<const Vector&>;
  { cs.dual_norm() } -> std::convertible_to<double>;
};

struct RunRow {
  std::size_t t = 0;
  std::uint64_t oracle_count = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double dual_norm = 0.0;
  std::int64_t wall_nanos = 0;
};

struct RunRecord {
  std::string solver;
  std::uint64_t seed = 0;
  std::vector<RunRow> rows;
  Vector last_iterate;
  Vector average_iterate;
};

struct RunOptions {
  std::size_t eval_every = 1;
  /// Known optimal value; gap = F(x_out) - f_star when set.
  std::optional<double> f_star;
  /// Custom gap measure on the output iterate; overrides f_star.
  std::function<double(std::span<const double>)> gap_metric;
  /// When false every wall_nanos entry is 0 so records are reproducible.
  bool record_wall_time = false;
};

namespace detail {
inline RunRow make_row(const ProblemInstance& p, std::size_t t, std::uint64_t oracles,
                       const Vector& x_out, double dual_norm, const RunOptions& opt,
                       std::int64_t nanos) {
  RunRow row;
  row.t = t;
  row.oracle_count = oracles;
  row.dual_norm = dual_norm;
  row.wall_nanos = opt.record_wall_time ? nanos : 0;
  if (p.exact_evaluable()) row.objective = evaluate_objective(p, x_out);
  if (opt.gap_metric)
    row.gap = opt.gap_metric(x_out);
  else if (opt.f_star)
    row.gap = row.objective - *opt.f_star;
  return row;
}
}  // namespace detail

/// Runs `total` iterations, evaluating at t = 0, every eval_every, and at the end.
template <IterativeSolver Solver>
RunRecord run_solver(Solver& solver, const ProblemInstance& p, std::size_t total,
                     const RunOptions& opt, std::string name = {}, std::uint64_t seed = 0) {
  if (opt.eval_every < 1) throw InvalidArgument("run: eval_every must be >= 1");
  using clock = std::chrono::steady_clock;
  RunRecord rec;
  rec.solver = std::move(name);
  rec.seed = seed;
  const auto start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count();
  };
  rec.rows.push_back(detail::make_row(p, solver.iteration(), solver.oracle_count(),
                                      solver.output(), solver.dual_norm(), opt, 0));
  for (std::size_t t = 1; t <= total; ++t) {
    solver.step();
    if (t % opt.eval_every == 0 || t == total)
      rec.rows.push_back(detail::make_row(p, solver.iteration(), solver.oracle_count(),
                                          solver.output(), solver.dual_norm(), opt,
                                          elapsed()));
  }
  rec.last_iterate = solver.iterate();
  rec.average_iterate = solver.average();
  return rec;
}

inline std::string solver_kind(const SolverConfig& cfg) {
  return std::visit(
      [](const auto& c) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, AlexrConfig>)
          return "alexr";
        else
          return to_string(c.variant);
      },
      cfg);
}

/// Builds the solver named by `cfg` and runs it for cfg.T iterations.
inline RunRecord run(const SolverConfig& cfg, const ProblemInstance& p,
                     const RunOptions& opt, std::string name = {}) {
  return std::visit(
      [&](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, AlexrConfig>) {
          Alexr solver(p, c);
          return run_solver(solver, p, c.T, opt, name.empty() ? "alexr" : name, c.seed);
        } else {
          Baseline solver(p, c);
          return run_solver(solver, p, c.T, opt, name.empty() ? to_string(c.variant) : name,
                            c.seed);
        }
      },
      cfg);
}

}  // namespace alexr
