#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "alexr/algorithms/alexr.hpp"
#include "alexr/core/problem.hpp"

namespace alexr {

inline double objective_gap(const ProblemInstance& p, std::span<const double> x,
                            double f_star) {
  return evaluate_objective(p, x) - f_star;
}

/// (mu/2) |x - x_star|^2.
inline double distance_sq_gap(std::span<const double> x, std::span<const double> x_star,
                              double mu) {
  if (x.size() != x_star.size()) throw InvalidArgument("distance_sq_gap: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - x_star[j]) * (x[j] - x_star[j]);
  return 0.5 * mu * s;
}

// ---------------------------------------------------------------------------
// Partial AUC

/// Pair counts behind a partial AUC value. Ties count half, so everything is
/// kept in half-units: value = half_wins / (2 * pairs).
struct PaucCounts {
  std::uint64_t half_wins = 0;
  std::uint64_t pairs = 0;

  double value() const {
    return static_cast<double>(half_wins) / (2.0 * static_cast<double>(pairs));
  }
};

inline std::size_t pauc_selection_size(std::size_t n_pos, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("pauc: alpha must lie in (0,1)");
  return static_cast<std::size_t>(std::floor(static_cast<double>(n_pos) * (1.0 - alpha)));
}

/// Pairs between the k = floor(n_+ (1 - alpha)) lowest scoring positives and all
/// negatives, counting s_i > s_j as a win and s_i = s_j as half a win.
inline PaucCounts pauc_counts(std::span<const double> pos, std::span<const double> neg,
                              double alpha) {
  const std::size_t k = pauc_selection_size(pos.size(), alpha);
  if (k == 0) throw InvalidArgument("pauc: n_+ (1 - alpha) < 1 selects no positives");
  if (neg.empty()) throw InvalidArgument("pauc: no negative scores");
  std::vector<double> p(pos.begin(), pos.end());
  std::vector<double> q(neg.begin(), neg.end());
  std::partial_sort(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k), p.end());
  std::sort(q.begin(), q.end());
  PaucCounts c;
  c.pairs = static_cast<std::uint64_t>(k) * q.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto lo = std::lower_bound(q.begin(), q.end(), p[i]);
    const auto hi = std::upper_bound(lo, q.end(), p[i]);
    c.half_wins += 2 * static_cast<std::uint64_t>(lo - q.begin()) +
                   static_cast<std::uint64_t>(hi - lo);
  }
  return c;
}

inline double pauc_exact(std::span<const double> pos, std::span<const double> neg,
                         double alpha) {
  return pauc_counts(pos, neg, alpha).value();
}

// ---------------------------------------------------------------------------
// Worst groups

enum class GroupMetricMode {
  mean,      // values are losses; worst = largest
  accuracy,  // values are accuracies; worst = smallest
};

/// Mean of the ceil(alpha * n) worst per-group values.
inline double worst_fraction_group_metric(std::span<const double> values, double alpha,
                                          GroupMetricMode mode) {
  if (values.empty()) throw InvalidArgument("worst-group metric: no groups");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("worst-group metric: alpha in (0,1]");
  const double target = alpha * static_cast<double>(values.size());
  if (target < 1.0 - 1e-9) throw InvalidArgument("worst-group metric: alpha * n < 1");
  const auto m = std::min(values.size(), static_cast<std::size_t>(std::ceil(target - 1e-9)));
  std::vector<double> v(values.begin(), values.end());
  if (mode == GroupMetricMode::accuracy)
    std::sort(v.begin(), v.end());
  else
    std::sort(v.begin(), v.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t k = 0; k < m; ++k) s += v[k];
  return s / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Dual radius

struct DualRadiusReport {
  double omega_y0 = 0.0;
  double worst_case = 0.0;
  double sparsity_fraction = 0.0;
};

/// Maximizers of v g_i(x) - f_i*(v), one per block (subgradients of f_i at g_i(x)).
inline Vector dual_maximizers(const ProblemInstance& p, std::span<const double> x) {
  Vector y(p.n());
  for (std::size_t i = 0; i < p.n(); ++i)
    y[i] = subgradient(p.outers[i], p.inners[i]->exact_value(x));
  return y;
}

/// sum_i U_psi(y_tilde_i, y0_i), with the worst case n C_f^2 / 2 and the
/// fraction of zero blocks of y_tilde.
inline DualRadiusReport dual_radius(const ProblemInstance& p, std::span<const double> y_tilde,
                                    std::span<const double> y0, PsiMode mode) {
  if (y_tilde.size() != p.n() || y0.size() != p.n())
    throw InvalidArgument("dual_radius: dual tables must have n blocks");
  DualRadiusReport r;
  double cf = 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& f = p.outers[i];
    cf = std::max(cf, lipschitz_constant(f));
    const double dy = y_tilde[i] - y0[i];
    if (mode == PsiMode::quadratic) {
      r.omega_y0 += 0.5 * dy * dy;
    } else {
      const auto slope = conjugate_gradient(f, y0[i]);
      if (!slope) throw Unsupported("dual_radius: Bregman divergence of f* needs grad f*");
      r.omega_y0 += conjugate_value(f, y_tilde[i]) - conjugate_value(f, y0[i]) - *slope * dy;
    }
    if (std::abs(y_tilde[i]) <= 1e-12) ++zeros;
  }
  r.worst_case = 0.5 * static_cast<double>(p.n()) * cf * cf;
  r.sparsity_fraction = static_cast<double>(zeros) / static_cast<double>(p.n());
  return r;
}

// ---------------------------------------------------------------------------
// Rate fitting

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (log eps, log iterations)
};

/// Least-squares line through (log eps, log T).
inline RateFit fit_rate(std::span<const std::pair<double, double>> targets) {
  if (targets.size() < 3) throw InvalidArgument("fit_rate: need at least 3 points");
  RateFit fit;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto [eps, iters] = targets[k];
    if (!(eps > 0.0) || !(iters > 0.0))
      throw InvalidArgument("fit_rate: epsilon and iterations must be positive");
    if (k > 0 && !(eps < targets[k - 1].first))
      throw InvalidArgument("fit_rate: epsilon list must be strictly decreasing");
    fit.points.emplace_back(std::log(eps), std::log(iters));
  }
  const double m = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (auto [x, y] : fit.points) {
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

inline RateFit fit_rate(const std::vector<std::pair<double, double>>& targets) {
  return fit_rate(std::span<const std::pair<double, double>>(targets));
}

/// First t at which the curve is at or below eps, if any.
inline std::optional<std::size_t> iterations_to_reach(std::span<const std::size_t> ts,
                                                      std::span<const double> values,
                                                      double eps) {
  for (std::size_t k = 0; k < ts.size() && k < values.size(); ++k)
    if (values[k] <= eps) return ts[k];
  return std::nullopt;
}

}  // namespace alexr
