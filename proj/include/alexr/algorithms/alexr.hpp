#pragma once

// ALEXR: primal-dual block-coordinate stochastic method. Each iteration
// samples S outer components; for each sampled i it draws two independent
// inner batches, forms the extrapolated estimate
//
//   g~ = g_i(x_t; B) + theta (g_i(x_t; B) - g_i(x_{t-1}; B)),
//
// updates dual block i by a mirror-prox step, and then takes a proximal
// gradient step on x using the second batch and the updated duals.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alexr/core/problem.hpp"

namespace alexr {

/// Distance-generating function for the dual step.
///  - quadratic: psi = 1/2 |.|^2, dual table holds y.
///  - conjugate: psi = f*, dual table holds the u-sequence, y = grad f(u).
///  - conjugate_explicit: psi = f*, dual table holds y, the Bregman prox is
///    solved directly in dual space. Reference route for the u-sequence.
enum class PsiMode { quadratic, conjugate, conjugate_explicit };

/// Output iterate: last x_T, or the uniform average (1/T) sum_{t<T} x_t.
enum class Averaging { last, uniform };

inline std::string to_string(PsiMode m) {
  switch (m) {
    case PsiMode::quadratic: return "quadratic";
    case PsiMode::conjugate: return "conjugate";
    case PsiMode::conjugate_explicit: return "conjugate_explicit";
  }
  return "?";
}

inline std::string to_string(Averaging a) {
  return a == Averaging::last ? "last" : "uniform";
}

struct AlexrConfig {
  double eta = 1.0;    // primal prox weight
  double tau = 1.0;    // dual prox weight
  double theta = 0.0;  // extrapolation
  std::size_t S = 1;
  std::size_t B = 1;
  std::size_t T = 0;
  PsiMode psi_mode = PsiMode::quadratic;
  std::uint64_t seed = 1;
  Averaging averaging = Averaging::last;
  /// Starting point; empty means the projection of 0 onto the box.
  Vector x0;

  void validate(const ProblemInstance& p) const {
    if (!x0.empty() && x0.size() != p.dim())
      throw InvalidArgument("alexr: x0 has the wrong dimension");
    if (!(eta > 0.0)) throw InvalidArgument("alexr: eta must be > 0");
    if (!(tau > 0.0)) throw InvalidArgument("alexr: tau must be > 0");
    if (!(theta >= 0.0 && theta <= 1.0))
      throw InvalidArgument("alexr: theta must lie in [0,1]");
    if (S < 1 || S > p.n()) throw InvalidArgument("alexr: need 1 <= S <= n");
    if (B < 1) throw InvalidArgument("alexr: need B >= 1");
    if (psi_mode != PsiMode::quadratic)
      for (const auto& f : p.outers)
        if (!is_smooth(f))
          throw Unsupported("alexr: psi = f* requires smooth outer functions, got '" +
                            std::string(outer_name(f)) + "'");
    if (psi_mode == PsiMode::conjugate_explicit)
      for (const auto& f : p.outers)
        if (!conjugate_gradient(f, dual_domain(f).lo))
          throw Unsupported("alexr: explicit conjugate prox needs grad f* for '" +
                            std::string(outer_name(f)) + "'");
  }
};

// ---------------------------------------------------------------------------
// Dual updates

inline double dual_update_quadratic(const OuterFunction& f, double y,
                                    double g_tilde, double tau) {
  return prox_dual_quadratic(f, y, g_tilde, tau);
}

struct ConjugateDualUpdate {
  double u;
  double y;
};

/// u' = (tau u + g~) / (1 + tau), y' = grad f(u').
inline ConjugateDualUpdate dual_update_conjugate(const OuterFunction& f, double u,
                                                 double g_tilde, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("dual_update_conjugate: tau must be >= 0");
  const double u_next = (tau * u + g_tilde) / (1.0 + tau);
  return {u_next, primal_map(f, u_next)};
}

/// argmax_{v in dom} { v g~ - f*(v) - tau U_{f*}(v, y) } by bisection on the
/// derivative g~ - (1 + tau) f*'(v) + tau f*'(y). Works only from y and the
/// conjugate, never touching grad f.
inline double dual_update_conjugate_explicit(const OuterFunction& f, double y,
                                             double g_tilde, double tau) {
  const Interval dom = dual_domain(f);
  if (dom.width() == 0.0) return dom.lo;
  const auto anchor = conjugate_gradient(f, y);
  if (!anchor) throw Unsupported("explicit conjugate prox needs grad f*");
  auto slope = [&](double v) {
    return g_tilde - (1.0 + tau) * *conjugate_gradient(f, v) + tau * *anchor;
  };
  if (slope(dom.lo) <= 0.0) return dom.lo;
  if (slope(dom.hi) >= 0.0) return dom.hi;
  double lo = dom.lo;
  double hi = dom.hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// argmin_{z in box} <G, z> + r(z) + eta/2 |z - x|^2.
inline void primal_prox_step(std::span<const double> x, std::span<const double> grad,
                             double eta, const Regularizer& reg, const BoxDomain& box,
                             std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = std::clamp((eta * x[j] - grad[j] - reg.linear[j]) / (eta + reg.l2[j]),
                        box.lower[j], box.upper[j]);
}

inline Vector primal_prox_step(std::span<const double> x, std::span<const double> grad,
                               double eta, const Regularizer& reg, const BoxDomain& box) {
  Vector out(x.size());
  primal_prox_step(x, grad, eta, reg, box, out);
  return out;
}

// ---------------------------------------------------------------------------
// Initialization shared with the u-based baselines

/// y0 = 0 when 0 is in the dual domain, else the lower endpoint.
inline double initial_dual(const OuterFunction& f) {
  const Interval dom = dual_domain(f);
  return dom.contains(0.0) ? 0.0 : dom.lo;
}

/// u0 with grad f(u0) = y0 when grad f* is available at y0, else 0.
inline double initial_u(const OuterFunction& f) {
  return conjugate_gradient(f, initial_dual(f)).value_or(0.0);
}

// ---------------------------------------------------------------------------
// State and step

struct AlexrState {
  Vector x;
  Vector x_prev;
  BlockDualState dual;
  std::size_t t = 0;
  Rng rng;
  OuterSampler sampler{1};
  Vector x_sum;  // sum_{s<t} x_s
  std::uint64_t oracle_count = 0;
};

struct AlexrWorkspace {
  std::vector<std::uint32_t> blocks;
  Batch batch;
  Batch batch_tilde;
  Vector grad;
  Vector next;
};

inline AlexrState initial_alexr_state(const ProblemInstance& p, const AlexrConfig& cfg) {
  AlexrState s;
  s.x = project_box(cfg.x0.empty() ? Vector(p.dim(), 0.0) : cfg.x0, p.domain);
  s.x_prev = s.x;
  s.x_sum.assign(p.dim(), 0.0);
  s.rng.seed(cfg.seed);
  s.sampler = OuterSampler(p.n());
  s.dual.blocks.resize(p.n());
  const bool u_based = cfg.psi_mode == PsiMode::conjugate;
  s.dual.representation =
      u_based ? DualRepresentation::u_sequence : DualRepresentation::explicit_dual;
  for (std::size_t i = 0; i < p.n(); ++i)
    s.dual.blocks[i] = u_based ? initial_u(p.outers[i]) : initial_dual(p.outers[i]);
  return s;
}

inline void alexr_step(AlexrState& s, const AlexrConfig& cfg, const ProblemInstance& p,
                       AlexrWorkspace& ws) {
  ws.grad.assign(p.dim(), 0.0);
  ws.next.resize(p.dim());
  s.sampler.sample(s.rng, cfg.S, ws.blocks);
  const double inv_s = 1.0 / static_cast<double>(cfg.S);

  for (const std::uint32_t i : ws.blocks) {
    const InnerOracle& g = *p.inners[i];
    const OuterFunction& f = p.outers[i];
    g.sample_batch(s.rng, cfg.B, ws.batch);
    g.sample_batch(s.rng, cfg.B, ws.batch_tilde);

    const double g_now = g.value(s.x, ws.batch);
    double g_tilde = g_now;
    if (cfg.theta != 0.0) g_tilde += cfg.theta * (g_now - g.value(s.x_prev, ws.batch));

    double& block = s.dual.blocks[i];
    double y_next = 0.0;
    switch (cfg.psi_mode) {
      case PsiMode::quadratic:
        y_next = block = dual_update_quadratic(f, block, g_tilde, cfg.tau);
        break;
      case PsiMode::conjugate: {
        const auto upd = dual_update_conjugate(f, block, g_tilde, cfg.tau);
        block = upd.u;
        y_next = upd.y;
        break;
      }
      case PsiMode::conjugate_explicit:
        y_next = block = dual_update_conjugate_explicit(f, block, g_tilde, cfg.tau);
        break;
    }
    g.add_jtvp(s.x, ws.batch_tilde, y_next * inv_s, ws.grad);
  }
  s.oracle_count += 2 * cfg.S * cfg.B;

  for (std::size_t j = 0; j < s.x.size(); ++j) s.x_sum[j] += s.x[j];
  primal_prox_step(s.x, ws.grad, cfg.eta, p.regularizer, p.domain, ws.next);
  s.x_prev.swap(s.x);
  s.x.swap(ws.next);
  ++s.t;
}

/// Value-returning form of one iteration.
inline AlexrState alexr_step(AlexrState s, const AlexrConfig& cfg,
                             const ProblemInstance& p) {
  AlexrWorkspace ws;
  alexr_step(s, cfg, p, ws);
  return s;
}

/// Explicit dual table y (converts a u-sequence through grad f).
inline Vector explicit_duals(const ProblemInstance& p, const BlockDualState& dual) {
  if (dual.representation == DualRepresentation::explicit_dual) return dual.blocks;
  Vector y(dual.blocks.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = primal_map(p.outers[i], dual.blocks[i]);
  return y;
}

inline Vector uniform_average(const Vector& x_sum, const Vector& x_now, std::size_t t) {
  if (t == 0) return x_now;
  Vector avg(x_sum.size());
  for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = x_sum[j] / static_cast<double>(t);
  return avg;
}

/// Stateful driver around alexr_step.
class Alexr {
 public:
  Alexr(const ProblemInstance& problem, AlexrConfig cfg)
      : problem_(&problem), cfg_(cfg) {
    problem.validate();
    cfg_.validate(problem);
    state_ = initial_alexr_state(problem, cfg_);
  }

  void step() { alexr_step(state_, cfg_, *problem_, ws_); }

  const AlexrState& state() const { return state_; }
  const AlexrConfig& config() const { return cfg_; }
  std::size_t iteration() const { return state_.t; }
  std::uint64_t oracle_count() const { return state_.oracle_count; }
  const Vector& iterate() const { return state_.x; }
  Vector average() const { return uniform_average(state_.x_sum, state_.x, state_.t); }
  Vector output() const {
    return cfg_.averaging == Averaging::last ? state_.x : average();
  }
  Vector duals() const { return explicit_duals(*problem_, state_.dual); }

  double dual_norm() const {
    double s = 0.0;
    for (double v : duals()) s += v * v;
    return std::sqrt(s);
  }

 private:
  const ProblemInstance* problem_;
  AlexrConfig cfg_;
  AlexrState state_;
  AlexrWorkspace ws_;
};

}  // namespace alexr
