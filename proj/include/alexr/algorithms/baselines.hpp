#pragma once

// Baseline solvers over the same problem abstraction: BSGD (plug-in
// estimator), SOX without momentum (moving-average inner tracking), MSVR
// (moving average plus scaled correction), and plain / up-weighted SGD on a
// flat per-sample view.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "alexr/algorithms/alexr.hpp"

namespace alexr {

enum class BaselineVariant { bsgd, sox, msvr, sgd_erm, sgd_uw };

inline std::string to_string(BaselineVariant v) {
  switch (v) {
    case BaselineVariant::bsgd: return "bsgd";
    case BaselineVariant::sox: return "sox";
    case BaselineVariant::msvr: return "msvr";
    case BaselineVariant::sgd_erm: return "sgd_erm";
    case BaselineVariant::sgd_uw: return "sgd_uw";
  }
  return "?";
}

struct BaselineConfig {
  BaselineVariant variant = BaselineVariant::bsgd;
  double step = 0.1;   // primal step; the prox weight is 1/step
  double gamma = 1.0;  // moving-average weight for sox / msvr
  std::size_t S = 1;
  std::size_t B = 1;
  std::size_t T = 0;
  std::uint64_t seed = 1;
  Averaging averaging = Averaging::last;
  // sox: use a subgradient of a non-smooth outer instead of failing.
  bool allow_subgradient = false;
  Vector x0;

  void validate(const ProblemInstance& p) const {
    if (!x0.empty() && x0.size() != p.dim())
      throw InvalidArgument("baseline: x0 has the wrong dimension");
    if (!(step > 0.0)) throw InvalidArgument("baseline: step must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw InvalidArgument("baseline: gamma must lie in (0,1]");
    if (B < 1) throw InvalidArgument("baseline: need B >= 1");
    const bool flat = variant == BaselineVariant::sgd_erm || variant == BaselineVariant::sgd_uw;
    if (flat) {
      if (!p.flat_view)
        throw Unsupported("baseline: " + to_string(variant) +
                          " needs a problem with a flat per-sample view");
      if (S < 1) throw InvalidArgument("baseline: need S >= 1");
      return;
    }
    if (S < 1 || S > p.n()) throw InvalidArgument("baseline: need 1 <= S <= n");
    if (variant == BaselineVariant::msvr && S == p.n() && gamma == 1.0)
      throw InvalidArgument("msvr: correction factor degenerates for S = n and gamma = 1");
    if (variant == BaselineVariant::sox && !allow_subgradient)
      for (const auto& f : p.outers)
        if (!is_smooth(f))
          throw Unsupported("sox: outer function '" + std::string(outer_name(f)) +
                            "' is not smooth");
  }
};

/// Scaling factor of the MSVR correction term: (n - S) / (S (1 - gamma)) + 1 - gamma.
inline double msvr_beta(std::size_t n, std::size_t S, double gamma) {
  const double nd = static_cast<double>(n);
  const double sd = static_cast<double>(S);
  if (n == S) return 1.0 - gamma;
  if (gamma >= 1.0) throw InvalidArgument("msvr_beta: gamma must be < 1 when S < n");
  return (nd - sd) / (sd * (1.0 - gamma)) + 1.0 - gamma;
}

/// Per-sample sampling probability for up-weighted SGD, one entry per group:
/// proportional to 1 / |group|, normalized so all samples sum to one.
inline Vector upweight_sample_probabilities(const std::vector<std::size_t>& group_sizes) {
  Vector probs(group_sizes.size(), 0.0);
  std::size_t nonempty = 0;
  for (std::size_t s : group_sizes) nonempty += s > 0 ? 1 : 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g)
    if (group_sizes[g] > 0)
      probs[g] = 1.0 / (static_cast<double>(group_sizes[g]) * static_cast<double>(nonempty));
  return probs;
}

struct BaselineState {
  Vector x;
  Vector x_prev;
  Vector u;  // inner-value trackers for sox / msvr
  std::size_t t = 0;
  Rng rng;
  OuterSampler sampler{1};
  Vector x_sum;
  std::uint64_t oracle_count = 0;
};

class Baseline {
 public:
  Baseline(const ProblemInstance& problem, BaselineConfig cfg)
      : problem_(&problem), cfg_(cfg) {
    problem.validate();
    cfg_.validate(problem);
    s_.x = project_box(cfg_.x0.empty() ? Vector(problem.dim(), 0.0) : cfg_.x0, problem.domain);
    s_.x_prev = s_.x;
    s_.x_sum.assign(problem.dim(), 0.0);
    s_.rng.seed(cfg_.seed);
    s_.sampler = OuterSampler(problem.n());
    s_.u.resize(problem.n());
    for (std::size_t i = 0; i < problem.n(); ++i) s_.u[i] = initial_u(problem.outers[i]);
    flat_reg_ = problem.regularizer;
    std::fill(flat_reg_.linear.begin(), flat_reg_.linear.end(), 0.0);
    if (cfg_.variant == BaselineVariant::msvr) beta_ = msvr_beta(problem.n(), cfg_.S, cfg_.gamma);
  }

  void step() {
    const ProblemInstance& p = *problem_;
    grad_.assign(p.dim(), 0.0);
    next_.resize(p.dim());
    const Regularizer* reg = &p.regularizer;
    switch (cfg_.variant) {
      case BaselineVariant::sgd_erm:
      case BaselineVariant::sgd_uw:
        flat_gradient();
        reg = &flat_reg_;
        break;
      default:
        compositional_gradient();
        break;
    }
    for (std::size_t j = 0; j < s_.x.size(); ++j) s_.x_sum[j] += s_.x[j];
    primal_prox_step(s_.x, grad_, 1.0 / cfg_.step, *reg, p.domain, next_);
    s_.x_prev.swap(s_.x);
    s_.x.swap(next_);
    ++s_.t;
  }

  const BaselineState& state() const { return s_; }
  const BaselineConfig& config() const { return cfg_; }
  std::size_t iteration() const { return s_.t; }
  std::uint64_t oracle_count() const { return s_.oracle_count; }
  const Vector& iterate() const { return s_.x; }
  Vector average() const { return uniform_average(s_.x_sum, s_.x, s_.t); }
  Vector output() const { return cfg_.averaging == Averaging::last ? s_.x : average(); }
  /// The correction factor used by msvr (0 for other variants).
  double beta() const { return beta_; }

  double dual_norm() const {
    double acc = 0.0;
    for (double v : s_.u) acc += v * v;
    return std::sqrt(acc);
  }

 private:
  double outer_slope(const OuterFunction& f, double u) const {
    if (cfg_.variant == BaselineVariant::sox && !cfg_.allow_subgradient) return primal_map(f, u);
    return subgradient(f, u);
  }

  void compositional_gradient() {
    const ProblemInstance& p = *problem_;
    s_.sampler.sample(s_.rng, cfg_.S, blocks_);
    const double inv_s = 1.0 / static_cast<double>(cfg_.S);
    const double gamma = cfg_.gamma;
    for (const std::uint32_t i : blocks_) {
      const InnerOracle& g = *p.inners[i];
      const OuterFunction& f = p.outers[i];
      g.sample_batch(s_.rng, cfg_.B, batch_);
      g.sample_batch(s_.rng, cfg_.B, batch_tilde_);
      const double g_now = g.value(s_.x, batch_);
      double slope = 0.0;
      switch (cfg_.variant) {
        case BaselineVariant::bsgd:
          slope = subgradient(f, g_now);
          break;
        case BaselineVariant::sox:
          s_.u[i] = (1.0 - gamma) * s_.u[i] + gamma * g_now;
          slope = outer_slope(f, s_.u[i]);
          break;
        case BaselineVariant::msvr: {
          const double g_prev = g.value(s_.x_prev, batch_);
          s_.u[i] = (1.0 - gamma) * s_.u[i] + gamma * g_now + beta_ * (g_now - g_prev);
          slope = outer_slope(f, s_.u[i]);
          break;
        }
        default:
          break;
      }
      g.add_jtvp(s_.x, batch_tilde_, slope * inv_s, grad_);
    }
    s_.oracle_count += 2 * cfg_.S * cfg_.B;
  }

  void flat_gradient() {
    const FlatSampleView& view = *problem_->flat_view;
    const std::size_t count = cfg_.S * cfg_.B;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t sample = 0;
      if (cfg_.variant == BaselineVariant::sgd_erm) {
        std::uniform_int_distribution<std::size_t> pick(0, view.n_samples() - 1);
        sample = pick(s_.rng);
      } else {
        std::size_t group = 0;
        if (view.n_groups() > 1) {
          std::uniform_int_distribution<std::size_t> pick_group(0, view.n_groups() - 1);
          group = pick_group(s_.rng);
        }
        const auto& members = view.group_members(group);
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        sample = members[pick(s_.rng)];
      }
      view.add_gradient(s_.x, sample, w, grad_);
    }
    s_.oracle_count += count;
  }

  const ProblemInstance* problem_;
  BaselineConfig cfg_;
  BaselineState s_;
  Regularizer flat_reg_;
  double beta_ = 0.0;
  std::vector<std::uint32_t> blocks_;
  Batch batch_;
  Batch batch_tilde_;
  Vector grad_;
  Vector next_;
};

}  // namespace alexr
