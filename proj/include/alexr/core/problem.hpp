#pragma once

// Problem abstraction for regularized finite-sum coupled compositional
// optimization:
//
//   min_{x in X}  F(x) = (1/n) sum_i f_i(g_i(x)) + r(x),
//
// and its block min-max counterpart
//
//   L(x, y) = (1/n) sum_i [ g_i(x) y_i - f_i*(y_i) ] + r(x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "alexr/error.hpp"
#include "alexr/outer/outer_functions.hpp"

namespace alexr {

using Vector = std::vector<double>;
using Rng = std::mt19937_64;

/// Draw identifiers of an inner mini-batch. Their meaning (sample index,
/// noise atom, ...) is private to the oracle that produced them.
using Batch = std::vector<std::uint32_t>;

// ---------------------------------------------------------------------------
// Box domain

struct BoxDomain {
  Vector lower;
  Vector upper;

  static BoxDomain unbounded(std::size_t d) {
    return {Vector(d, -kInfinity), Vector(d, kInfinity)};
  }
  static BoxDomain cube(std::size_t d, double lo, double hi) {
    return {Vector(d, lo), Vector(d, hi)};
  }

  std::size_t dim() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size())
      throw InvalidArgument("BoxDomain: bound vectors differ in length");
    for (std::size_t j = 0; j < lower.size(); ++j)
      if (!(lower[j] <= upper[j]))
        throw InvalidArgument("BoxDomain: empty interval at coordinate " +
                              std::to_string(j));
  }

  bool contains(std::span<const double> x, double tol = 1e-12) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
    return true;
  }
};

/// Coordinate-wise clamp onto the box.
inline Vector project_box(std::span<const double> x, const BoxDomain& box) {
  if (x.size() != box.dim())
    throw InvalidArgument("project_box: dimension mismatch");
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = std::clamp(x[j], box.lower[j], box.upper[j]);
  return out;
}

// ---------------------------------------------------------------------------
// Regularizer: r(x) = sum_j (l2_j / 2) x_j^2 + linear_j x_j on the box.

struct Regularizer {
  Vector l2;
  Vector linear;

  static Regularizer zero(std::size_t d) { return {Vector(d, 0.0), Vector(d, 0.0)}; }
  static Regularizer ridge(std::size_t d, double coeff) {
    return {Vector(d, coeff), Vector(d, 0.0)};
  }

  std::size_t dim() const { return l2.size(); }

  /// Strong-convexity modulus on the whole space.
  double mu() const {
    if (l2.empty()) return 0.0;
    return *std::min_element(l2.begin(), l2.end());
  }

  double value(std::span<const double> x) const {
    double r = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      r += 0.5 * l2[j] * x[j] * x[j] + linear[j] * x[j];
    return r;
  }

  /// argmin_{z in box} scale * r(z) + 1/2 ||z - v||^2.
  Vector prox(std::span<const double> v, double scale, const BoxDomain& box) const {
    Vector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j)
      out[j] = std::clamp((v[j] - scale * linear[j]) / (1.0 + scale * l2[j]),
                          box.lower[j], box.upper[j]);
    return out;
  }

  void validate() const {
    if (l2.size() != linear.size())
      throw InvalidArgument("Regularizer: l2 and linear differ in length");
    for (double c : l2)
      if (!(c >= 0.0)) throw InvalidArgument("Regularizer: negative l2 weight");
  }
};

// ---------------------------------------------------------------------------
// Inner oracles

/// Stochastic oracle for a scalar inner function g_i(x) = E[g_i(x; zeta)].
class InnerOracle {
 public:
  virtual ~InnerOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual bool is_affine() const = 0;
  virtual bool is_smooth() const = 0;

  /// Appends nothing; overwrites `out` with B i.i.d. draws.
  virtual void sample_batch(Rng& rng, std::size_t size, Batch& out) const = 0;

  /// g_i(x; B), the mini-batch mean.
  virtual double value(std::span<const double> x, const Batch& batch) const = 0;

  /// out += weight * [g_i'(x; B)]^T.
  virtual void add_jtvp(std::span<const double> x, const Batch& batch,
                        double weight, std::span<double> out) const = 0;

  virtual bool has_exact_value() const { return false; }
  virtual double exact_value(std::span<const double>) const {
    throw Unsupported("inner oracle has no exact evaluation");
  }

  /// The whole population for finite-sum oracles.
  virtual std::optional<Batch> full_population() const { return std::nullopt; }

  Batch sample_batch(Rng& rng, std::size_t size) const {
    Batch b;
    sample_batch(rng, size, b);
    return b;
  }

  Vector stochastic_jtvp(std::span<const double> x, const Batch& batch,
                         double y) const {
    Vector out(dim(), 0.0);
    add_jtvp(x, batch, y, out);
    return out;
  }
};

/// Flat per-sample loss view used by the ERM / up-weighted SGD baselines.
class FlatSampleView {
 public:
  virtual ~FlatSampleView() = default;

  virtual std::size_t n_samples() const = 0;
  virtual std::size_t n_groups() const = 0;
  virtual const std::vector<std::uint32_t>& group_members(std::size_t g) const = 0;
  virtual double loss(std::span<const double> x, std::size_t sample) const = 0;
  virtual void add_gradient(std::span<const double> x, std::size_t sample,
                            double weight, std::span<double> out) const = 0;
};

// ---------------------------------------------------------------------------
// Problem instance

/// Advisory problem constants; not enforced at runtime.
struct ProblemConstants {
  double c_f = 0.0;
  double c_g = 0.0;
  std::optional<double> l_f;
  std::optional<double> l_g;
  std::optional<double> sigma0_sq;
  std::optional<double> sigma1_sq;
  std::optional<double> delta_sq;
};

struct ProblemInstance {
  std::vector<OuterFunction> outers;
  std::vector<std::shared_ptr<const InnerOracle>> inners;
  Regularizer regularizer;
  BoxDomain domain;
  ProblemConstants constants;
  std::shared_ptr<const FlatSampleView> flat_view;
  std::string label;

  std::size_t n() const { return outers.size(); }
  std::size_t dim() const { return domain.dim(); }

  bool exact_evaluable() const {
    return std::all_of(inners.begin(), inners.end(),
                       [](const auto& g) { return g && g->has_exact_value(); });
  }

  /// Structural invariants; throws InvalidArgument.
  void validate() const {
    if (outers.empty()) throw InvalidArgument("problem: n must be >= 1");
    if (inners.size() != outers.size())
      throw InvalidArgument("problem: outers and inners differ in length");
    domain.validate();
    regularizer.validate();
    if (regularizer.dim() != domain.dim())
      throw InvalidArgument("problem: regularizer dimension differs from domain");
    for (std::size_t i = 0; i < inners.size(); ++i) {
      if (!inners[i]) throw InvalidArgument("problem: null inner oracle");
      if (inners[i]->dim() != domain.dim())
        throw InvalidArgument("problem: inner oracle " + std::to_string(i) +
                              " has wrong dimension");
      if (!inners[i]->is_affine() && dual_domain(outers[i]).lo < 0.0)
        throw InvalidArgument(
            "problem: component " + std::to_string(i) +
            " pairs a nonlinear inner function with a non-monotone outer");
    }
  }
};

/// Advisory diagnostics: everything suspicious that validate() tolerates.
inline std::vector<std::string> diagnose(const ProblemInstance& p) {
  std::vector<std::string> notes;
  double cf = 0.0;
  for (const auto& f : p.outers) cf = std::max(cf, lipschitz_constant(f));
  if (p.constants.c_f > 0.0 && cf > p.constants.c_f * (1.0 + 1e-12))
    notes.push_back("declared C_f is below the largest outer Lipschitz constant");
  if (!p.exact_evaluable())
    notes.push_back("some inner oracles lack exact evaluation; objective curves unavailable");
  if (p.regularizer.mu() == 0.0)
    notes.push_back("regularizer is not strongly convex (mu = 0)");
  return notes;
}

// ---------------------------------------------------------------------------
// Dual state

enum class DualRepresentation { explicit_dual, u_sequence };

struct BlockDualState {
  Vector blocks;
  DualRepresentation representation = DualRepresentation::explicit_dual;
};

// ---------------------------------------------------------------------------
// Exact evaluation

inline void require_feasible(const ProblemInstance& p, std::span<const double> x) {
  if (x.size() != p.dim())
    throw InvalidArgument("point has dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(p.dim()));
  if (!p.domain.contains(x)) throw DomainViolation("point lies outside the box domain");
}

/// F(x) = (1/n) sum f_i(g_i(x)) + r(x) with exact inner values.
inline double evaluate_objective(const ProblemInstance& p, std::span<const double> x) {
  require_feasible(p, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (!p.inners[i]->has_exact_value())
      throw Unsupported("evaluate_objective: inner oracle " + std::to_string(i) +
                        " has no exact evaluation");
    sum += value(p.outers[i], p.inners[i]->exact_value(x));
  }
  return sum / static_cast<double>(p.n()) + p.regularizer.value(x);
}

/// L(x, y) for an explicit dual table.
inline double evaluate_saddle(const ProblemInstance& p, std::span<const double> x,
                              const BlockDualState& y) {
  if (y.representation != DualRepresentation::explicit_dual)
    throw InvalidArgument("evaluate_saddle: dual state is a u-sequence");
  if (y.blocks.size() != p.n())
    throw InvalidArgument("evaluate_saddle: dual table has wrong length");
  require_feasible(p, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (!p.inners[i]->has_exact_value())
      throw Unsupported("evaluate_saddle: inner oracle has no exact evaluation");
    sum += p.inners[i]->exact_value(x) * y.blocks[i] -
           conjugate_value(p.outers[i], y.blocks[i]);
  }
  return sum / static_cast<double>(p.n()) + p.regularizer.value(x);
}

// ---------------------------------------------------------------------------
// Outer batch sampling (uniform without replacement)

/// Persistent partial Fisher-Yates sampler over {0, ..., n-1}.
class OuterSampler {
 public:
  explicit OuterSampler(std::size_t n) : perm_(n) {
    std::iota(perm_.begin(), perm_.end(), std::uint32_t{0});
  }

  void sample(Rng& rng, std::size_t size, std::vector<std::uint32_t>& out) {
    const std::size_t n = perm_.size();
    if (size < 1 || size > n)
      throw InvalidArgument("invalid outer batch size " + std::to_string(size) +
                            " for n = " + std::to_string(n));
    out.resize(size);
    for (std::size_t k = 0; k < size; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(perm_[k], perm_[pick(rng)]);
      out[k] = perm_[k];
    }
  }

 private:
  std::vector<std::uint32_t> perm_;
};

inline std::vector<std::uint32_t> sample_outer_batch(Rng& rng, std::size_t n,
                                                     std::size_t size) {
  OuterSampler sampler(n);
  std::vector<std::uint32_t> out;
  sampler.sample(rng, size, out);
  return out;
}

}  // namespace alexr
