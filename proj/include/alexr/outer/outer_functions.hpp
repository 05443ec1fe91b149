#pragma once

// Outer functions f_i of the compositional objective, each with its convex
// conjugate, dual domain and closed-form dual proximal step. All shipped
// functions are scalar (m = 1).
//
// Functions whose natural dual domain is unbounded (ChiSquareOuter,
// HalfSquareShift) carry a cap on the dual domain. Their value() is then the
// biconjugate of the capped conjugate: the exact formula wherever the
// derivative stays below the cap, continued linearly beyond it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <type_traits>
#include <variant>

#include "alexr/error.hpp"

namespace alexr {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
  double clamp(double v) const { return std::clamp(v, lo, hi); }
  bool operator==(const Interval&) const = default;
};

/// f(u) = scale * (u)_+. CVaR outer with scale = 1/alpha.
struct ScaledPositivePart {
  double scale = 1.0;

  static ScaledPositivePart cvar(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw InvalidArgument("ScaledPositivePart: alpha must lie in (0,1)");
    return {1.0 / alpha};
  }

  static constexpr std::string_view name = "scaled_positive_part";
  static constexpr bool smooth = false;
  static constexpr bool legendre = false;
  static constexpr bool monotone = true;

  double value(double u) const { return scale * std::max(u, 0.0); }
  double subgradient(double u) const {
    if (u > 0.0) return scale;
    if (u < 0.0) return 0.0;
    return 0.5 * scale;
  }
  Interval dual_domain() const { return {0.0, scale}; }
  double conjugate(double y) const {
    return dual_domain().contains(y) ? 0.0 : kInfinity;
  }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp(y + g / tau);
  }
  double lipschitz() const { return scale; }
  std::optional<double> smoothness() const { return std::nullopt; }
};

/// f(u) = (u)_+, the pAUC outer function.
struct PositivePart {
  static constexpr std::string_view name = "positive_part";
  static constexpr bool smooth = false;
  static constexpr bool legendre = false;
  static constexpr bool monotone = true;

  double value(double u) const { return std::max(u, 0.0); }
  double subgradient(double u) const {
    if (u > 0.0) return 1.0;
    if (u < 0.0) return 0.0;
    return 0.5;
  }
  Interval dual_domain() const { return {0.0, 1.0}; }
  double conjugate(double y) const {
    return dual_domain().contains(y) ? 0.0 : kInfinity;
  }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp(y + g / tau);
  }
  double lipschitz() const { return 1.0; }
  std::optional<double> smoothness() const { return std::nullopt; }
};

/// f(u) = lambda * (1/4 (u+2)_+^2 - 1), the chi-square divergence outer, with
/// dual domain [0, cap].
///
/// Conjugate (derived directly): f*(y) = y^2/lambda - 2y + lambda for y >= 0.
struct ChiSquareOuter {
  double lambda = 1.0;
  double cap = 10.0;

  static constexpr std::string_view name = "chi_square";
  static constexpr bool smooth = true;
  static constexpr bool legendre = false;
  static constexpr bool monotone = true;

  // Input at which the derivative reaches the cap.
  double kink() const { return 2.0 * cap / lambda - 2.0; }

  double value(double u) const {
    const double uc = kink();
    if (u > uc) return value(uc) + cap * (u - uc);
    const double p = std::max(u + 2.0, 0.0);
    return lambda * (0.25 * p * p - 1.0);
  }
  double gradient(double u) const {
    return std::min(0.5 * lambda * std::max(u + 2.0, 0.0), cap);
  }
  double subgradient(double u) const { return gradient(u); }
  Interval dual_domain() const { return {0.0, cap}; }
  double conjugate(double y) const {
    if (!dual_domain().contains(y)) return kInfinity;
    return y * y / lambda - 2.0 * y + lambda;
  }
  double conjugate_gradient(double y) const { return 2.0 * y / lambda - 2.0; }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp((g + 2.0 + tau * y) / (2.0 / lambda + tau));
  }
  double lipschitz() const { return cap; }
  std::optional<double> smoothness() const { return 0.5 * lambda; }
};

/// Three-branch smooth function of the lower-bound construction:
/// quadratic 1/2 (u+nu)^2 - nu^2/2 on [-1, 1], linear outside.
/// f*(y) = 1/2 (y - nu)^2 on [nu-1, nu+1].
struct HuberHard {
  double nu = 0.3;

  static constexpr std::string_view name = "huber_hard";
  static constexpr bool smooth = true;
  static constexpr bool legendre = false;
  static constexpr bool monotone = false;

  double value(double u) const {
    const double half_nu_sq = 0.5 * nu * nu;
    if (u < -1.0) {
      const double s = nu - 1.0;
      return s * u + 0.5 * s * s + s - half_nu_sq;
    }
    if (u > 1.0) {
      const double s = 1.0 + nu;
      return s * u + 0.5 * s * s - s - half_nu_sq;
    }
    return 0.5 * (u + nu) * (u + nu) - half_nu_sq;
  }
  double gradient(double u) const { return std::clamp(u, -1.0, 1.0) + nu; }
  double subgradient(double u) const { return gradient(u); }
  Interval dual_domain() const { return {nu - 1.0, nu + 1.0}; }
  double conjugate(double y) const {
    if (!dual_domain().contains(y)) return kInfinity;
    return 0.5 * (y - nu) * (y - nu);
  }
  double conjugate_gradient(double y) const { return y - nu; }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp((g + nu + tau * y) / (1.0 + tau));
  }
  double lipschitz() const { return 1.0 + std::abs(nu); }
  std::optional<double> smoothness() const { return 1.0; }
};

/// f(u) = beta * max{u, -nu} = max_{y in [0, beta]} { y u - nu (beta - y) }.
struct HingeHard {
  double beta = 1.0;
  double nu = 0.2;

  static constexpr std::string_view name = "hinge_hard";
  static constexpr bool smooth = false;
  static constexpr bool legendre = false;
  static constexpr bool monotone = true;

  double value(double u) const { return beta * std::max(u, -nu); }
  double subgradient(double u) const {
    if (u > -nu) return beta;
    if (u < -nu) return 0.0;
    return 0.5 * beta;
  }
  Interval dual_domain() const { return {0.0, beta}; }
  double conjugate(double y) const {
    return dual_domain().contains(y) ? nu * (beta - y) : kInfinity;
  }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp(y + (g + nu) / tau);
  }
  double lipschitz() const { return beta; }
  std::optional<double> smoothness() const { return std::nullopt; }
};

/// f(u) = u.
struct Identity {
  static constexpr std::string_view name = "identity";
  static constexpr bool smooth = true;
  static constexpr bool legendre = false;
  static constexpr bool monotone = true;

  double value(double u) const { return u; }
  double gradient(double) const { return 1.0; }
  double subgradient(double) const { return 1.0; }
  Interval dual_domain() const { return {1.0, 1.0}; }
  double conjugate(double y) const { return y == 1.0 ? 0.0 : kInfinity; }
  double prox_dual(double, double, double) const { return 1.0; }
  double lipschitz() const { return 1.0; }
  std::optional<double> smoothness() const { return 0.0; }
};

/// f(u) = 1/2 (u + shift)^2 with dual domain [-radius, radius].
/// f*(y) = 1/2 y^2 - shift * y.
struct HalfSquareShift {
  double shift = 0.0;
  double radius = 10.0;

  static constexpr std::string_view name = "half_square_shift";
  static constexpr bool smooth = true;
  static constexpr bool legendre = true;
  static constexpr bool monotone = false;

  double value(double u) const {
    const double z = u + shift;
    if (std::abs(z) <= radius) return 0.5 * z * z;
    return radius * std::abs(z) - 0.5 * radius * radius;
  }
  double gradient(double u) const {
    return std::clamp(u + shift, -radius, radius);
  }
  double subgradient(double u) const { return gradient(u); }
  Interval dual_domain() const { return {-radius, radius}; }
  double conjugate(double y) const {
    if (!dual_domain().contains(y)) return kInfinity;
    return 0.5 * y * y - shift * y;
  }
  double conjugate_gradient(double y) const { return y - shift; }
  double prox_dual(double y, double g, double tau) const {
    return dual_domain().clamp((g + shift + tau * y) / (1.0 + tau));
  }
  double lipschitz() const { return radius; }
  std::optional<double> smoothness() const { return 1.0; }
};

using OuterFunction =
    std::variant<ScaledPositivePart, PositivePart, ChiSquareOuter, HuberHard,
                 HingeHard, Identity, HalfSquareShift>;

namespace detail {
template <typename F>
concept HasGradient = requires(const F& f, double u) {
  { f.gradient(u) } -> std::convertible_to<double>;
};
template <typename F>
concept HasConjugateGradient = requires(const F& f, double y) {
  { f.conjugate_gradient(y) } -> std::convertible_to<double>;
};
}  // namespace detail

inline double value(const OuterFunction& f, double u) {
  return std::visit([u](const auto& g) { return g.value(u); }, f);
}

/// An element of the subdifferential; midpoint of the interval at kinks.
inline double subgradient(const OuterFunction& f, double u) {
  return std::visit([u](const auto& g) { return g.subgradient(u); }, f);
}

/// f*(y); +infinity outside the dual domain.
inline double conjugate_value(const OuterFunction& f, double y) {
  return std::visit([y](const auto& g) { return g.conjugate(y); }, f);
}

inline Interval dual_domain(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.dual_domain(); }, f);
}

/// argmax_{v in dom} { v*g - f*(v) - tau/2 (v - y_prev)^2 }.
inline double prox_dual_quadratic(const OuterFunction& f, double y_prev,
                                  double g_tilde, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("prox_dual_quadratic: tau must be > 0");
  return std::visit(
      [&](const auto& h) { return h.prox_dual(y_prev, g_tilde, tau); }, f);
}

inline bool is_smooth(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.smooth; }, f);
}

inline bool is_legendre(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.legendre; }, f);
}

inline bool is_monotone_nondecreasing(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.monotone; }, f);
}

inline double lipschitz_constant(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.lipschitz(); }, f);
}

inline std::optional<double> smoothness_constant(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.smoothness(); }, f);
}

inline std::string_view outer_name(const OuterFunction& f) {
  return std::visit([](const auto& g) { return g.name; }, f);
}

/// grad f(u); the dual iterate under the psi = f* representation.
inline double primal_map(const OuterFunction& f, double u) {
  return std::visit(
      [u](const auto& g) -> double {
        if constexpr (detail::HasGradient<std::decay_t<decltype(g)>>) {
          return g.gradient(u);
        } else {
          throw Unsupported(std::string("primal_map: outer function '") +
                            std::string(g.name) + "' is not smooth");
        }
      },
      f);
}

/// grad f*(y) where f* is differentiable on the dual domain.
inline std::optional<double> conjugate_gradient(const OuterFunction& f,
                                                double y) {
  return std::visit(
      [y](const auto& g) -> std::optional<double> {
        if constexpr (detail::HasConjugateGradient<std::decay_t<decltype(g)>>) {
          return g.conjugate_gradient(y);
        } else {
          return std::nullopt;
        }
      },
      f);
}

/// Brute-force maximizer of the quadratic dual prox objective over a uniform
/// grid of the dual domain. Test oracle; independent of prox_dual_quadratic.
inline double grid_prox_oracle(const OuterFunction& f, double y_prev,
                               double g_tilde, double tau,
                               std::size_t grid_size) {
  if (grid_size < 100)
    throw InvalidArgument("grid_prox_oracle: grid_size must be >= 100");
  const Interval dom = dual_domain(f);
  if (dom.width() == 0.0) return dom.lo;
  double best_v = dom.lo;
  double best = -kInfinity;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double v =
        dom.lo + dom.width() * static_cast<double>(k) /
                     static_cast<double>(grid_size - 1);
    const double obj = v * g_tilde - conjugate_value(f, v) -
                       0.5 * tau * (v - y_prev) * (v - y_prev);
    if (obj > best) {
      best = obj;
      best_v = v;
    }
  }
  return best_v;
}

}  // namespace alexr
