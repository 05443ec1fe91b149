#pragma once

// Separable hard instances with two-point noise and analytically known
// optima. Each component reads one coordinate: g_i(x; zeta) = x_i + zeta with
//
//   zeta = -nu            w.p. 1 - p
//   zeta = nu (1 - p) / p w.p. p,        p = nu^2 / sigma^2,
//
// so E[zeta] = 0 and Var[zeta] = sigma^2 (1 - p).

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <string>

#include "alexr/core/problem.hpp"

namespace alexr {

struct TwoPointNoise {
  double nu = 0.3;
  double sigma = 1.0;

  double p() const { return nu * nu / (sigma * sigma); }
  double low() const { return -nu; }
  double high() const { return nu * (1.0 - p()) / p(); }
  double variance() const { return sigma * sigma * (1.0 - p()); }

  void validate() const {
    const double prob = p();
    if (!(nu > 0.0) || !(prob > 0.0 && prob < 1.0))
      throw InvalidArgument("hard noise: need nu > 0 and p = nu^2/sigma^2 in (0,1)");
  }
};

inline double sample_hard_noise(Rng& rng, double nu, double sigma) {
  const TwoPointNoise law{nu, sigma};
  law.validate();
  std::bernoulli_distribution coin(law.p());
  return coin(rng) ? law.high() : law.low();
}

/// g_i(x; zeta) = x_i + zeta. Draws are 0 (low atom) or 1 (high atom).
class HardNoiseOracle final : public InnerOracle {
 public:
  HardNoiseOracle(std::size_t coordinate, std::size_t dim, TwoPointNoise law)
      : coord_(coordinate), dim_(dim), law_(law), coin_p_(law.p()) {}

  std::size_t dim() const override { return dim_; }
  bool is_affine() const override { return true; }
  bool is_smooth() const override { return true; }

  void sample_batch(Rng& rng, std::size_t size, Batch& out) const override {
    std::bernoulli_distribution coin(coin_p_);
    out.resize(size);
    for (auto& b : out) b = coin(rng) ? 1u : 0u;
  }

  double value(std::span<const double> x, const Batch& batch) const override {
    double sum = 0.0;
    for (auto b : batch) sum += b ? law_.high() : law_.low();
    return x[coord_] + sum / static_cast<double>(batch.size());
  }

  void add_jtvp(std::span<const double>, const Batch&, double weight,
                std::span<double> out) const override {
    out[coord_] += weight;
  }

  bool has_exact_value() const override { return true; }
  double exact_value(std::span<const double> x) const override { return x[coord_]; }

 private:
  std::size_t coord_;
  std::size_t dim_;
  TwoPointNoise law_;
  double coin_p_;
};

enum class HardMode { smooth, nonsmooth };

struct HardInstance {
  ProblemInstance problem;
  Vector x_star;
  double f_star = 0.0;
  double nu = 0.0;
  double sigma = 0.0;
  double p = 0.0;
  HardMode mode = HardMode::smooth;
  double beta = 0.0;
  double mu = 0.0;
};

namespace detail {
inline std::vector<std::shared_ptr<const InnerOracle>> hard_inners(std::size_t n,
                                                                   TwoPointNoise law) {
  std::vector<std::shared_ptr<const InnerOracle>> inners;
  inners.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    inners.push_back(std::make_shared<HardNoiseOracle>(i, n, law));
  return inners;
}
}  // namespace detail

/// Huber-variant outer, r(x) = |x|^2 / (4n) on [-1, 1]^n.
/// x_* = -2 nu / 3 per coordinate, F(x_*) = -nu^2 / 3.
inline HardInstance build_hard_smooth(std::size_t n, double nu, double sigma) {
  if (n < 1) throw InvalidArgument("hard smooth: n must be >= 1");
  if (!(nu > 0.0 && nu < 1.0)) throw InvalidArgument("hard smooth: need 0 < nu < 1");
  const TwoPointNoise law{nu, sigma};
  law.validate();

  HardInstance h;
  h.mode = HardMode::smooth;
  h.nu = nu;
  h.sigma = sigma;
  h.p = law.p();
  h.mu = 1.0 / (2.0 * static_cast<double>(n));
  auto& p = h.problem;
  p.outers.assign(n, HuberHard{nu});
  p.inners = detail::hard_inners(n, law);
  p.regularizer = Regularizer::ridge(n, h.mu);
  p.domain = BoxDomain::cube(n, -1.0, 1.0);
  p.constants.c_f = 1.0 + nu;
  p.constants.c_g = 1.0;
  p.constants.l_f = 1.0;
  p.constants.l_g = 0.0;
  p.constants.sigma0_sq = law.variance();
  p.constants.sigma1_sq = 0.0;
  p.label = "hard_smooth";
  h.x_star.assign(n, -2.0 * nu / 3.0);
  h.f_star = -nu * nu / 3.0;
  return h;
}

/// F_i(x) = beta max{x_i, -nu} + (alpha/2) x_i^2 on [-2 nu, 2 nu]^n, i.e.
/// r(x) = alpha |x|^2 / (2n).
inline HardInstance build_hard_nonsmooth(std::size_t n, double nu, double beta,
                                         double alpha_reg, double sigma) {
  if (n < 1) throw InvalidArgument("hard nonsmooth: n must be >= 1");
  if (!(beta > 0.0)) throw InvalidArgument("hard nonsmooth: need beta > 0");
  if (!(alpha_reg >= 0.0)) throw InvalidArgument("hard nonsmooth: need alpha_reg >= 0");
  const TwoPointNoise law{nu, sigma};
  law.validate();

  HardInstance h;
  h.mode = HardMode::nonsmooth;
  h.nu = nu;
  h.sigma = sigma;
  h.p = law.p();
  h.beta = beta;
  h.mu = alpha_reg / static_cast<double>(n);
  auto& p = h.problem;
  p.outers.assign(n, HingeHard{beta, nu});
  p.inners = detail::hard_inners(n, law);
  p.regularizer = Regularizer::ridge(n, h.mu);
  p.domain = BoxDomain::cube(n, -2.0 * nu, 2.0 * nu);
  p.constants.c_f = beta;
  p.constants.c_g = 1.0;
  p.constants.sigma0_sq = law.variance();
  p.label = "hard_nonsmooth";
  const double xs = alpha_reg > beta / nu ? -beta / alpha_reg : -nu;
  h.x_star.assign(n, xs);
  h.f_star = beta * std::max(xs, -nu) + 0.5 * alpha_reg * xs * xs;
  return h;
}

}  // namespace alexr
