#pragma once

// Synthetic data generators for the grouped-risk and partial-AUC problems.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include "alexr/instances/gdro.hpp"
#include "alexr/instances/pauc.hpp"

namespace alexr {

struct SyntheticGdroParams {
  std::size_t n_groups = 20;
  std::size_t d = 10;
  std::size_t samples_per_group = 200;
  /// Spread of the per-group separating directions around a shared one;
  /// 0 gives identical hyperplanes, 1 rotates by up to 90 degrees.
  double heterogeneity = 0.5;
  /// Scale of the per-group cluster centres.
  double center_spread = 1.0;
  /// Slope of the logistic label model.
  double signal = 4.0;
  double flip_prob = 0.05;
};

namespace detail {
inline void normalize(Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  if (s > 0.0)
    for (double& x : v) x /= s;
}

inline Vector gaussian_vector(Rng& rng, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (double& x : v) x = normal(rng);
  return v;
}
}  // namespace detail

inline GroupedDataset build_synthetic_gdro(const SyntheticGdroParams& prm, Rng& rng) {
  if (prm.n_groups < 1 || prm.d < 1 || prm.samples_per_group < 1)
    throw InvalidArgument("synthetic gdro: sizes must be positive");
  if (!(prm.heterogeneity >= 0.0)) throw InvalidArgument("synthetic gdro: heterogeneity < 0");
  if (!(prm.flip_prob >= 0.0 && prm.flip_prob < 0.5))
    throw InvalidArgument("synthetic gdro: flip_prob must lie in [0, 0.5)");

  const std::size_t d = prm.d;
  Vector base = detail::gaussian_vector(rng, d);
  detail::normalize(base);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GroupedDataset data;
  data.d = d;
  const std::size_t total = prm.n_groups * prm.samples_per_group;
  data.features.reserve(total * d);
  data.labels.reserve(total);
  data.group_of.reserve(total);

  for (std::size_t g = 0; g < prm.n_groups; ++g) {
    // Rotate the shared direction towards a random orthogonal one.
    Vector ortho = detail::gaussian_vector(rng, d);
    double proj = 0.0;
    for (std::size_t j = 0; j < d; ++j) proj += ortho[j] * base[j];
    for (std::size_t j = 0; j < d; ++j) ortho[j] -= proj * base[j];
    detail::normalize(ortho);
    const double angle = prm.heterogeneity * (std::numbers::pi / 2.0) * (2.0 * unit(rng) - 1.0);
    Vector dir(d);
    for (std::size_t j = 0; j < d; ++j)
      dir[j] = std::cos(angle) * base[j] + std::sin(angle) * ortho[j];

    Vector center = detail::gaussian_vector(rng, d);
    for (double& c : center) c *= prm.center_spread;

    for (std::size_t k = 0; k < prm.samples_per_group; ++k) {
      double margin = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double a = center[j] + normal(rng);
        data.features.push_back(a);
        margin += dir[j] * a;
      }
      const double p_pos = 1.0 / (1.0 + std::exp(-prm.signal * margin));
      double b = unit(rng) < p_pos ? 1.0 : -1.0;
      if (unit(rng) < prm.flip_prob) b = -b;
      data.labels.push_back(b);
      data.group_of.push_back(static_cast<std::uint32_t>(g));
    }
  }
  data.rebuild_index(prm.n_groups);
  data.validate();
  return data;
}

inline GroupedDataset build_synthetic_gdro(std::size_t n_groups, std::size_t d,
                                           std::size_t samples_per_group, double heterogeneity,
                                           Rng& rng) {
  SyntheticGdroParams prm;
  prm.n_groups = n_groups;
  prm.d = d;
  prm.samples_per_group = samples_per_group;
  prm.heterogeneity = heterogeneity;
  return build_synthetic_gdro(prm, rng);
}

struct SyntheticPaucParams {
  std::size_t n_pos = 100;
  std::size_t n_neg = 400;
  std::size_t d = 5;
  /// Distance between the class means.
  double separation = 1.5;
  double alpha = 0.5;
};

/// Two Gaussian classes with identity covariance.
inline PaucDataset build_synthetic_pauc(const SyntheticPaucParams& prm, Rng& rng) {
  if (prm.n_pos < 1 || prm.n_neg < 1 || prm.d < 1)
    throw InvalidArgument("synthetic pauc: sizes must be positive");
  Vector dir = detail::gaussian_vector(rng, prm.d);
  detail::normalize(dir);
  std::normal_distribution<double> normal(0.0, 1.0);
  PaucDataset data;
  data.d = prm.d;
  data.alpha = prm.alpha;
  data.positives.reserve(prm.n_pos * prm.d);
  data.negatives.reserve(prm.n_neg * prm.d);
  for (std::size_t i = 0; i < prm.n_pos; ++i)
    for (std::size_t j = 0; j < prm.d; ++j)
      data.positives.push_back(prm.separation * dir[j] + normal(rng));
  for (std::size_t i = 0; i < prm.n_neg; ++i)
    for (std::size_t j = 0; j < prm.d; ++j) data.negatives.push_back(normal(rng));
  data.validate();
  return data;
}

}  // namespace alexr
