#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "alexr/core/problem.hpp"

namespace alexr {

/// log(1 + exp(-z)) without overflow.
inline double logistic_of_margin(double z) {
  if (z > 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

/// d/dz log(1 + exp(-z)) = -1 / (1 + exp(z)).
inline double logistic_slope_of_margin(double z) {
  if (z > 0.0) {
    const double e = std::exp(-z);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(z));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

struct LossAndGradient {
  double loss = 0.0;
  Vector grad;
};

/// log(1 + exp(-b <w, a>)) and its gradient in w.
inline LossAndGradient logistic_loss(std::span<const double> w, std::span<const double> a,
                                     double b) {
  if (w.size() != a.size()) throw InvalidArgument("logistic_loss: dimension mismatch");
  const double z = b * dot(w, a);
  LossAndGradient out;
  out.loss = logistic_of_margin(z);
  const double s = b * logistic_slope_of_margin(z);
  out.grad.resize(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out.grad[j] = s * a[j];
  return out;
}

}  // namespace alexr
