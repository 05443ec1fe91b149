#pragma once

// Deterministic affine inner function g(x) = <a, x> + b. Handy for small
// hand-built problems; the "batch" carries no randomness.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>

#include "alexr/core/problem.hpp"

namespace alexr {

class AffineInner final : public InnerOracle {
 public:
  AffineInner(Vector a, double b) : a_(std::move(a)), b_(b) {}

  std::size_t dim() const override { return a_.size(); }
  bool is_affine() const override { return true; }
  bool is_smooth() const override { return true; }

  void sample_batch(Rng&, std::size_t size, Batch& out) const override {
    out.assign(size, 0u);
  }
  double value(std::span<const double> x, const Batch&) const override {
    return exact_value(x);
  }
  void add_jtvp(std::span<const double>, const Batch&, double weight,
                std::span<double> out) const override {
    for (std::size_t j = 0; j < a_.size(); ++j) out[j] += weight * a_[j];
  }
  bool has_exact_value() const override { return true; }
  double exact_value(std::span<const double> x) const override {
    double s = b_;
    for (std::size_t j = 0; j < a_.size(); ++j) s += a_[j] * x[j];
    return s;
  }
  std::optional<Batch> full_population() const override { return Batch{0u}; }

 private:
  Vector a_;
  double b_;
};

inline std::shared_ptr<const InnerOracle> affine_inner(Vector a, double b) {
  return std::make_shared<AffineInner>(std::move(a), b);
}

}  // namespace alexr
