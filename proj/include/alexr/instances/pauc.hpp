#pragma once

// One-way partial AUC with a lower bound alpha on the true positive rate.
// Averaging the surrogate pairwise loss over the k = n_+ (1 - alpha) lowest
// scoring positives has the variational form
//
//   min_{w, s}  s + 1/(n_+ (1 - alpha)) sum_i ( L_i(w) - s )_+,
//   L_i(w) = (1/n_-) sum_j l(<w, a_j> - <w, a_i>),
//
// one outer component per positive with f_i = (1/(1 - alpha)) (.)_+.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "alexr/core/problem.hpp"
#include "alexr/instances/logistic.hpp"

namespace alexr {

struct PaucDataset {
  std::size_t d = 0;
  Vector positives;  // row-major, n_pos x d
  Vector negatives;  // row-major, n_neg x d
  double alpha = 0.5;

  std::size_t n_pos() const { return d ? positives.size() / d : 0; }
  std::size_t n_neg() const { return d ? negatives.size() / d : 0; }
  std::span<const double> pos(std::size_t i) const { return {positives.data() + i * d, d}; }
  std::span<const double> neg(std::size_t j) const { return {negatives.data() + j * d, d}; }

  /// Number of positives entering the partial AUC.
  std::size_t k() const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n_pos()) * (1.0 - alpha)));
  }

  void validate() const {
    if (d == 0) throw InvalidArgument("pauc data: feature dimension is 0");
    if (positives.size() % d != 0 || negatives.size() % d != 0)
      throw InvalidArgument("pauc data: ragged feature matrix");
    if (n_neg() == 0) throw InvalidArgument("pauc data: no negatives");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("pauc data: alpha must lie in (0,1)");
    if (k() < 1) throw InvalidArgument("pauc data: n_+ (1 - alpha) < 1 selects no positives");
  }
};

enum class PairSurrogate { squared_hinge, logistic };

inline std::string to_string(PairSurrogate s) {
  return s == PairSurrogate::squared_hinge ? "squared_hinge" : "logistic";
}

/// l(u), convex and non-decreasing; u = score(negative) - score(positive).
inline double pair_surrogate(PairSurrogate s, double u) {
  if (s == PairSurrogate::squared_hinge) {
    const double h = std::max(1.0 + u, 0.0);
    return h * h;
  }
  return logistic_of_margin(-u);
}

inline double pair_surrogate_slope(PairSurrogate s, double u) {
  if (s == PairSurrogate::squared_hinge) return 2.0 * std::max(1.0 + u, 0.0);
  return -logistic_slope_of_margin(-u);
}

/// g_i(w, s) = mean over a negative mini-batch of l(<w,a_j> - <w,a_i>) - s.
class PaucInner final : public InnerOracle {
 public:
  PaucInner(std::shared_ptr<const PaucDataset> data, std::size_t positive,
            PairSurrogate surrogate)
      : data_(std::move(data)), i_(positive), surrogate_(surrogate) {}

  std::size_t dim() const override { return data_->d + 1; }
  bool is_affine() const override { return false; }
  bool is_smooth() const override { return surrogate_ == PairSurrogate::logistic; }

  void sample_batch(Rng& rng, std::size_t size, Batch& out) const override {
    std::uniform_int_distribution<std::size_t> pick(0, data_->n_neg() - 1);
    out.resize(size);
    for (auto& b : out) b = static_cast<std::uint32_t>(pick(rng));
  }

  double value(std::span<const double> x, const Batch& batch) const override {
    const auto w = x.first(data_->d);
    const double si = dot(w, data_->pos(i_));
    double sum = 0.0;
    for (auto j : batch) sum += pair_surrogate(surrogate_, dot(w, data_->neg(j)) - si);
    return sum / static_cast<double>(batch.size()) - x[data_->d];
  }

  void add_jtvp(std::span<const double> x, const Batch& batch, double weight,
                std::span<double> out) const override {
    const std::size_t d = data_->d;
    const auto w = x.first(d);
    const auto ai = data_->pos(i_);
    const double si = dot(w, ai);
    const double per = weight / static_cast<double>(batch.size());
    for (auto j : batch) {
      const auto aj = data_->neg(j);
      const double c = per * pair_surrogate_slope(surrogate_, dot(w, aj) - si);
      for (std::size_t k = 0; k < d; ++k) out[k] += c * (aj[k] - ai[k]);
    }
    out[d] -= weight;
  }

  bool has_exact_value() const override { return true; }
  double exact_value(std::span<const double> x) const override {
    return value(x, *full_population());
  }
  std::optional<Batch> full_population() const override {
    Batch all(data_->n_neg());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<std::uint32_t>(j);
    return all;
  }

 private:
  std::shared_ptr<const PaucDataset> data_;
  std::size_t i_;
  PairSurrogate surrogate_;
};

struct PaucOptions {
  double weight_decay = 0.0;
  std::optional<double> w_radius;
  double s_lower = -kInfinity;
  double s_upper = kInfinity;
};

inline ProblemInstance build_pauc(std::shared_ptr<const PaucDataset> data,
                                  PairSurrogate surrogate, const PaucOptions& opt = {}) {
  if (!data) throw InvalidArgument("build_pauc: null dataset");
  data->validate();
  if (!(opt.s_lower <= opt.s_upper)) throw InvalidArgument("build_pauc: empty s range");
  const std::size_t d = data->d;

  ProblemInstance p;
  p.outers.assign(data->n_pos(), ScaledPositivePart{1.0 / (1.0 - data->alpha)});
  for (std::size_t i = 0; i < data->n_pos(); ++i)
    p.inners.push_back(std::make_shared<PaucInner>(data, i, surrogate));
  p.regularizer = Regularizer::ridge(d + 1, opt.weight_decay);
  p.regularizer.l2[d] = 0.0;
  p.regularizer.linear[d] = 1.0;
  p.domain = opt.w_radius ? BoxDomain::cube(d + 1, -*opt.w_radius, *opt.w_radius)
                          : BoxDomain::unbounded(d + 1);
  p.domain.lower[d] = opt.s_lower;
  p.domain.upper[d] = opt.s_upper;
  p.constants.c_f = 1.0 / (1.0 - data->alpha);
  p.label = "pauc_" + to_string(surrogate);
  return p;
}

/// Linear scores <w, a> of every positive and negative.
inline std::pair<Vector, Vector> pauc_scores(const PaucDataset& data,
                                             std::span<const double> w) {
  const auto wd = w.first(data.d);
  Vector pos(data.n_pos()), neg(data.n_neg());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = dot(wd, data.pos(i));
  for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = dot(wd, data.neg(j));
  return {pos, neg};
}

}  // namespace alexr
