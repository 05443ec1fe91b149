#pragma once

// Group DRO in its dual form. With per-group risks R_i(w) and a
// phi-divergence penalty of weight lambda,
//
//   min_{w, c}  (lambda/n) sum_i phi*((R_i(w) - c) / lambda) + c + r(w),
//
// which is compositional with f_i(u) = lambda phi*(u) and
// g_i(w, c) = (R_i(w) - c) / lambda. The primal vector is x = (w, c).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alexr/core/problem.hpp"
#include "alexr/instances/logistic.hpp"

namespace alexr {

/// Dense labelled samples partitioned into groups.
struct GroupedDataset {
  std::size_t d = 0;
  Vector features;  // row-major, n_samples x d
  Vector labels;    // +1 / -1
  std::vector<std::uint32_t> group_of;
  std::vector<std::vector<std::uint32_t>> group_index;

  std::size_t n_samples() const { return labels.size(); }
  std::size_t n_groups() const { return group_index.size(); }

  std::span<const double> row(std::size_t s) const {
    return {features.data() + s * d, d};
  }

  /// Fills group_index from group_of; groups are 0..n_groups-1.
  void rebuild_index(std::size_t n_groups) {
    group_index.assign(n_groups, {});
    for (std::size_t s = 0; s < group_of.size(); ++s) {
      if (group_of[s] >= n_groups) throw InvalidArgument("dataset: group id out of range");
      group_index[group_of[s]].push_back(static_cast<std::uint32_t>(s));
    }
  }

  void validate() const {
    if (features.size() != labels.size() * d)
      throw InvalidArgument("dataset: feature matrix does not match sample count");
    if (group_of.size() != labels.size())
      throw InvalidArgument("dataset: group map does not match sample count");
    for (double b : labels)
      if (b != 1.0 && b != -1.0) throw InvalidArgument("dataset: labels must be +1 or -1");
    std::size_t total = 0;
    for (std::size_t g = 0; g < group_index.size(); ++g) {
      if (group_index[g].empty())
        throw InvalidArgument("dataset: group " + std::to_string(g) + " is empty");
      for (auto s : group_index[g])
        if (s >= labels.size() || group_of[s] != g)
          throw InvalidArgument("dataset: group index inconsistent with group map");
      total += group_index[g].size();
    }
    if (total != labels.size())
      throw InvalidArgument("dataset: groups do not partition the samples");
  }
};

inline double sample_logistic_loss(const GroupedDataset& data, std::span<const double> w,
                                   std::size_t s) {
  return logistic_of_margin(data.labels[s] * dot(w, data.row(s)));
}

/// out[0..d) += weight * grad_w loss_s(w).
inline void add_sample_logistic_gradient(const GroupedDataset& data,
                                         std::span<const double> w, std::size_t s,
                                         double weight, std::span<double> out) {
  const double b = data.labels[s];
  const auto a = data.row(s);
  const double c = weight * b * logistic_slope_of_margin(b * dot(w, a));
  for (std::size_t j = 0; j < a.size(); ++j) out[j] += c * a[j];
}

/// Mean logistic loss of every group at w (only the first d entries of w are read).
inline Vector group_risks(const GroupedDataset& data, std::span<const double> w) {
  const auto wd = w.first(data.d);
  Vector risks(data.n_groups(), 0.0);
  for (std::size_t g = 0; g < data.n_groups(); ++g) {
    double sum = 0.0;
    for (auto s : data.group_index[g]) sum += sample_logistic_loss(data, wd, s);
    risks[g] = sum / static_cast<double>(data.group_index[g].size());
  }
  return risks;
}

/// CVaR_alpha of equally weighted values: the mean of the worst alpha fraction,
/// with the boundary value counted fractionally. Equals
/// min_c c + 1/(alpha n) sum_i (v_i - c)_+. `weights` (optional) receives the
/// maximizing distribution, a subgradient in v.
inline double cvar_of_values(std::span<const double> v, double alpha,
                             Vector* weights = nullptr) {
  if (v.empty()) throw InvalidArgument("cvar: no values");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("cvar: alpha must lie in (0,1]");
  const double mass = alpha * static_cast<double>(v.size());
  std::vector<std::size_t> order(v.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] > v[b]; });
  if (weights) weights->assign(v.size(), 0.0);
  double left = mass;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size() && left > 0.0; ++k) {
    const double take = std::min(1.0, left);
    sum += take * v[order[k]];
    if (weights) (*weights)[order[k]] = take / mass;
    left -= take;
  }
  return sum / mass;
}

struct Divergence {
  enum class Kind { cvar, chi2 };
  Kind kind = Kind::cvar;
  double alpha = 0.1;   // cvar only
  double lambda = 1.0;

  static Divergence cvar(double alpha, double lambda = 1.0) {
    return {Kind::cvar, alpha, lambda};
  }
  static Divergence chi2(double lambda) { return {Kind::chi2, 0.0, lambda}; }

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidArgument("divergence: lambda must be > 0");
    if (kind == Kind::cvar && !(alpha > 0.0 && alpha < 1.0))
      throw InvalidArgument("divergence: cvar alpha must lie in (0,1)");
  }
};

struct GdroOptions {
  double weight_decay = 0.0;
  /// Upper bound B_R on group risks; sets the default c range [-lambda, B_R]
  /// and the chi-square dual cap.
  double risk_bound = 5.0;
  std::optional<double> c_lower;
  std::optional<double> c_upper;
  /// Optional symmetric box on w; unbounded when absent.
  std::optional<double> w_radius;
};

/// g_i(w, c) = (R_i(w; batch) - c) / lambda over one group, sampled with
/// replacement.
class GdroInner final : public InnerOracle {
 public:
  GdroInner(std::shared_ptr<const GroupedDataset> data, std::size_t group, double lambda)
      : data_(std::move(data)), group_(group), inv_lambda_(1.0 / lambda) {}

  std::size_t dim() const override { return data_->d + 1; }
  bool is_affine() const override { return false; }
  bool is_smooth() const override { return true; }

  void sample_batch(Rng& rng, std::size_t size, Batch& out) const override {
    const auto& members = data_->group_index[group_];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    out.resize(size);
    for (auto& b : out) b = members[pick(rng)];
  }

  double value(std::span<const double> x, const Batch& batch) const override {
    const auto w = x.first(data_->d);
    double sum = 0.0;
    for (auto s : batch) sum += sample_logistic_loss(*data_, w, s);
    return (sum / static_cast<double>(batch.size()) - x[data_->d]) * inv_lambda_;
  }

  void add_jtvp(std::span<const double> x, const Batch& batch, double weight,
                std::span<double> out) const override {
    const auto w = x.first(data_->d);
    const double c = weight * inv_lambda_;
    const double per = c / static_cast<double>(batch.size());
    for (auto s : batch) add_sample_logistic_gradient(*data_, w, s, per, out);
    out[data_->d] -= c;
  }

  bool has_exact_value() const override { return true; }
  double exact_value(std::span<const double> x) const override {
    return value(x, data_->group_index[group_]);
  }
  std::optional<Batch> full_population() const override {
    return data_->group_index[group_];
  }

 private:
  std::shared_ptr<const GroupedDataset> data_;
  std::size_t group_;
  double inv_lambda_;
};

/// Per-sample logistic losses for the flat SGD baselines.
class GroupedLogisticView final : public FlatSampleView {
 public:
  explicit GroupedLogisticView(std::shared_ptr<const GroupedDataset> data)
      : data_(std::move(data)) {}

  std::size_t n_samples() const override { return data_->n_samples(); }
  std::size_t n_groups() const override { return data_->n_groups(); }
  const std::vector<std::uint32_t>& group_members(std::size_t g) const override {
    return data_->group_index[g];
  }
  double loss(std::span<const double> x, std::size_t sample) const override {
    return sample_logistic_loss(*data_, x.first(data_->d), sample);
  }
  void add_gradient(std::span<const double> x, std::size_t sample, double weight,
                    std::span<double> out) const override {
    add_sample_logistic_gradient(*data_, x.first(data_->d), sample, weight, out);
  }

 private:
  std::shared_ptr<const GroupedDataset> data_;
};

/// Largest dual value the chi-square outer can take with c in [c_lo, c_hi]
/// and risks in [0, B_R]: lambda/2 * ((B_R - c_lo)/lambda + 2).
inline double chi2_dual_cap(double lambda, double risk_bound, double c_lower) {
  return 0.5 * lambda * ((risk_bound - c_lower) / lambda + 2.0);
}

inline ProblemInstance build_gdro(std::shared_ptr<const GroupedDataset> data,
                                  const Divergence& div, const GdroOptions& opt = {}) {
  if (!data) throw InvalidArgument("build_gdro: null dataset");
  div.validate();
  data->validate();
  if (data->n_groups() == 0) throw InvalidArgument("build_gdro: dataset has no groups");
  if (!(opt.weight_decay >= 0.0)) throw InvalidArgument("build_gdro: weight_decay must be >= 0");
  if (!(opt.risk_bound > 0.0)) throw InvalidArgument("build_gdro: risk_bound must be > 0");

  const std::size_t d = data->d;
  const std::size_t n = data->n_groups();
  const double c_lo = opt.c_lower.value_or(-div.lambda);
  const double c_hi = opt.c_upper.value_or(opt.risk_bound);
  if (!(c_lo <= c_hi)) throw InvalidArgument("build_gdro: empty c range");

  ProblemInstance p;
  const OuterFunction outer =
      div.kind == Divergence::Kind::cvar
          ? OuterFunction{ScaledPositivePart{div.lambda / div.alpha}}
          : OuterFunction{ChiSquareOuter{div.lambda,
                                         chi2_dual_cap(div.lambda, opt.risk_bound, c_lo)}};
  p.outers.assign(n, outer);
  for (std::size_t g = 0; g < n; ++g)
    p.inners.push_back(std::make_shared<GdroInner>(data, g, div.lambda));

  p.regularizer = Regularizer::ridge(d + 1, opt.weight_decay);
  p.regularizer.l2[d] = 0.0;
  p.regularizer.linear[d] = 1.0;
  p.domain = opt.w_radius ? BoxDomain::cube(d + 1, -*opt.w_radius, *opt.w_radius)
                          : BoxDomain::unbounded(d + 1);
  p.domain.lower[d] = c_lo;
  p.domain.upper[d] = c_hi;
  p.flat_view = std::make_shared<GroupedLogisticView>(data);

  double max_norm = 0.0;
  for (std::size_t s = 0; s < data->n_samples(); ++s)
    max_norm = std::max(max_norm, std::sqrt(dot(data->row(s), data->row(s))));
  p.constants.c_f = lipschitz_constant(outer);
  p.constants.c_g = std::sqrt(max_norm * max_norm + 1.0) / div.lambda;
  p.label = div.kind == Divergence::Kind::cvar ? "gdro_cvar" : "gdro_chi2";
  return p;
}

}  // namespace alexr
