#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "alexr/instances/data_io.hpp"
#include "alexr/instances/gdro.hpp"
#include "alexr/instances/hard.hpp"
#include "alexr/instances/logistic.hpp"
#include "alexr/instances/pauc.hpp"
#include "alexr/instances/synthetic.hpp"

using namespace alexr;

namespace {

GdroOptions with_decay(double wd) {
  GdroOptions o;
  o.weight_decay = wd;
  return o;
}

// Per-coordinate F_i(v) = f(v) + r_i(v) minimized on a uniform grid.
double grid_min_component(const HardInstance& h, double lo, double hi, int points,
                          double* argmin = nullptr) {
  const double n = static_cast<double>(h.problem.n());
  double best = kInfinity;
  for (int k = 0; k < points; ++k) {
    const double v = lo + (hi - lo) * k / (points - 1.0);
    const double f = value(h.problem.outers[0], v) + 0.5 * h.problem.regularizer.l2[0] * n * v * v;
    if (f < best) {
      best = f;
      if (argmin) *argmin = v;
    }
  }
  return best;
}

std::shared_ptr<GroupedDataset> small_grouped(std::size_t groups, std::size_t per, std::size_t d,
                                              std::uint64_t seed) {
  Rng rng(seed);
  return std::make_shared<GroupedDataset>(build_synthetic_gdro(groups, d, per, 0.5, rng));
}

// Full-batch gradient descent on mean logistic loss + wd/2 |w|^2 (ERM oracle).
Vector solve_erm(const GroupedDataset& data, double wd, int iters, double step) {
  Vector w(data.d, 0.0);
  for (int t = 0; t < iters; ++t) {
    Vector g(data.d, 0.0);
    for (std::size_t s = 0; s < data.n_samples(); ++s)
      add_sample_logistic_gradient(data, w, s, 1.0 / data.n_samples(), g);
    for (std::size_t j = 0; j < data.d; ++j) w[j] -= step * (g[j] + wd * w[j]);
  }
  return w;
}

double erm_objective(const GroupedDataset& data, const Vector& w, double wd) {
  double s = 0.0;
  for (std::size_t k = 0; k < data.n_samples(); ++k) s += sample_logistic_loss(data, w, k);
  return s / data.n_samples() + 0.5 * wd * dot(w, w);
}

}  // namespace

TEST(HardSmooth, OptimumAndNoiseProbability) {
  const auto h = build_hard_smooth(7, 0.3, 1.0);
  for (double v : h.x_star) EXPECT_NEAR(v, -0.2, 1e-15);
  EXPECT_NEAR(h.f_star, -0.03, 1e-15);
  EXPECT_NEAR(h.p, 0.09, 1e-15);
  EXPECT_NEAR(h.mu, 1.0 / 14.0, 1e-15);
}

TEST(HardSmooth, OptimumMatchesGridMinimum) {
  const auto h = build_hard_smooth(5, 0.3, 1.0);
  double arg = 0.0;
  const double m = grid_min_component(h, -1.0, 1.0, 2000001, &arg);
  EXPECT_NEAR(m, h.f_star, 1e-6);
  EXPECT_NEAR(arg, h.x_star[0], 1e-5);
  EXPECT_NEAR(evaluate_objective(h.problem, h.x_star), m, 1e-6);
}

TEST(HardNonsmooth, OptimumCaseSplit) {
  const auto strong = build_hard_nonsmooth(3, 0.5, 1.0, 4.0, 1.0);
  EXPECT_NEAR(strong.x_star[0], -0.25, 1e-15);
  const auto weak = build_hard_nonsmooth(3, 0.5, 1.0, 1.0, 1.0);
  EXPECT_NEAR(weak.x_star[0], -0.5, 1e-15);
  for (const auto* h : {&strong, &weak}) {
    double arg = 0.0;
    const double m = grid_min_component(*h, -2.0 * h->nu, 2.0 * h->nu, 200001, &arg);
    EXPECT_NEAR(m, h->f_star, 1e-8);
    EXPECT_NEAR(evaluate_objective(h->problem, h->x_star), h->f_star, 1e-14);
  }
}

TEST(HardNonsmooth, SuboptimalityAtOriginBound) {
  const auto h = build_hard_nonsmooth(4, 0.5, 1.0, 4.0, 1.0);
  const Vector zero(4, 0.0);
  const double gap = evaluate_objective(h.problem, zero) - evaluate_objective(h.problem, h.x_star);
  EXPECT_GE(gap, 0.5 * std::min(1.0 * 0.5, 1.0 / 4.0) - 1e-15);
  EXPECT_NEAR(gap, 0.125, 1e-15);
}

TEST(HardNoise, MomentsAtMonteCarloRate) {
  Rng rng(2024);
  const double nu = 0.3, sigma = 1.0;
  const int N = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < N; ++k) {
    const double z = sample_hard_noise(rng, nu, sigma);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / N;
  const double var = sq / N - mean * mean;
  EXPECT_LE(std::abs(mean), 3.0 * sigma / std::sqrt(double(N)));
  EXPECT_NEAR(var, 0.91, 0.01);
  EXPECT_NEAR((TwoPointNoise{nu, sigma}).variance(), 0.91, 1e-15);
  EXPECT_THROW(sample_hard_noise(rng, 2.0, 1.0), InvalidArgument);
}

TEST(HardNoise, OracleBatchMeanUnbiased) {
  const auto h = build_hard_smooth(3, 0.3, 1.0);
  Rng rng(5);
  const Vector x{0.1, -0.4, 0.7};
  double acc = 0.0;
  const int reps = 200000;
  for (int k = 0; k < reps; ++k) acc += h.problem.inners[1]->value(x, h.problem.inners[1]->sample_batch(rng, 4));
  EXPECT_NEAR(acc / reps, -0.4, 3.0 * std::sqrt(0.91 / 4.0 / reps));
}

TEST(Logistic, ZeroWeightAndStability) {
  const Vector a{1.0, -2.0, 0.5};
  EXPECT_NEAR(logistic_loss(Vector{0.0, 0.0, 0.0}, a, 1.0).loss, std::log(2.0), 1e-15);
  const auto big = logistic_loss(Vector{50.0}, Vector{1.0}, 1.0);
  EXPECT_LT(big.loss, 1e-20);
  EXPECT_TRUE(std::isfinite(big.grad[0]));
  const auto neg = logistic_loss(Vector{800.0}, Vector{1.0}, -1.0);
  EXPECT_NEAR(neg.loss, 800.0, 1e-9);
  EXPECT_NEAR(neg.grad[0], 1.0, 1e-15);
}

TEST(Logistic, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vector w(4), a(4);
    for (auto& v : w) v = N(rng);
    for (auto& v : a) v = N(rng);
    const double b = N(rng) > 0 ? 1.0 : -1.0;
    const auto lg = logistic_loss(w, a, b);
    for (int j = 0; j < 4; ++j) {
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (logistic_loss(wp, a, b).loss - logistic_loss(wm, a, b).loss) / (2 * h);
      worst = std::max(worst, std::abs(fd - lg.grad[j]));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Gdro, InnerJacobianMatchesFiniteDifferences) {
  const auto data = small_grouped(3, 20, 4, 11);
  const auto p = build_gdro(data, Divergence::cvar(0.3, 2.0), with_decay(0.1));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 0.7);
  Rng brng(4);
  for (int k = 0; k < 20; ++k) {
    Vector x(5);
    for (auto& v : x) v = N(rng);
    const auto& g = *p.inners[k % 3];
    const Batch b = g.sample_batch(brng, 6);
    const Vector jt = g.stochastic_jtvp(x, b, 1.0);
    for (int j = 0; j < 5; ++j) {
      Vector xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      EXPECT_NEAR((g.value(xp, b) - g.value(xm, b)) / 2e-6, jt[j], 1e-7);
    }
  }
}

TEST(Gdro, StructureOfDualForm) {
  const auto data = small_grouped(4, 10, 3, 1);
  GdroOptions opt;
  opt.weight_decay = 0.2;
  const auto p = build_gdro(data, Divergence::cvar(0.25, 1.0), opt);
  EXPECT_EQ(p.n(), 4u);
  EXPECT_EQ(p.dim(), 4u);
  EXPECT_EQ(p.label, "gdro_cvar");
  EXPECT_DOUBLE_EQ(p.domain.lower[3], -1.0);
  EXPECT_DOUBLE_EQ(p.domain.upper[3], 5.0);
  EXPECT_DOUBLE_EQ(p.regularizer.linear[3], 1.0);
  EXPECT_DOUBLE_EQ(p.regularizer.l2[3], 0.0);
  EXPECT_EQ(dual_domain(p.outers[0]), (Interval{0.0, 4.0}));
  // F(w, c) = c + 1/(alpha n) sum (R_i - c)_+ + wd/2 |w|^2 with lambda = 1.
  const Vector x{0.3, -0.2, 0.1, 0.4};
  const auto risks = group_risks(*data, x);
  double expect = 0.4 + 0.1 * (0.09 + 0.04 + 0.01);
  for (double r : risks) expect += std::max(r - 0.4, 0.0) / (0.25 * 4.0);
  EXPECT_NEAR(evaluate_objective(p, x), expect, 1e-13);
}

TEST(Gdro, CvarMinOverCEqualsTopFractionMean) {
  const auto data = small_grouped(8, 15, 3, 21);
  const auto p = build_gdro(data, Divergence::cvar(0.25), {});
  const Vector w{0.5, -0.3, 0.2};
  const auto risks = group_risks(*data, w);
  // The objective is piecewise linear in c with kinks at the risks.
  double best = kInfinity;
  for (double c : risks) {
    Vector x = w;
    x.push_back(c);
    best = std::min(best, evaluate_objective(p, x));
  }
  EXPECT_NEAR(best, cvar_of_values(risks, 0.25), 1e-12);
}

TEST(Gdro, SingleGroupCollapsesToErm) {
  // With one group the CVaR dual form min_c c + (R - c)_+/alpha equals R for any alpha.
  const auto data = small_grouped(1, 60, 3, 7);
  const double wd = 0.1;
  const auto p = build_gdro(data, Divergence::cvar(0.999), with_decay(wd));
  const Vector w = solve_erm(*data, wd, 4000, 0.5);
  Vector x = w;
  x.push_back(group_risks(*data, w)[0]);
  EXPECT_NEAR(evaluate_objective(p, x), erm_objective(*data, w, wd), 1e-12);
  // Any other c is no better.
  for (double c : {-0.5, 0.0, 0.3, 2.0}) {
    x.back() = c;
    EXPECT_GE(evaluate_objective(p, x), erm_objective(*data, w, wd) - 1e-12);
  }
}

TEST(Gdro, ChiSquareLargeLambdaTendsToMeanRisk) {
  // lambda phi*((R - c)/lambda) + c ~ R + (R - c)^2 / (4 lambda) for large lambda.
  const auto data = small_grouped(5, 30, 3, 13);
  const double lambda = 1e6;
  GdroOptions opt;
  opt.weight_decay = 0.05;
  opt.c_lower = -10.0;
  const auto p = build_gdro(data, Divergence::chi2(lambda), opt);
  const Vector w = solve_erm(*data, 0.05, 3000, 0.5);
  const auto risks = group_risks(*data, w);
  double best = kInfinity;
  for (int k = 0; k <= 2000; ++k) {
    Vector x = w;
    x.push_back(-1.0 + 3.0 * k / 2000.0);
    best = std::min(best, evaluate_objective(p, x));
  }
  EXPECT_NEAR(best, erm_objective(*data, w, 0.05), 1e-3);
  double mean = std::accumulate(risks.begin(), risks.end(), 0.0) / risks.size();
  EXPECT_NEAR(best - 0.5 * 0.05 * dot(w, w), mean, 1e-3);
}

TEST(Gdro, ChiSquareCapCoversReachableDuals) {
  const double cap = chi2_dual_cap(2.0, 5.0, -2.0);
  EXPECT_DOUBLE_EQ(cap, 0.5 * 2.0 * (7.0 / 2.0 + 2.0));
  const ChiSquareOuter f{2.0, cap};
  // Largest inner value: (B_R - c_lo) / lambda.
  EXPECT_NEAR(f.gradient(3.5), cap, 1e-12);
}

TEST(Gdro, CvarOfValues) {
  const Vector v{1.0, 4.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(cvar_of_values(v, 0.5), 3.5);
  EXPECT_DOUBLE_EQ(cvar_of_values(v, 1.0), 2.5);
  Vector wts;
  EXPECT_DOUBLE_EQ(cvar_of_values(v, 0.375, &wts), (4.0 + 0.5 * 3.0) / 1.5);
  EXPECT_NEAR(std::accumulate(wts.begin(), wts.end(), 0.0), 1.0, 1e-15);
}

TEST(Pauc, PerfectSeparationObjectiveZero) {
  auto data = std::make_shared<PaucDataset>();
  data->d = 1;
  data->positives = {1.0, 1.0, 1.0, 1.0};
  data->negatives = {-1.0, -1.0};
  data->alpha = 0.5;
  const auto p = build_pauc(data, PairSurrogate::squared_hinge);
  // Scores +1 / -1 under w = 1: every pair loss (1 + (-2))_+^2 = 0, g_i = -s.
  EXPECT_DOUBLE_EQ(evaluate_objective(p, Vector{1.0, 0.0}), 0.0);
  for (double s : {-0.5, 0.5, 1.0}) EXPECT_GT(evaluate_objective(p, Vector{1.0, s}), 0.0);
}

TEST(Pauc, ZeroWeightGivesIdenticalComponents) {
  Rng rng(3);
  auto data = std::make_shared<PaucDataset>(build_synthetic_pauc({12, 20, 3, 1.0, 0.25}, rng));
  const auto p = build_pauc(data, PairSurrogate::logistic);
  const Vector x{0.0, 0.0, 0.0, 0.3};
  for (std::size_t i = 1; i < p.n(); ++i)
    EXPECT_DOUBLE_EQ(p.inners[i]->exact_value(x), p.inners[0]->exact_value(x));
  EXPECT_NEAR(p.inners[0]->exact_value(x), std::log(2.0) - 0.3, 1e-15);
}

TEST(Pauc, ObjectiveMatchesBruteForcePartialLoss) {
  // min_s of the variational form equals the mean loss of the k worst positives.
  Rng rng(17);
  auto data = std::make_shared<PaucDataset>(build_synthetic_pauc({10, 15, 2, 1.0, 0.6}, rng));
  const auto p = build_pauc(data, PairSurrogate::squared_hinge);
  const Vector w{0.4, -0.7};
  std::vector<double> losses;
  for (std::size_t i = 0; i < data->n_pos(); ++i) {
    double l = 0.0;
    for (std::size_t j = 0; j < data->n_neg(); ++j)
      l += pair_surrogate(PairSurrogate::squared_hinge,
                          dot(w, data->neg(j)) - dot(w, data->pos(i)));
    losses.push_back(l / data->n_neg());
  }
  std::sort(losses.begin(), losses.end(), std::greater<>());
  const std::size_t k = data->k();
  const double direct = std::accumulate(losses.begin(), losses.begin() + k, 0.0) / k;
  double best = kInfinity;
  for (double s : losses) best = std::min(best, evaluate_objective(p, Vector{w[0], w[1], s}));
  EXPECT_NEAR(best, direct, 1e-12);
}

TEST(Pauc, JacobianMatchesFiniteDifferences) {
  Rng rng(5);
  auto data = std::make_shared<PaucDataset>(build_synthetic_pauc({6, 9, 3, 1.0, 0.5}, rng));
  for (auto sur : {PairSurrogate::squared_hinge, PairSurrogate::logistic}) {
    const auto p = build_pauc(data, sur);
    const Vector x{0.2, -0.1, 0.3, 0.5};
    const auto& g = *p.inners[2];
    const auto b = g.sample_batch(rng, 5);
    const auto jt = g.stochastic_jtvp(x, b, 1.0);
    for (int j = 0; j < 4; ++j) {
      Vector xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      EXPECT_NEAR((g.value(xp, b) - g.value(xm, b)) / 2e-6, jt[j], 1e-6) << to_string(sur);
    }
  }
}

TEST(Libsvm, MinimalDocumentAndEmptyStream) {
  std::istringstream in("+1 1:0.5 3:2.0\n-1 2:1.0\n");
  const auto d = parse_libsvm(in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim, 3u);
  EXPECT_EQ(d.labels, (Vector{1.0, -1.0}));
  EXPECT_EQ(d.rows[0], (SparseRow{{1, 0.5}, {3, 2.0}}));
  EXPECT_EQ(d.rows[1], (SparseRow{{2, 1.0}}));
  EXPECT_EQ(d.dense(), (Vector{0.5, 0.0, 2.0, 0.0, 1.0, 0.0}));
  std::istringstream empty("");
  EXPECT_EQ(parse_libsvm(empty).size(), 0u);
}

TEST(Libsvm, RoundTripRandomRows) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N(0.0, 10.0);
  std::bernoulli_distribution keep(0.3);
  LibsvmData d;
  for (int r = 0; r < 1000; ++r) {
    SparseRow row;
    for (std::uint32_t j = 1; j <= 40; ++j)
      if (keep(rng)) row.push_back({j, N(rng)});
    if (!row.empty()) d.dim = std::max<std::size_t>(d.dim, row.back().index);
    d.labels.push_back(keep(rng) ? 1.0 : -1.0);
    d.rows.push_back(row);
  }
  std::stringstream io;
  write_libsvm(io, d);
  const auto back = parse_libsvm(io);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.rows, d.rows);
  EXPECT_EQ(back.dim, d.dim);
}

TEST(Libsvm, MalformedInputReportsLine) {
  const char* bad[] = {"1 1:2\nx 1:2\n", "1 1:2\n-1 3:1 2:1\n", "1 1:2\n1 0:1\n",
                       "1 1:2\n1 2:abc\n", "1 1:2\n1 2\n"};
  for (const char* text : bad) {
    std::istringstream in(text);
    try {
      parse_libsvm(in);
      ADD_FAILURE() << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << text;
    }
  }
}

TEST(GroupedCsv, GroupsLabelsAndWarnings) {
  std::istringstream in(
      "group,label,x1,x2\n"
      "a,1,0.5,1\n"
      "b,0,1.5,2\n"
      "a,0,2.5,3\n"
      "b,1,3.5,4\n");
  const auto csv = load_grouped_csv(in);
  EXPECT_EQ(csv.data.n_groups(), 2u);
  EXPECT_EQ(csv.data.group_index[0].size() + csv.data.group_index[1].size(), 4u);
  EXPECT_EQ(csv.data.labels, (Vector{1.0, -1.0, -1.0, 1.0}));
  EXPECT_EQ(csv.feature_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_TRUE(csv.warnings.empty());

  std::istringstream single("label,group,f\n1,a,1\n-1,a,2\n1,z,3\n");
  const auto s = load_grouped_csv(single);
  EXPECT_EQ(s.data.n_groups(), 2u);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("z"), std::string::npos);

  std::istringstream dropped("label,group,f\n1,a,1\n-1,a,2\n1,z,3\n");
  CsvOptions opt;
  opt.min_group_size = 2;
  const auto d = load_grouped_csv(dropped, opt);
  EXPECT_EQ(d.data.n_groups(), 1u);
  EXPECT_EQ(d.data.n_samples(), 2u);
}

TEST(GroupedCsv, Errors) {
  std::istringstream missing("label,f\n1,2\n");
  EXPECT_THROW(load_grouped_csv(missing), ParseError);
  std::istringstream ragged("group,label,f\na,1,2\nb,1\n");
  EXPECT_THROW(load_grouped_csv(ragged), ParseError);
}

TEST(Synthetic, DeterministicUnderSeed) {
  Rng r1(42), r2(42), r3(43);
  const auto a = build_synthetic_gdro(5, 4, 30, 0.5, r1);
  const auto b = build_synthetic_gdro(5, 4, 30, 0.5, r2);
  const auto c = build_synthetic_gdro(5, 4, 30, 0.5, r3);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.group_of, b.group_of);
  EXPECT_NE(a.features, c.features);
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.n_groups(), 5u);
  EXPECT_EQ(a.n_samples(), 150u);
}

TEST(Synthetic, HomogeneousGroupsMakeGdroCloseToErm) {
  Rng rng(6);
  SyntheticGdroParams prm;
  prm.n_groups = 4;
  prm.d = 3;
  prm.samples_per_group = 400;
  prm.heterogeneity = 0.0;
  prm.center_spread = 0.0;
  prm.flip_prob = 0.0;
  auto data = std::make_shared<GroupedDataset>(build_synthetic_gdro(prm, rng));
  const double wd = 0.1;
  const Vector w_erm = solve_erm(*data, wd, 3000, 0.5);
  // GDRO value at its own optimum lies between the ERM objective and the CVaR at w_erm.
  auto phi = [&](const Vector& w) {
    return cvar_of_values(group_risks(*data, w), 0.5) + 0.5 * wd * dot(w, w);
  };
  Vector w = w_erm;
  double best = phi(w);
  for (int t = 0; t < 3000; ++t) {
    Vector weights;
    cvar_of_values(group_risks(*data, w), 0.5, &weights);
    Vector g(3, 0.0);
    for (std::size_t k = 0; k < data->n_groups(); ++k)
      for (auto s : data->group_index[k])
        add_sample_logistic_gradient(*data, w, s, weights[k] / data->group_index[k].size(), g);
    for (int j = 0; j < 3; ++j) w[j] -= (g[j] + wd * w[j]) / (wd * (t + 10));
    best = std::min(best, phi(w));
  }
  EXPECT_LT(phi(w_erm) - best, 1e-2);
  EXPECT_LT(best - erm_objective(*data, w_erm, wd), 1e-2);
}

TEST(Synthetic, PaucShapes) {
  Rng rng(1);
  const auto d = build_synthetic_pauc({7, 11, 4, 1.5, 0.3}, rng);
  EXPECT_EQ(d.n_pos(), 7u);
  EXPECT_EQ(d.n_neg(), 11u);
  EXPECT_EQ(d.k(), 4u);
  EXPECT_NO_THROW(d.validate());
}
