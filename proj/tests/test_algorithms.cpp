#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "alexr/algorithms/presets.hpp"
#include "alexr/algorithms/run.hpp"
#include "alexr/instances/affine.hpp"
#include "alexr/instances/gdro.hpp"
#include "alexr/instances/hard.hpp"
#include "alexr/instances/synthetic.hpp"

using namespace alexr;

namespace {

GdroOptions with_decay(double wd) {
  GdroOptions o;
  o.weight_decay = wd;
  return o;
}

ProblemInstance affine_problem(std::vector<OuterFunction> outers, std::vector<Vector> a,
                               Vector b, Regularizer reg, BoxDomain box) {
  ProblemInstance p;
  p.outers = std::move(outers);
  for (std::size_t i = 0; i < a.size(); ++i) p.inners.push_back(affine_inner(a[i], b[i]));
  p.regularizer = std::move(reg);
  p.domain = std::move(box);
  return p;
}

double sq_dist(const Vector& x, const Vector& z) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - z[j]) * (x[j] - z[j]);
  return s;
}

}  // namespace

TEST(DualUpdateQuadratic, Examples) {
  EXPECT_NEAR(dual_update_quadratic(ScaledPositivePart::cvar(0.5), 0.2, 0.5, 2.0), 0.45, 1e-15);
  EXPECT_DOUBLE_EQ(dual_update_quadratic(PositivePart{}, 0.0, -1.0, 1.0), 0.0);
  EXPECT_NEAR(dual_update_quadratic(HingeHard{1.0, 0.2}, 0.5, 0.0, 1e6), 0.5, 1e-6);
}

TEST(DualUpdateConjugate, Examples) {
  const auto upd = dual_update_conjugate(HalfSquareShift{0.0, 10.0}, 1.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(upd.u, 2.0);
  EXPECT_DOUBLE_EQ(upd.y, 2.0);
  const auto h = dual_update_conjugate(HuberHard{0.3}, 1.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(h.u, 2.0);
  EXPECT_DOUBLE_EQ(h.y, HuberHard{0.3}.gradient(2.0));
  EXPECT_DOUBLE_EQ(dual_update_conjugate(HuberHard{0.3}, 5.0, -0.7, 0.0).u, -0.7);
}

TEST(DualUpdateConjugate, ExplicitBregmanProxAgrees) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0), T(0.0, 5.0);
  const std::vector<OuterFunction> fs{HalfSquareShift{0.4, 10.0}, HuberHard{0.3},
                                      ChiSquareOuter{2.0, 8.0}};
  for (const auto& f : fs)
    for (int k = 0; k < 500; ++k) {
      const double u = U(rng), g = U(rng), tau = T(rng);
      const double y = primal_map(f, u);
      const auto c = dual_update_conjugate(f, u, g, tau);
      // Only compare where grad f is not clipped, so u and y determine each other.
      if (std::abs(*conjugate_gradient(f, y) - u) > 1e-9 ||
          std::abs(*conjugate_gradient(f, c.y) - c.u) > 1e-9)
        continue;
      EXPECT_NEAR(dual_update_conjugate_explicit(f, y, g, tau), c.y, 1e-10) << outer_name(f);
    }
}

TEST(PrimalProxStep, Examples) {
  const auto r0 = Regularizer::zero(2);
  const auto free2 = BoxDomain::unbounded(2);
  EXPECT_EQ(primal_prox_step(Vector{0.3, -0.4}, Vector{0.0, 0.0}, 2.0, r0, free2),
            (Vector{0.3, -0.4}));
  EXPECT_EQ(primal_prox_step(Vector{0.0, 0.0}, Vector{1.0, 1.0}, 1.0, Regularizer::ridge(2, 1.0),
                             free2),
            (Vector{-0.5, -0.5}));
  EXPECT_EQ(primal_prox_step(Vector{1.0}, Vector{-10.0}, 1.0, Regularizer::zero(1),
                             BoxDomain::cube(1, -1.0, 1.0)),
            (Vector{1.0}));
}

TEST(AlexrStep, IdentityOutersReduceToProximalGradient) {
  const auto p = affine_problem({Identity{}, Identity{}, Identity{}},
                                {{1.0, 0.0}, {0.0, 2.0}, {1.0, -1.0}}, {0.5, 0.0, -1.0},
                                Regularizer::ridge(2, 0.3), BoxDomain::unbounded(2));
  AlexrConfig cfg;
  cfg.S = 3;
  cfg.B = 1;
  cfg.eta = 4.0;
  cfg.tau = 1.0;
  cfg.x0 = {0.2, -0.1};
  Alexr solver(p, cfg);
  Vector x = cfg.x0;
  for (int t = 0; t < 20; ++t) {
    solver.step();
    // grad of (1/n) sum a_i^T x is the mean of a_i.
    const Vector g{2.0 / 3.0, 1.0 / 3.0};
    x = primal_prox_step(x, g, cfg.eta, p.regularizer, p.domain);
    ASSERT_NEAR(solver.iterate()[0], x[0], 1e-14);
    ASSERT_NEAR(solver.iterate()[1], x[1], 1e-14);
  }
  EXPECT_EQ(solver.oracle_count(), 20u * 2u * 3u);
}

TEST(AlexrStep, ExtrapolationVanishesAtStationaryPoint) {
  const auto p = affine_problem({PositivePart{}}, {{2.0}}, {0.5}, Regularizer::zero(1),
                                BoxDomain::cube(1, -1.0, 1.0));
  AlexrConfig cfg;
  cfg.theta = 1.0;
  cfg.tau = 2.0;
  cfg.eta = 1.0;
  cfg.x0 = {0.25};
  auto s = initial_alexr_state(p, cfg);
  ASSERT_EQ(s.x, s.x_prev);
  s = alexr_step(s, cfg, p);
  // g~ = g(x0) = 1.0, so y = clamp(0 + 1/2) = 0.5.
  EXPECT_DOUBLE_EQ(s.dual.blocks[0], 0.5);
  EXPECT_DOUBLE_EQ(s.x[0], 0.25 - 0.5 * 2.0);
}

TEST(AlexrStep, ConjugateModeUSequence) {
  const auto p = affine_problem({HuberHard{0.3}}, {{1.0}}, {3.0}, Regularizer::zero(1),
                                BoxDomain::cube(1, 0.0, 0.0));
  AlexrConfig cfg;
  cfg.psi_mode = PsiMode::conjugate;
  cfg.tau = 1.0;
  auto s = initial_alexr_state(p, cfg);
  s.dual.blocks[0] = 1.0;
  s = alexr_step(s, cfg, p);
  EXPECT_DOUBLE_EQ(s.dual.blocks[0], 2.0);
  EXPECT_DOUBLE_EQ(explicit_duals(p, s.dual)[0], HuberHard{0.3}.gradient(2.0));
}

TEST(AlexrConfig, Validation) {
  const auto h = build_hard_nonsmooth(4, 0.5, 1.0, 1.0, 1.0);
  AlexrConfig cfg;
  cfg.S = 5;
  EXPECT_THROW(cfg.validate(h.problem), InvalidArgument);
  cfg.S = 2;
  cfg.theta = 1.5;
  EXPECT_THROW(cfg.validate(h.problem), InvalidArgument);
  cfg.theta = 0.0;
  cfg.psi_mode = PsiMode::conjugate;
  EXPECT_THROW(cfg.validate(h.problem), Unsupported);
  cfg.psi_mode = PsiMode::quadratic;
  cfg.x0 = {0.0};
  EXPECT_THROW(cfg.validate(h.problem), InvalidArgument);
}

TEST(Run, ZeroIterationsGivesInitialRowOnly) {
  const auto h = build_hard_smooth(5, 0.3, 1.0);
  AlexrConfig cfg;
  cfg.T = 0;
  RunOptions opt;
  opt.f_star = h.f_star;
  const auto rec = run(cfg, h.problem, opt);
  ASSERT_EQ(rec.rows.size(), 1u);
  EXPECT_EQ(rec.rows[0].t, 0u);
  EXPECT_EQ(rec.rows[0].oracle_count, 0u);
  EXPECT_NEAR(rec.rows[0].gap, 0.03, 1e-15);
}

TEST(Run, DeterministicUnderSeed) {
  const auto h = build_hard_smooth(20, 0.3, 1.0);
  auto cfg = strongly_convex_preset(h.problem, 4, 2, 0.99);
  cfg.T = 300;
  cfg.seed = 17;
  RunOptions opt;
  opt.eval_every = 7;
  opt.f_star = h.f_star;
  const auto a = run(cfg, h.problem, opt);
  const auto b = run(cfg, h.problem, opt);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].t, b.rows[k].t);
    EXPECT_EQ(a.rows[k].objective, b.rows[k].objective);
    EXPECT_EQ(a.rows[k].gap, b.rows[k].gap);
  }
  EXPECT_EQ(a.last_iterate, b.last_iterate);
  EXPECT_EQ(a.rows.back().t, 300u);
  EXPECT_EQ(a.rows[1].t, 7u);
}

TEST(Run, StronglyConvexPresetShrinksMeanDistance) {
  const auto h = build_hard_smooth(100, 0.3, 1.0);
  const std::vector<std::size_t> checkpoints{0, 250, 500, 1000, 2000};
  std::vector<double> mean(checkpoints.size(), 0.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cfg = strongly_convex_preset(h.problem, 10, 1, 1.0 - 1e-3);
    cfg.seed = seed;
    Alexr solver(h.problem, cfg);
    std::size_t k = 0;
    for (std::size_t t = 0; t <= checkpoints.back(); ++t) {
      if (t == checkpoints[k]) mean[k++] += sq_dist(solver.iterate(), h.x_star) / 10.0;
      if (t < checkpoints.back()) solver.step();
    }
  }
  for (std::size_t k = 1; k < mean.size(); ++k) EXPECT_LT(mean[k], mean[k - 1]) << k;
}

TEST(StronglyConvexPreset, StepSizes) {
  const auto h = build_hard_smooth(100, 0.3, 1.0);
  const auto cfg = strongly_convex_preset(h.problem, 10, 1, 0.9);
  EXPECT_NEAR(cfg.eta, (1.0 / 200.0) * 0.9 / 0.1, 1e-15);
  EXPECT_NEAR(cfg.tau, 10.0 / (100.0 * 0.1), 1e-12);
  EXPECT_EQ(cfg.averaging, Averaging::last);
  const auto nonsmooth = build_hard_nonsmooth(4, 0.5, 1.0, 0.0, 1.0);
  EXPECT_THROW(strongly_convex_preset(nonsmooth.problem, 1, 1, 0.5), InvalidArgument);
  const auto conv = convex_preset(0.01, 2, 4, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(conv.eta, 50.0);
  EXPECT_DOUBLE_EQ(conv.tau, 25.0);
  EXPECT_EQ(conv.averaging, Averaging::uniform);
}

TEST(Sox, UnitGammaIsPlugIn) {
  const auto h = build_hard_smooth(6, 0.3, 1.0);
  BaselineConfig cfg;
  cfg.variant = BaselineVariant::sox;
  cfg.gamma = 1.0;
  cfg.S = 6;
  cfg.B = 3;
  cfg.seed = 5;
  Baseline sox(h.problem, cfg);
  Rng shadow(5);
  OuterSampler sampler(6);
  std::vector<std::uint32_t> blocks;
  Batch b, bt;
  const Vector x = sox.iterate();
  sampler.sample(shadow, 6, blocks);
  Vector expected(6);
  for (auto i : blocks) {
    h.problem.inners[i]->sample_batch(shadow, 3, b);
    h.problem.inners[i]->sample_batch(shadow, 3, bt);
    expected[i] = h.problem.inners[i]->value(x, b);
  }
  sox.step();
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(sox.state().u[i], expected[i]);
}

TEST(Sox, MovingAverageArithmetic) {
  // Constant g = 4 from u0 = 0: 0 -> 2 -> 3 with gamma = 0.5.
  const auto p = affine_problem({HalfSquareShift{0.0, 10.0}}, {{0.0}}, {4.0},
                                Regularizer::zero(1), BoxDomain::cube(1, 0.0, 0.0));
  BaselineConfig cfg;
  cfg.variant = BaselineVariant::sox;
  cfg.gamma = 0.5;
  Baseline sox(p, cfg);
  EXPECT_DOUBLE_EQ(sox.state().u[0], 0.0);
  sox.step();
  EXPECT_DOUBLE_EQ(sox.state().u[0], 2.0);
  sox.step();
  EXPECT_DOUBLE_EQ(sox.state().u[0], 3.0);
}

TEST(Sox, RejectsNonSmoothOuterUnlessAllowed) {
  const auto h = build_hard_nonsmooth(3, 0.5, 1.0, 1.0, 1.0);
  BaselineConfig cfg;
  cfg.variant = BaselineVariant::sox;
  EXPECT_THROW(Baseline(h.problem, cfg), Unsupported);
  cfg.allow_subgradient = true;
  EXPECT_NO_THROW(Baseline(h.problem, cfg));
}

TEST(Msvr, CorrectionFactorExamples) {
  EXPECT_DOUBLE_EQ(msvr_beta(10, 10, 0.5), 0.5);
  EXPECT_NEAR(msvr_beta(100, 10, 0.9), 90.1, 1e-12);
  const auto h = build_hard_smooth(100, 0.3, 1.0);
  BaselineConfig cfg;
  cfg.variant = BaselineVariant::msvr;
  cfg.S = 10;
  cfg.gamma = 0.9;
  EXPECT_NEAR(Baseline(h.problem, cfg).beta(), 90.1, 1e-12);
}

TEST(Msvr, ReducesToSoxWhenIterateIsStationary) {
  const auto h = build_hard_smooth(8, 0.3, 1.0);
  BaselineConfig cfg;
  cfg.S = 3;
  cfg.B = 2;
  cfg.gamma = 0.3;
  cfg.seed = 9;
  cfg.variant = BaselineVariant::sox;
  Baseline sox(h.problem, cfg);
  cfg.variant = BaselineVariant::msvr;
  Baseline msvr(h.problem, cfg);
  // First step: x_prev = x_0, so the correction term is zero.
  sox.step();
  msvr.step();
  EXPECT_EQ(sox.state().u, msvr.state().u);
  EXPECT_EQ(sox.iterate(), msvr.iterate());
}

TEST(Bsgd, FullBatchDeterministicIsExactSubgradientStep) {
  const auto p = affine_problem({PositivePart{}, PositivePart{}}, {{1.0}, {-1.0}}, {-1.0, 1.0},
                                Regularizer::ridge(1, 0.1), BoxDomain::unbounded(1));
  BaselineConfig cfg;
  cfg.variant = BaselineVariant::bsgd;
  cfg.S = 2;
  cfg.step = 0.5;
  cfg.x0 = {3.0};
  Baseline solver(p, cfg);
  Vector x = cfg.x0;
  for (int t = 0; t < 10; ++t) {
    solver.step();
    double g = 0.0;
    g += 0.5 * subgradient(PositivePart{}, x[0] - 1.0);
    g -= 0.5 * subgradient(PositivePart{}, 1.0 - x[0]);
    x = primal_prox_step(x, Vector{g}, 2.0, p.regularizer, p.domain);
    ASSERT_NEAR(solver.iterate()[0], x[0], 1e-14);
  }
}

TEST(FlatSgd, UpweightProbabilities) {
  const auto probs = upweight_sample_probabilities({90, 10});
  EXPECT_NEAR(probs[0], 1.0 / 180.0, 1e-15);
  EXPECT_NEAR(probs[1], 1.0 / 20.0, 1e-15);
  EXPECT_NEAR(90 * probs[0] + 10 * probs[1], 1.0, 1e-15);
}

TEST(FlatSgd, SingleGroupErmEqualsUpweighted) {
  Rng rng(4);
  auto data = std::make_shared<GroupedDataset>(build_synthetic_gdro(1, 3, 40, 0.0, rng));
  const auto p = build_gdro(data, Divergence::cvar(0.5), with_decay(0.1));
  BaselineConfig cfg;
  cfg.S = 2;
  cfg.B = 3;
  cfg.seed = 8;
  cfg.step = 0.05;
  cfg.variant = BaselineVariant::sgd_erm;
  Baseline erm(p, cfg);
  cfg.variant = BaselineVariant::sgd_uw;
  Baseline uw(p, cfg);
  for (int t = 0; t < 50; ++t) {
    erm.step();
    uw.step();
  }
  EXPECT_EQ(erm.iterate(), uw.iterate());
  EXPECT_EQ(erm.oracle_count(), 300u);
}

TEST(FlatSgd, FixedPointAtOptimumOfQuadratic) {
  // Zero features: every per-sample gradient vanishes, w = 0 minimizes the ridge.
  auto data = std::make_shared<GroupedDataset>();
  data->d = 2;
  data->features.assign(6, 0.0);
  data->labels = {1.0, -1.0, 1.0};
  data->group_of = {0, 0, 1};
  data->rebuild_index(2);
  const auto p = build_gdro(data, Divergence::cvar(0.5), with_decay(0.5));
  for (auto variant : {BaselineVariant::sgd_erm, BaselineVariant::sgd_uw}) {
    BaselineConfig cfg;
    cfg.variant = variant;
    cfg.S = 2;
    cfg.B = 2;
    cfg.step = 0.1;
    Baseline solver(p, cfg);
    for (int t = 0; t < 20; ++t) solver.step();
    EXPECT_EQ(solver.iterate(), (Vector{0.0, 0.0, 0.0}));
  }
}
