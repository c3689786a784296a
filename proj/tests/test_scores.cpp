#include <gtest/gtest.h>

#include <cmath>

#include "ddm/metrics.hpp"
#include "ddm/scores.hpp"
#include "oracles/frozen.hpp"

using namespace ddm;

namespace {

DiscreteDistribution clean_uniform(const Space &s) {
  DiscreteDistribution mu{s, std::vector<double>(s.size(), 0.0), 0.0};
  for (std::uint64_t x = 0; x < s.size(); ++x)
    if (num_masked(s, x) == 0) mu.p[x] = 1.0;
  return normalized(mu);
}

} // namespace

TEST(ExactScore, UniformRwIsOne) {
  const Model md = make_model(make_space(Kind::RW, 2, 4), 3.0);
  const ScoreOracle o(md, uniform(md.space));
  for (double t : {0.0, 1.0, 2.9})
    for (std::uint64_t x = 0; x < md.space.size(); ++x)
      for (const auto &op : backward_ops(md.space)) EXPECT_NEAR(o(t, x, op), 1.0, 1e-14);
}

TEST(ExactScore, MaskedLn2Example) {
  const double s = std::log(2.0), T_f = 1.0;
  const Model md = make_model(make_space(Kind::Masked, 1, 2), T_f);
  const ScoreOracle o(md, clean_uniform(md.space));
  const double t = T_f - s;
  EXPECT_NEAR(exact_score(o, t, {2}, JumpOp::unmask(0, 0)), 0.5, 1e-15);
  EXPECT_NEAR(exact_score(o, t, {2}, JumpOp::unmask(0, 1)), 0.5, 1e-15);
  EXPECT_THROW(exact_score(o, t, {1}, JumpOp::unmask(0, 0)), usage_error);
}

TEST(ExactScore, PoissonBrwIsOne) {
  const Model md = make_model(make_space(Kind::BRW, 2, 0, 30), 2.0);
  const ScoreOracle o(md, truncated_poisson(md.space));
  for (std::uint64_t x = 0; x < md.space.size(); ++x)
    for (const auto &op : backward_ops(md.space))
      if (apply_op_index(md.space, x, op)) { EXPECT_NEAR(o(0.7, x, op), 1.0, 1e-9); }
}

TEST(ExactScore, MatchesFrozenOracles) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 2.0);
  const ScoreOracle o(rw, from_vector(rw.space, {0.5, 0.3, 0.2}));
  const auto mu = o.marginal(0.5);
  for (int x = 0; x < 3; ++x) {
    EXPECT_NEAR(mu[static_cast<std::uint64_t>(x)], oracle::rw_score_mu_t[static_cast<std::size_t>(x)], 1e-14);
    EXPECT_NEAR(exact_score(o, 0.5, {x}, JumpOp::plus(0)), oracle::rw_score_plus[static_cast<std::size_t>(x)], 1e-13);
  }
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 40), 1.5);
  const ScoreOracle b(brw, point_mass(brw.space, {2}));
  for (int x = 0; x < 5; ++x)
    EXPECT_NEAR(exact_score(b, 0.5, {x}, JumpOp::plus(0)), oracle::brw_score_plus_delta2[static_cast<std::size_t>(x)],
                1e-12 * oracle::brw_score_plus_delta2[static_cast<std::size_t>(x)]);
  for (int x = 1; x <= 5; ++x)
    EXPECT_NEAR(exact_score(b, 0.5, {x}, JumpOp::minus(0)), oracle::brw_score_minus_delta2[static_cast<std::size_t>(x - 1)],
                1e-12 * oracle::brw_score_minus_delta2[static_cast<std::size_t>(x - 1)]);
}

TEST(ExactScore, UndefinedWhereMarginalVanishes) {
  const Model mk = make_model(make_space(Kind::Masked, 1, 2), 1.0);
  const ScoreOracle o(mk, clean_uniform(mk.space));
  // at t = T_f the marginal is mu*, which has no mass on MASK
  EXPECT_THROW(exact_score(o, 1.0, {2}, JumpOp::unmask(0, 0)), undefined_score);
  EXPECT_THROW(score_via_conditional(o, 1.0, {2}, JumpOp::unmask(0, 0)), undefined_score);
}

TEST(ScoreViaConditional, AgreesWithExactOnRandomLaws) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 2.0);
  const Model mk = make_model(make_space(Kind::Masked, 2, 2), 2.0);
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 30), 2.0);
  for (const Model *md : {&rw, &mk, &brw})
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto mu = random_full_support(md->space, seed, md->space.kind == Kind::BRW ? 8 : -1);
      const ScoreOracle o(*md, mu);
      for (double t : {0.0, 0.6, 1.4, 1.95}) {
        const auto m = o.marginal(t);
        for (std::uint64_t x = 0; x < md->space.size(); ++x) {
          if (!(m[x] > 0)) continue;
          for (const auto &op : backward_ops(md->space)) {
            if (!apply_op_index(md->space, x, op)) continue;
            const double u = o.eval(t, m, x, op);
            EXPECT_NEAR(score_via_conditional(o, t, decode(md->space, x), op), u, 1e-12 * std::max(1.0, u));
          }
        }
      }
    }
}

TEST(Perturbed, ZeroEpsIsIdentityAndSeedsAreStable) {
  const Model md = make_model(make_space(Kind::RW, 2, 3), 2.0);
  const auto mu = random_full_support(md.space, 4);
  const ScoreOracle o(md, mu, {0.0, 0.5, 1.0, 1.5});
  const auto p0 = perturbed_score(o, 0.0, 9);
  const auto pa = perturbed_score(o, 0.2, 9), pb = perturbed_score(o, 0.2, 9), pc = perturbed_score(o, 0.2, 10);
  bool differs = false;
  for (std::uint64_t x = 0; x < md.space.size(); ++x)
    for (const auto &op : backward_ops(md.space)) {
      EXPECT_EQ(p0(0.5, x, op), o(0.5, x, op));
      EXPECT_EQ(pa(0.5, x, op), pb(0.5, x, op));
      EXPECT_GT(pa(0.5, x, op), 0.0);
      const double r = pa(0.5, x, op) / o(0.5, x, op);
      EXPECT_LE(std::abs(std::log(r)), 0.2 + 1e-12);
      differs = differs || pa(0.5, x, op) != pc(0.5, x, op);
    }
  EXPECT_TRUE(differs);
  EXPECT_THROW(pa.perturbed(0.1, 1), usage_error);
}

TEST(Perturbed, FrozenNoiseIgnoresTimeWhiteNoiseDoesNot) {
  const Model md = make_model(make_space(Kind::RW, 2, 3), 2.0);
  const ScoreOracle o(md, random_full_support(md.space, 4), {0.5, 1.0});
  const auto w = perturbed_score(o, 0.2, 9), f = perturbed_score(o, 0.2, 9, Noise::Frozen);
  bool white_moves = false;
  for (std::uint64_t x = 0; x < md.space.size(); ++x)
    for (const auto &op : backward_ops(md.space)) {
      EXPECT_DOUBLE_EQ(f(0.5, x, op) / o(0.5, x, op), f(1.0, x, op) / o(1.0, x, op));
      white_moves = white_moves || std::abs(w(0.5, x, op) / o(0.5, x, op) - w(1.0, x, op) / o(1.0, x, op)) > 1e-12;
    }
  EXPECT_TRUE(white_moves);
}

TEST(EntropicLoss, ZeroForExactPositiveOtherwise) {
  const Model md = make_model(make_space(Kind::RW, 2, 3), 2.0);
  const TimeGrid g = grid_uniform(2.0, 8);
  const ScoreOracle o(md, random_full_support(md.space, 2), g.times);
  EXPECT_EQ(entropic_loss(o, o, g), 0.0);
  EXPECT_EQ(entropic_loss(o, o.perturbed(0.0, 3), g), 0.0);
  EXPECT_GT(entropic_loss(o, o.perturbed(0.1, 3), g), 0.0);
}

// u^theta = e^delta u gives loss = 2d (e^delta - delta - 1) sum h_k.
TEST(EntropicLoss, UniformMultiplicativePerturbation) {
  const Model md = make_model(make_space(Kind::RW, 2, 3), 2.0);
  const TimeGrid g = grid_uniform(2.0, 5, 0.1);
  const ScoreOracle o(md, random_full_support(md.space, 6), g.times);
  const double delta = 0.3;
  double manual = 0;
  for (int k = 0; k < g.K(); ++k) {
    const double t = g.times[static_cast<std::size_t>(k)];
    const auto mu = o.marginal(t);
    double e = 0;
    for (std::uint64_t x = 0; x < md.space.size(); ++x)
      for (const auto &op : backward_ops(md.space)) {
        const double u = o.eval(t, mu, x, op), ua = std::exp(delta) * u;
        e += mu[x] * ua * h_fn(u / ua);
      }
    manual += g.step(k + 1) * e;
  }
  EXPECT_NEAR(manual, 2 * 2 * (std::exp(delta) - delta - 1) * 1.9, 1e-12);
}

TEST(EntropicLoss, SingleIntervalIsOneTerm) {
  const Model md = make_model(make_space(Kind::RW, 1, 3), 1.0);
  const TimeGrid g = grid_uniform(1.0, 1);
  const ScoreOracle o(md, random_full_support(md.space, 8), g.times);
  const auto p = o.perturbed(0.3, 1);
  const auto mu = o.marginal(0.0);
  double e = 0;
  for (std::uint64_t x = 0; x < 3; ++x)
    for (const auto &op : backward_ops(md.space)) {
      const double u = o.eval(0.0, mu, x, op), ua = p.eval(0.0, mu, x, op);
      e += mu[x] * ua * h_fn(u / ua);
    }
  EXPECT_NEAR(entropic_loss(o, p, g), 1.0 * e, 1e-15);
}

TEST(BackwardRates, TimeReversalIdentity) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 2.0);
  const Model mk = make_model(make_space(Kind::Masked, 2, 2), 2.0, BetaSchedule::tabulated({0, 2}, {0.4, 1.0}));
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 20), 2.0);
  for (const Model *md : {&rw, &mk, &brw}) {
    const ScoreOracle o(*md, random_full_support(md->space, 12, 5));
    for (double t : {0.0, 0.9, 1.8}) {
      const auto mu = o.marginal(t);
      for (std::uint64_t x = 0; x < md->space.size(); ++x) {
        if (!(mu[x] > 0)) continue;
        for (const auto &br : backward_rates(o, t, decode(md->space, x))) {
          double q = 0;
          for (const auto &tr : forward_transitions(*md, md->T_f - t, br.to))
            if (tr.to == x) q += tr.rate;
          EXPECT_NEAR(mu[x] * br.rate, mu[br.to] * q, 1e-12);
          if (md->space.kind == Kind::Masked) { EXPECT_EQ(br.op.tag, JumpOp::Unmask); }
        }
      }
    }
  }
}

TEST(BackwardRates, PoissonBrwIsReversible) {
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 20), 2.0);
  const ScoreOracle o(brw, truncated_poisson(brw.space));
  for (int x = 0; x < 15; ++x)
    for (const auto &br : backward_rates(o, 1.0, {x}))
      EXPECT_NEAR(br.rate, forward_rate(brw, 0, {x}, br.op), 1e-9 * std::max(1, x));
}

TEST(Hjb, ZeroAtStationarityAndSecondOrder) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 2.0);
  const ScoreOracle u(rw, uniform(rw.space));
  EXPECT_NEAR(hjb_residual(u, 1.0, {1}, 1e-3), 0.0, 1e-12);
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 30), 2.0);
  const ScoreOracle p(brw, truncated_poisson(brw.space));
  EXPECT_NEAR(hjb_residual(p, 1.0, {3}, 1e-3), 0.0, 1e-9);
  EXPECT_THROW(hjb_residual(p, 1.0, {30}, 1e-3), usage_error);
  EXPECT_FALSE(hjb_defined(brw.space, 30));
  EXPECT_TRUE(hjb_defined(brw.space, 29));

  const ScoreOracle r(rw, random_full_support(rw.space, 3));
  for (int x = 0; x < 3; ++x) {
    const double a = hjb_residual(r, 1.0, {x}, 1e-3), b = hjb_residual(r, 1.0, {x}, 5e-4);
    EXPECT_GT(std::abs(a / b), 3.5);
    EXPECT_LT(std::abs(a / b), 4.5);
  }
  EXPECT_THROW(hjb_residual(r, 1e-4, {0}, 1e-3), usage_error);
}

TEST(Hjb, MaskedEquationHolds) {
  const Model mk = make_model(make_space(Kind::Masked, 2, 2), 3.0);
  const ScoreOracle o(mk, random_full_support(mk.space, 5));
  const int M = mk.space.mask();
  for (const State &x : {State{M, M}, State{0, M}, State{M, 1}}) {
    const double a = std::abs(hjb_residual(o, 1.5, x, 1e-3)), b = std::abs(hjb_residual(o, 1.5, x, 5e-4));
    EXPECT_LT(a, 1e-5);
    EXPECT_GT(a / b, 3.5);
    EXPECT_LT(a / b, 4.5);
  }
}
