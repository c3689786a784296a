#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ddm/metrics.hpp"
#include "ddm/sampler.hpp"
#include "oracles/frozen.hpp"

using namespace ddm;

namespace {

DiscreteDistribution clean_random(const Space &s, std::uint64_t seed) { return random_full_support(s, seed); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

} // namespace

TEST(Divergence, Basics) {
  const Space s = make_space(Kind::RW, 2, 3);
  const auto mu = random_full_support(s, 1), nu = random_full_support(s, 2);
  EXPECT_EQ(kl(mu, mu), 0.0);
  EXPECT_EQ(tv(mu, mu), 0.0);
  EXPECT_NEAR(kl(point_mass(s, {1, 2}), uniform(s)), 2 * std::log(3.0), 1e-15);
  EXPECT_TRUE(std::isinf(kl(mu, point_mass(s, {0, 0}))));
  EXPECT_GE(kl(mu, nu), 2 * tv(mu, nu) * tv(mu, nu));
  EXPECT_THROW(kl(mu, uniform(make_space(Kind::RW, 1, 9))), usage_error);
}

TEST(Divergence, PinskerOnManyPairs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Space s = make_space(Kind::RW, 1 + static_cast<int>(seed % 3), 3);
    const auto a = random_full_support(s, seed, -1, 0.0), b = random_full_support(s, seed + 1000, -1, 0.0);
    EXPECT_GE(kl(a, b) + 1e-15, 2 * tv(a, b) * tv(a, b));
  }
}

TEST(Divergence, MaskedEarlyStoppingTv) {
  const Model mk = make_model(make_space(Kind::Masked, 2, 3), 2.0);
  const auto mu = clean_random(mk.space, 4);
  for (double eta : {0.01, 0.1, 0.5})
    EXPECT_LE(tv(mu, forward_marginal(mk, mu, eta)), 1 - std::exp(-2 * eta) + 1e-15);
}

TEST(Fisher, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 2, 4), 1.0);
  EXPECT_NEAR(fisher_information(rw, uniform(rw.space)), 0.0, 1e-15);
  const Model rw2 = make_model(make_space(Kind::RW, 1, 2), 1.0);
  EXPECT_NEAR(fisher_information(rw2, from_vector(rw2.space, {0.25, 0.75})), oracle::fisher_rw_m2_quarter[0], 1e-15);
  const Model brw = make_model(make_space(Kind::BRW, 2, 0, 20), 1.0);
  EXPECT_NEAR(fisher_information(brw, truncated_poisson(brw.space)), 0.0, 1e-12);
}

// h(0) = 1: a zero-mass neighbour contributes a finite term.
TEST(Fisher, ZeroMassNeighbourIsFinite) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 1.0);
  const DiscreteDistribution mu{rw.space, {0.5, 0.5, 0.0}, 0.0};
  EXPECT_NEAR(fisher_information(rw, mu), 1.0, 1e-15);
}

TEST(Fisher, PermutationInvariant) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 1.0);
  const auto mu = random_full_support(rw.space, 9);
  DiscreteDistribution sw = mu;
  for (std::uint64_t x = 0; x < 9; ++x) sw.p[encode(rw.space, {coord_of(rw.space, x, 1), coord_of(rw.space, x, 0)})] = mu[x];
  EXPECT_NEAR(fisher_information(rw, mu), fisher_information(rw, sw), 1e-14);
}

TEST(Fisher, RwNonIncreasingInForwardTime) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 5.0);
  const auto mu = random_full_support(rw.space, 13);
  double prev = INFINITY;
  for (double s : linspace(0, 5, 30)) {
    const double I = fisher_information(rw, forward_marginal(rw, mu, s));
    EXPECT_LE(I, prev + 1e-10);
    prev = I;
  }
}

TEST(Moments, Examples) {
  const Space s = make_space(Kind::BRW, 2, 0, 30);
  EXPECT_EQ(moments(point_mass(s, {0, 0}), 1), 0.0);
  EXPECT_EQ(moments(point_mass(s, {0, 0}), 2), 0.0);
  const auto g = truncated_poisson(s);
  EXPECT_NEAR(moments(g, 1), 2.0, 1e-12);
  EXPECT_NEAR(moments(g, 2), 4.0, 1e-12);
  const Model md = make_model(make_space(Kind::BRW, 1, 0, 30), 3.0);
  for (double t : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(moments(forward_marginal(md, point_mass(md.space, {0}), t), 1), 1 - std::exp(-t), 1e-13);
    const auto mu = point_mass(md.space, {4});
    const auto mt = forward_marginal(md, mu, t);
    EXPECT_NEAR(moments(mt, 1), brw_m1(4, 1, t), 1e-12);
    EXPECT_NEAR(moments(mt, 2), brw_m2(16, 4, 1, t), 1e-11);
  }
  EXPECT_THROW(moments(g, 3), usage_error);
}

TEST(EntropyDecay, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 4.0);
  EXPECT_TRUE(entropy_decay_check(rw, uniform(rw.space), linspace(0, 4, 5)).pass());
  const auto rep = entropy_decay_check(rw, from_vector(rw.space, {0.7, 0.2, 0.1}), {1.0});
  EXPECT_NEAR(rep.checks[0].measured, oracle::rw_kl_t1[0], 1e-14);
  EXPECT_NEAR(rep.checks[0].bound, oracle::rw_kl_t1[1], 1e-14);
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_TRUE(entropy_decay_check(rw, random_full_support(rw.space, seed), linspace(0, 4, 20)).pass());

  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 40), 5.0);
  const auto d0 = point_mass(brw.space, {0});
  EXPECT_NEAR(kl_to_reference(brw.space, d0), 1.0, 1e-15);
  const auto br = entropy_decay_check(brw, d0, linspace(0, 5, 20));
  EXPECT_TRUE(br.pass());
}

TEST(FisherBound, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 4.0);
  EXPECT_TRUE(fisher_bound_check(rw, random_full_support(rw.space, 3), 4.0, 2.0).pass());
  const auto u = fisher_bound_check(rw, uniform(rw.space), 4.0, 2.0);
  EXPECT_TRUE(u.pass());
  EXPECT_NEAR(u.checks[0].measured, 0.0, 1e-15);
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 40), 4.0);
  for (double t : {1.0, 2.0, 3.0}) EXPECT_TRUE(fisher_bound_check(brw, point_mass(brw.space, {2}), 4.0, t).pass());
  EXPECT_THROW(fisher_bound_check(rw, uniform(rw.space), 4.0, 4.0), usage_error);
}

// Full-Jensen masked form always holds; the proof form drops the j != x_0 terms.
TEST(FisherBound, MaskedForms) {
  const Model mk = make_model(make_space(Kind::Masked, 2, 2), 6.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (double t : linspace(0, 5.8, 12)) {
      const auto r = fisher_bound_check(mk, random_full_support(mk.space, seed), 6.0, t);
      const auto &full = r.checks[1];
      EXPECT_EQ(full.name, "masked_fisher_full_jensen");
      EXPECT_TRUE(full.pass) << t;
    }
  // proof form at m = 2, d = 1, uniform mu*, T_f - t = 2: measured above the bound
  const Model one = make_model(make_space(Kind::Masked, 1, 2), 2.0);
  const auto r = fisher_bound_check(one, from_vector(one.space, {0.5, 0.5, 0.0}), 2.0, 0.0);
  const double a = std::exp(-2.0);
  const double ratio = (a / 2) / (1 - a);
  EXPECT_NEAR(r.checks[0].measured, 2 * a + 2 * (1 - a) * h_fn(ratio), 1e-14);
  EXPECT_FALSE(r.checks[0].pass);
}

TEST(ScoreEvolution, Rw) {
  const Model rw = make_model(make_space(Kind::RW, 1, 3), 4.0);
  EXPECT_TRUE(score_evolution_check(rw, random_full_support(rw.space, 3), 4.0, linspace(0, 3.9, 30)).pass());
}

TEST(ScoreEvolution, Masked) {
  const Model mk = make_model(make_space(Kind::Masked, 2, 3), 4.0);
  const auto rep = score_evolution_check(mk, random_full_support(mk.space, 2), 4.0, linspace(0.5, 3.9, 10));
  EXPECT_TRUE(rep.pass());
  for (const auto &c : rep.checks)
    if (c.name == "masked_g_growth") { EXPECT_LE(std::abs(c.measured / c.bound - 1), 1e-8); }
  const Model ramp = make_model(make_space(Kind::Masked, 1, 2), 3.0, BetaSchedule::tabulated({0, 1.5, 3}, {0.2, 0.6, 1.0}));
  EXPECT_TRUE(score_evolution_check(ramp, random_full_support(ramp.space, 5), 3.0, linspace(0.0, 2.9, 8)).pass());
}

TEST(ScoreEvolution, Brw) {
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 40), 4.0);
  const auto r1 = score_evolution_check(brw, point_mass(brw.space, {1}), 4.0, linspace(0, 3.9, 12));
  EXPECT_TRUE(r1.pass());
  for (const auto &c : r1.checks)
    if (c.name == "brw_y_plus_growth") { EXPECT_NEAR(c.measured, 0.0, 1e-10); }
  const auto r2 = score_evolution_check(brw, random_full_support(brw.space, 7, 6), 4.0, linspace(0.5, 3.9, 12));
  EXPECT_TRUE(r2.pass());
}

TEST(TheoremTerms, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 4.0);
  TheoremParams p;
  p.T_f = 4.0;
  p.grid = grid_uniform(4.0, 20);
  p.target_eps = 0.1;
  const auto r = theorem_terms(rw, uniform(rw.space), p);
  EXPECT_EQ(r.term("discretization"), 0.0);
  EXPECT_NEAR(r.term("recipe_Tf"), oracle::recipe_rw_horizon[0], 1e-12);
  EXPECT_NEAR(r.term("initialization_dlogm"), std::exp(-16 * std::numbers::pi * std::numbers::pi * 4 / 225) * 2 * std::log(3.0), 1e-15);

  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 30), 4.0);
  TheoremParams q;
  q.T_f = 4.0;
  q.eta = 0.01;
  q.grid = grid_uniform(4.0, 20, 0.01);
  const auto b = theorem_terms(brw, point_mass(brw.space, {1}), q);
  EXPECT_NEAR(b.term("early_stopping"), oracle::brw_es_term[0], 1e-15);

  const Model mk = make_model(make_space(Kind::Masked, 1, 2), 3.0);
  TheoremParams m;
  m.T_f = 3.0;
  m.grid = grid_uniform(3.0, 10);
  const auto mr = theorem_terms(mk, random_full_support(mk.space, 1), m);
  EXPECT_FALSE(mr.pass()); // eta = 0 violates the masked hypothesis, reported only
  const double a = std::exp(-3.0);
  EXPECT_NEAR(mr.term("initialization"), a * (1 + std::log(2 / a)), 1e-15);
}
