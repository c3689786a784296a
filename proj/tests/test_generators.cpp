#include <gtest/gtest.h>

#include <cmath>

#include "ddm/distribution.hpp"
#include "ddm/generators.hpp"

using namespace ddm;

TEST(ForwardRate, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 1.0);
  EXPECT_EQ(forward_rate(rw, 0.3, {1, 2}, JumpOp::plus(0)), 0.5);
  const Model mk = make_model(make_space(Kind::Masked, 2, 3), 1.0);
  EXPECT_EQ(forward_rate(mk, 0.3, {1, 2}, JumpOp::mask(1)), 1.0);
  EXPECT_EQ(forward_rate(mk, 0.3, {1, 3}, JumpOp::mask(1)), 0.0);
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 20), 1.0);
  EXPECT_EQ(forward_rate(brw, 0.0, {3}, JumpOp::minus(0)), 3.0);
  EXPECT_EQ(forward_rate(brw, 0.0, {3}, JumpOp::plus(0)), 1.0);
  EXPECT_THROW(forward_rate(rw, 0, {0, 0}, JumpOp::mask(0)), usage_error);
}

TEST(ForwardRate, MaskedScalesWithBeta) {
  const Model mk = make_model(make_space(Kind::Masked, 1, 2), 2.0, BetaSchedule::tabulated({0, 2}, {0.2, 0.6}));
  EXPECT_NEAR(forward_rate(mk, 1.0, {0}, JumpOp::mask(0)), 0.4, 1e-15);
}

TEST(TotalRate, Examples) {
  for (int m : {3, 4, 7}) {
    const Model rw = make_model(make_space(Kind::RW, 3, m), 1.0);
    for (std::uint64_t x = 0; x < rw.space.size(); ++x) EXPECT_DOUBLE_EQ(total_rate_index(rw, 0, x), 3.0);
  }
  const Model mk = make_model(make_space(Kind::Masked, 2, 2), 1.0);
  EXPECT_EQ(total_rate(mk, 0.5, {2, 2}), 0.0);
  EXPECT_EQ(total_rate(mk, 0.5, {0, 2}), 1.0);
  const Model brw = make_model(make_space(Kind::BRW, 2, 0, 20), 1.0);
  EXPECT_EQ(total_rate(brw, 0.0, {2, 0}), 4.0);
}

// m = 2: the two neighbours coincide and their rates add up to 1
TEST(TotalRate, M2Accumulates) {
  const Model rw = make_model(make_space(Kind::RW, 1, 2), 1.0);
  const auto tr = forward_transitions(rw, 0, 0);
  double to1 = 0;
  for (const auto &t : tr) to1 += t.to == 1 ? t.rate : 0.0;
  EXPECT_EQ(to1, 1.0);
  EXPECT_EQ(diagonal_index(rw, 0, 0), -1.0);
}

TEST(TotalRate, RowsConservativeAndBounded) {
  const Model mk = make_model(make_space(Kind::Masked, 3, 3), 2.0, BetaSchedule::tabulated({0, 1, 2}, {0.1, 0.5, 1.0}));
  const Model rw = make_model(make_space(Kind::RW, 2, 5), 1.0);
  const Model brw = make_model(make_space(Kind::BRW, 2, 0, 6), 1.0);
  for (const Model *md : {&mk, &rw, &brw})
    for (double t : {0.0, 0.7, 1.9})
      for (std::uint64_t x = 0; x < md->space.size(); ++x) {
        double off = 0;
        for (const auto &tr : forward_transitions(*md, t, x)) {
          EXPECT_GE(tr.rate, 0.0);
          off += tr.rate;
        }
        if (interior(md->space, x)) { EXPECT_NEAR(off + diagonal_index(*md, t, x), 0.0, 1e-14); }
        else { EXPECT_GT(boundary_leak_rate(*md, t, x), 0.0); }
        if (md->space.kind == Kind::Masked) { EXPECT_LE(off, md->space.d * 1.0); }
      }
}

TEST(InvariantResidual, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 2, 5), 1.0);
  EXPECT_LE(invariant_residual(rw, uniform(rw.space)), 1e-13);
  const Model brw = make_model(make_space(Kind::BRW, 1, 0, 20), 1.0);
  EXPECT_LE(invariant_residual(brw, truncated_poisson(brw.space)), 1e-10);
  const Model brw2 = make_model(make_space(Kind::BRW, 2, 0, 20), 1.0);
  EXPECT_LE(invariant_residual(brw2, truncated_poisson(brw2.space)), 1e-10);
  const Model mk = make_model(make_space(Kind::Masked, 2, 3), 1.0);
  EXPECT_EQ(invariant_residual(mk, point_mass(mk.space, {3, 3}), 0.4), 0.0);
  // a non-invariant law is detected
  EXPECT_GT(invariant_residual(rw, point_mass(rw.space, {0, 0})), 0.1);
}

TEST(Assumptions, Examples) {
  const Model rw = make_model(make_space(Kind::RW, 2, 3), 1.0);
  EXPECT_TRUE(validate_assumptions(rw, uniform(rw.space)).all_pass());
  EXPECT_FALSE(validate_assumptions(rw, point_mass(rw.space, {0, 1})).find("RW2")->pass);

  const Model mk = make_model(make_space(Kind::Masked, 1, 2), 1.0);
  EXPECT_TRUE(validate_assumptions(mk, from_vector(mk.space, {0.5, 0.5, 0.0})).all_pass());
  EXPECT_FALSE(validate_assumptions(mk, from_vector(mk.space, {0.4, 0.4, 0.2})).find("M2")->pass);

  const Model mk_dec = make_model(make_space(Kind::Masked, 1, 2), 1.0, BetaSchedule::tabulated({0, 1}, {0.9, 0.3}));
  EXPECT_FALSE(validate_assumptions(mk_dec, from_vector(mk.space, {0.5, 0.5, 0.0})).find("M1")->pass);

  const Model brw = make_model(make_space(Kind::BRW, 2, 0, 15), 1.0);
  const auto r = validate_assumptions(brw, point_mass(brw.space, {3, 1}));
  EXPECT_TRUE(r.find("non-explosion")->pass);
  EXPECT_TRUE(r.find("H1")->pass);
  EXPECT_TRUE(r.all_pass());
}

TEST(Beta, ScheduleBasics) {
  EXPECT_THROW(BetaSchedule::constant(0.0), usage_error);
  EXPECT_THROW(BetaSchedule::constant(1.5), usage_error);
  EXPECT_THROW(BetaSchedule::tabulated({0.1, 1}, {0, 1}), usage_error);
  EXPECT_THROW(BetaSchedule::tabulated({0, 1, 1}, {0, 1, 1}), usage_error);
  const auto b = BetaSchedule::tabulated({0, 1}, {0, 1});
  EXPECT_NEAR(b.integral(1.0), 0.5, 1e-15);
  EXPECT_NEAR(b.integral(0.5), 0.125, 1e-15);
  EXPECT_NEAR(b.integral(0.25, 0.75), 0.25, 1e-15);
  EXPECT_THROW(b(1.5), usage_error);
  EXPECT_THROW(make_model(make_space(Kind::Masked, 1, 2), 2.0, b), usage_error);
}
