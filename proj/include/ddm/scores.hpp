#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "state_space.hpp"

namespace ddm {

// h(a) = a log a - a + 1, h(0) = 1
inline double h_fn(double a) {
  if (a == 0) return 1.0;
  return a * std::log(a) - a + 1.0;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic noise in [-1, 1] keyed by (seed, x, y, t).
inline double noise_xi(std::uint64_t seed, std::uint64_t x, std::uint64_t y, double t) {
  std::uint64_t tb;
  std::memcpy(&tb, &t, sizeof tb);
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ x);
  h = splitmix64(h ^ (y * 0x9e3779b97f4a7c15ULL));
  h = splitmix64(h ^ tb);
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

// u = mu(y)/mu(x) (RW, Masked) or (mu/gamma)(y)/(mu/gamma)(x) (BRW) with y = op(x),
// read off a given marginal mu.
inline double score_from_marginal(const Model &md, const DiscreteDistribution &mu,
                                  std::uint64_t x, const JumpOp &op) {
  const Space &s = md.space;
  if (!op_legal(s, op)) throw usage_error("jump operator not legal for this space kind");
  if (s.kind == Kind::Masked && op.tag != JumpOp::Unmask)
    throw usage_error("masked backward jumps are Unmask operators");
  auto y = apply_op_index(s, x, op);
  if (!y) throw usage_error("jump operator undefined at this state");
  const double mx = mu[x];
  if (!(mx > 0)) throw undefined_score("marginal vanishes at the current state");
  double u = mu[*y] / mx;
  if (s.kind == Kind::BRW) {
    const int v = coord_of(s, x, op.coord);
    u *= op.tag == JumpOp::Plus ? static_cast<double>(v + 1) : 1.0 / static_cast<double>(v);
  }
  return u;
}

// White: xi keyed by (seed, x, y, t_k), independent across grid times.
// Frozen: xi keyed by (seed, x, y) only, a time-constant bias.
enum class Noise { White, Frozen };

struct ScoreMode {
  bool perturbed = false;
  double eps = 0;
  std::uint64_t seed = 0;
  Noise noise = Noise::White;
};

// Score oracle for backward time t: reads mu_{T_f - t}. Marginals at the
// construction times are cached; other times are computed on demand.
class ScoreOracle {
public:
  ScoreOracle(Model md, DiscreteDistribution mu_star, const std::vector<double> &times = {},
              ScoreMode mode = {})
      : md_(std::move(md)), mu_star_(std::move(mu_star)), mode_(mode),
        cache_(std::make_shared<std::map<double, DiscreteDistribution>>()) {
    check_on(md_.space, mu_star_);
    for (double t : times)
      if (!cache_->count(t)) cache_->emplace(t, compute(t));
  }

  const Model &model() const { return md_; }
  const DiscreteDistribution &mu_star() const { return mu_star_; }
  const ScoreMode &mode() const { return mode_; }

  DiscreteDistribution marginal(double t) const {
    auto it = cache_->find(t);
    if (it != cache_->end()) return it->second;
    return compute(t);
  }
  const DiscreteDistribution *cached(double t) const {
    auto it = cache_->find(t);
    return it == cache_->end() ? nullptr : &it->second;
  }

  // Perturbed copy sharing the marginal cache.
  ScoreOracle perturbed(double eps, std::uint64_t seed, Noise noise = Noise::White) const {
    if (mode_.perturbed) throw usage_error("perturbation needs an exact base oracle");
    if (!(eps >= 0)) throw usage_error("perturbation size must be >= 0");
    ScoreOracle o = *this;
    o.mode_ = {true, eps, seed, noise};
    return o;
  }

  double factor(double t, std::uint64_t x, std::uint64_t y) const {
    if (!mode_.perturbed || mode_.eps == 0) return 1.0;
    return std::exp(mode_.eps * noise_xi(mode_.seed, x, y, mode_.noise == Noise::White ? t : 0.0));
  }

  // Score given the marginal mu_{T_f - t} (avoids recomputation in loops).
  double eval(double t, const DiscreteDistribution &mu, std::uint64_t x, const JumpOp &op) const {
    const double u = score_from_marginal(md_, mu, x, op);
    if (!mode_.perturbed) return u;
    return u * factor(t, x, *apply_op_index(md_.space, x, op));
  }

  double operator()(double t, std::uint64_t x, const JumpOp &op) const {
    const DiscreteDistribution *c = cached(t);
    if (c) return eval(t, *c, x, op);
    return eval(t, compute(t), x, op);
  }

private:
  DiscreteDistribution compute(double t) const {
    if (!(t >= 0) || t > md_.T_f * (1 + 1e-12)) throw usage_error("score time outside [0, T_f]");
    return forward_marginal(md_, mu_star_, std::max(0.0, md_.T_f - t));
  }

  Model md_;
  DiscreteDistribution mu_star_;
  ScoreMode mode_;
  std::shared_ptr<std::map<double, DiscreteDistribution>> cache_;
};

inline ScoreOracle perturbed_score(const ScoreOracle &base, double eps, std::uint64_t seed,
                                   Noise noise = Noise::White) {
  return base.perturbed(eps, seed, noise);
}

inline double exact_score(const ScoreOracle &o, double t, const State &x, const JumpOp &op) {
  const std::uint64_t xi = encode(o.model().space, x);
  const DiscreteDistribution *c = o.cached(t);
  return score_from_marginal(o.model(), c ? *c : o.marginal(t), xi, op);
}

// Same score by explicit Bayes summation over x_0:
// E[ p(X_0, y) / p(X_0, x) | X_{T_f - t} = x ], times q(y, x)/q(x, y) for BRW.
inline double score_via_conditional(const ScoreOracle &o, double t, const State &xs,
                                    const JumpOp &op) {
  const Model &md = o.model();
  const Space &s = md.space;
  if (!op_legal(s, op) || (s.kind == Kind::Masked && op.tag != JumpOp::Unmask))
    throw usage_error("not a backward jump for this space");
  const std::uint64_t x = encode(s, xs);
  auto y = apply_op_index(s, x, op);
  if (!y) throw usage_error("jump operator undefined at this state");
  if (!(t >= 0) || t > md.T_f) throw usage_error("score time outside [0, T_f]");
  const KernelProduct P = kernel_product(md, 0.0, md.T_f - t);
  const DiscreteDistribution &mu = o.mu_star();
  double evidence = 0, num = 0;
  for (std::uint64_t x0 = 0; x0 < s.size(); ++x0) {
    const double w = mu[x0];
    if (w == 0) continue;
    const double px = P.entry(x0, x);
    if (px == 0) continue;
    evidence += w * px;
    num += w * px * (P.entry(x0, *y) / px);
  }
  if (!(evidence > 0)) throw undefined_score("marginal vanishes at the current state");
  double u = num / evidence;
  if (s.kind == Kind::BRW) {
    const int v = coord_of(s, x, op.coord);
    // q(y, x) / q(x, y)
    u *= op.tag == JumpOp::Plus ? static_cast<double>(v + 1) : 1.0 / static_cast<double>(v);
  }
  return u;
}

struct BackwardRate {
  JumpOp op;
  std::uint64_t to;
  double rate;
};

// q~_t(x, y) multiplying the score in the backward rate: q(x, y) for RW and
// BRW (reversible w.r.t. gamma), q_{T_f - t}(y, x) = beta(T_f - t) for Masked.
inline double auxiliary_rate(const Model &md, double t, std::uint64_t x, const JumpOp &op) {
  const Space &s = md.space;
  switch (s.kind) {
  case Kind::RW: return 0.5;
  case Kind::Masked: return md.beta(md.T_f - t);
  case Kind::BRW: {
    const int v = coord_of(s, x, op.coord);
    return op.tag == JumpOp::Plus ? 1.0 : static_cast<double>(v);
  }
  }
  return 0;
}

inline std::vector<BackwardRate> backward_rates_from(const ScoreOracle &o, double t,
                                                     const DiscreteDistribution &mu,
                                                     std::uint64_t x) {
  const Model &md = o.model();
  const Space &s = md.space;
  std::vector<BackwardRate> out;
  for (const JumpOp &op : backward_ops(s)) {
    auto y = apply_op_index(s, x, op);
    if (!y) continue;
    const double q = auxiliary_rate(md, t, x, op);
    if (q == 0) continue;
    out.push_back({op, *y, q * o.eval(t, mu, x, op)});
  }
  return out;
}

inline std::vector<BackwardRate> backward_rates(const ScoreOracle &o, double t_k,
                                                const State &x) {
  if (!(t_k >= 0) || !(t_k < o.model().T_f)) throw usage_error("t_k outside [0, T_f)");
  const DiscreteDistribution *c = o.cached(t_k);
  return backward_rates_from(o, t_k, c ? *c : o.marginal(t_k), encode(o.model().space, x));
}

// Sum over jumps of u_approx * h(u_true / u_approx) * w, averaged under
// mu_{T_f - t_k} and summed with weights h_{k+1}.
inline double entropic_loss(const ScoreOracle &u_true, const ScoreOracle &u_approx,
                            const TimeGrid &grid) {
  const Model &md = u_true.model();
  const Space &s = md.space;
  if (!(u_approx.model().space == s)) throw usage_error("oracles on different models");
  double loss = 0;
  for (int k = 0; k < grid.K(); ++k) {
    const double t = grid.times[static_cast<std::size_t>(k)];
    const double hk = grid.step(k + 1);
    const DiscreteDistribution *c = u_true.cached(t);
    const DiscreteDistribution mu = c ? *c : u_true.marginal(t);
    double e = 0;
    for (std::uint64_t x = 0; x < s.size(); ++x) {
      if (!(mu[x] > 0)) continue;
      double acc = 0;
      for (const JumpOp &op : backward_ops(s)) {
        auto y = apply_op_index(s, x, op);
        if (!y) continue;
        const double w = auxiliary_rate(md, t, x, op);
        if (w == 0) continue;
        const double u = u_true.eval(t, mu, x, op);
        const double ua = u_approx.eval(t, mu, x, op);
        if (ua == 0) {
          if (u > 0) return std::numeric_limits<double>::infinity();
          continue;
        }
        const double weight = s.kind == Kind::RW ? 1.0 : w;
        acc += weight * ua * h_fn(u / ua);
      }
      e += mu[x] * acc;
    }
    loss += hk * e;
  }
  return loss;
}

namespace detail {

inline double log_relative(const Model &md, const DiscreteDistribution &mu, std::uint64_t x) {
  double v = std::log(mu[x]);
  if (md.space.kind == Kind::BRW)
    for (int l = 0; l < md.space.d; ++l) v -= log_poisson1(coord_of(md.space, x, l));
  return v;
}

} // namespace detail

// BRW states with a coordinate at the cap need mu at cap + 1, outside the box.
inline bool hjb_defined(const Space &s, std::uint64_t x) {
  if (s.kind != Kind::BRW) return true;
  for (int i = 0; i < s.d; ++i)
    if (coord_of(s, x, i) >= s.cap) return false;
  return true;
}

// Central difference of dV/dt (RW, BRW) or du/dt (Masked, per Unmask op)
// minus the right-hand side of the corresponding evolution equation.
// Masked without an op returns the largest magnitude over Unmask ops at x.
inline double hjb_residual(const ScoreOracle &o, double t, const State &xs, double dt,
                           std::optional<JumpOp> mop = std::nullopt) {
  const Model &md = o.model();
  const Space &s = md.space;
  if (!(dt > 0) || !(t - dt > 0) || !(t + dt < md.T_f))
    throw usage_error("hjb residual needs t +- dt inside (0, T_f)");
  const std::uint64_t x = encode(s, xs);
  if (!hjb_defined(s, x)) throw usage_error("hjb residual undefined at a truncation-cap state");
  const DiscreteDistribution mp = o.marginal(t + dt), mm = o.marginal(t - dt), m0 = o.marginal(t);

  if (s.kind != Kind::Masked) {
    // V_t = -log mu_{T_f - t} (RW) or -log(mu/gamma) (BRW)
    const double dV = (-detail::log_relative(md, mp, x) + detail::log_relative(md, mm, x)) / (2 * dt);
    const double V0 = -detail::log_relative(md, m0, x);
    double rhs = 0;
    for (const JumpOp &op : forward_ops(s)) {
      auto y = apply_op_index(s, x, op);
      if (!y) continue;
      const double q = forward_rate_index(md, 0.0, x, op);
      const double Vy = -detail::log_relative(md, m0, *y);
      rhs += q * (std::exp(V0 - Vy) - 1.0);
    }
    return dV - rhs;
  }

  const double b = md.beta(md.T_f - t);
  auto one = [&](const JumpOp &op) {
    const std::uint64_t y = *apply_op_index(s, x, op);
    const double du = (score_from_marginal(md, mp, x, op) - score_from_marginal(md, mm, x, op)) / (2 * dt);
    const double u = score_from_marginal(md, m0, x, op);
    double sx = 0, sy = 0;
    for (int k = 0; k < s.d; ++k) {
      for (int n = 0; n < s.m; ++n) {
        const JumpOp un = JumpOp::unmask(k, n);
        if (coord_of(s, x, k) == s.mask()) sx += score_from_marginal(md, m0, x, un);
        if (k != op.coord && coord_of(s, y, k) == s.mask()) sy += score_from_marginal(md, m0, y, un);
      }
    }
    return du - b * u * (1.0 + sx - sy);
  };
  if (mop) {
    if (mop->tag != JumpOp::Unmask || coord_of(s, x, mop->coord) != s.mask())
      throw usage_error("masked hjb residual needs an Unmask op on a masked coordinate");
    return one(*mop);
  }
  double r = 0;
  for (int i = 0; i < s.d; ++i) {
    if (coord_of(s, x, i) != s.mask()) continue;
    for (int j = 0; j < s.m; ++j) {
      const double v = one(JumpOp::unmask(i, j));
      if (std::abs(v) > std::abs(r)) r = v;
    }
  }
  return r;
}

} // namespace ddm
