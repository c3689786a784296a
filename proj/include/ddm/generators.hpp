#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "state_space.hpp"

namespace ddm {

// beta(t) for the masked process: a constant, or piecewise linear through
// samples (t_0 = 0 < t_1 < ...). Integrals use the trapezoid rule on the
// sample grid, exact for the interpolant.
class BetaSchedule {
public:
  enum class Type { Constant, Tabulated };

  static BetaSchedule constant(double v) {
    if (!(v > 0 && v <= 1)) throw usage_error("constant beta must lie in (0, 1]");
    BetaSchedule b;
    b.type_ = Type::Constant;
    b.value_ = v;
    return b;
  }

  static BetaSchedule tabulated(std::vector<double> ts, std::vector<double> vs) {
    if (ts.size() < 2 || ts.size() != vs.size())
      throw usage_error("tabulated beta needs >= 2 matching samples");
    if (ts.front() != 0.0) throw usage_error("tabulated beta must start at t = 0");
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1])) throw usage_error("tabulated beta times must increase");
    for (double v : vs)
      if (!(v >= 0 && v <= 1)) throw usage_error("tabulated beta values must lie in [0, 1]");
    BetaSchedule b;
    b.type_ = Type::Tabulated;
    b.ts_ = std::move(ts);
    b.vs_ = std::move(vs);
    return b;
  }

  Type type() const { return type_; }
  const std::vector<double> &times() const { return ts_; }
  const std::vector<double> &values() const { return vs_; }
  double horizon() const { return type_ == Type::Constant ? INFINITY : ts_.back(); }

  double operator()(double t) const {
    check(t);
    if (type_ == Type::Constant) return value_;
    std::size_t k = segment(t);
    const double w = (t - ts_[k]) / (ts_[k + 1] - ts_[k]);
    return vs_[k] + w * (vs_[k + 1] - vs_[k]);
  }

  // int_0^t beta
  double integral(double t) const {
    check(t);
    if (type_ == Type::Constant) return value_ * t;
    double acc = 0;
    std::size_t k = 0;
    for (; k + 1 < ts_.size() && ts_[k + 1] <= t; ++k)
      acc += 0.5 * (vs_[k] + vs_[k + 1]) * (ts_[k + 1] - ts_[k]);
    if (k + 1 < ts_.size() && t > ts_[k]) acc += 0.5 * (vs_[k] + (*this)(t)) * (t - ts_[k]);
    return acc;
  }

  double integral(double s, double t) const { return integral(t) - integral(s); }

  bool non_decreasing() const {
    for (std::size_t i = 1; i < vs_.size(); ++i)
      if (vs_[i] < vs_[i - 1]) return false;
    return true;
  }

  double sup() const {
    return type_ == Type::Constant ? value_ : *std::max_element(vs_.begin(), vs_.end());
  }

private:
  void check(double t) const {
    if (!(t >= 0) || t > horizon() * (1 + 1e-14))
      throw usage_error("time outside the beta schedule range");
  }
  std::size_t segment(double t) const {
    auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - ts_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, ts_.size() - 2);
  }

  Type type_ = Type::Constant;
  double value_ = 1.0;
  std::vector<double> ts_, vs_;
};

struct Model {
  Space space;
  BetaSchedule beta = BetaSchedule::constant(1.0);
  double T_f = 1.0;
};

inline Model make_model(const Space &s, double T_f,
                        BetaSchedule beta = BetaSchedule::constant(1.0)) {
  if (!(T_f > 0)) throw usage_error("T_f must be positive");
  if (s.kind == Kind::Masked && beta.horizon() < T_f * (1 - 1e-14))
    throw usage_error("beta schedule does not cover [0, T_f]");
  return {s, std::move(beta), T_f};
}

inline double beta_at(const Model &md, double t) {
  return md.space.kind == Kind::Masked ? md.beta(t) : 1.0;
}

// Rate contributed by one operator at index idx (0 when undefined there).
inline double forward_rate_index(const Model &md, double t, std::uint64_t idx,
                                 const JumpOp &op) {
  const Space &s = md.space;
  if (!op_legal(s, op)) throw usage_error("jump operator not legal for this space kind");
  switch (s.kind) {
  case Kind::RW: return 0.5;
  case Kind::Masked:
    if (op.tag == JumpOp::Unmask) return 0.0;
    return coord_of(s, idx, op.coord) != s.mask() ? md.beta(t) : 0.0;
  case Kind::BRW: {
    const int v = coord_of(s, idx, op.coord);
    if (op.tag == JumpOp::Plus) return v < s.cap ? 1.0 : 0.0;
    return static_cast<double>(v);
  }
  }
  return 0.0;
}

inline double forward_rate(const Model &md, double t, const State &x, const JumpOp &op) {
  return forward_rate_index(md, t, encode(md.space, x), op);
}

struct Transition {
  std::uint64_t to;
  double rate;
};

// Off-diagonal forward transitions out of idx, one entry per operator
// (for RW m = 2 the two entries share a target and add up).
inline std::vector<Transition> forward_transitions(const Model &md, double t,
                                                   std::uint64_t idx) {
  std::vector<Transition> out;
  for (const JumpOp &op : forward_ops(md.space)) {
    auto y = apply_op_index(md.space, idx, op);
    if (!y) continue;
    const double r = forward_rate_index(md, t, idx, op);
    if (r > 0) out.push_back({*y, r});
  }
  return out;
}

// Sum of off-diagonal rates over legal jumps (the BRW cap boundary is excluded).
inline double total_rate_index(const Model &md, double t, std::uint64_t idx) {
  double q = 0;
  for (const auto &tr : forward_transitions(md, t, idx)) q += tr.rate;
  return q;
}

inline double total_rate(const Model &md, double t, const State &x) {
  return total_rate_index(md, t, encode(md.space, x));
}

// Generator diagonal. Equals -total_rate except at the BRW cap, where it
// keeps the untruncated value -(d + sum x) so the box leaks mass.
inline double diagonal_index(const Model &md, double t, std::uint64_t idx) {
  if (md.space.kind != Kind::BRW) return -total_rate_index(md, t, idx);
  double q = md.space.d;
  for (int l = 0; l < md.space.d; ++l) q += coord_of(md.space, idx, l);
  return -q;
}

inline bool interior(const Space &s, std::uint64_t idx) {
  if (s.kind != Kind::BRW) return true;
  for (int l = 0; l < s.d; ++l)
    if (coord_of(s, idx, l) >= s.cap) return false;
  return true;
}

// max over interior x of |sum_y gamma(y) q_t(y, x)|
inline double invariant_residual(const Model &md, const DiscreteDistribution &gamma,
                                 double t = 0.0) {
  check_on(md.space, gamma);
  const std::uint64_t n = md.space.size();
  std::vector<double> flow(static_cast<std::size_t>(n), 0.0);
  for (std::uint64_t y = 0; y < n; ++y) {
    const double g = gamma[y];
    if (g == 0) continue;
    flow[static_cast<std::size_t>(y)] += g * diagonal_index(md, t, y);
    for (const auto &tr : forward_transitions(md, t, y))
      flow[static_cast<std::size_t>(tr.to)] += g * tr.rate;
  }
  double r = 0;
  for (std::uint64_t x = 0; x < n; ++x)
    if (interior(md.space, x)) r = std::max(r, std::abs(flow[static_cast<std::size_t>(x)]));
  return r;
}

// Mass the truncated BRW generator loses per unit time from each state.
inline double boundary_leak_rate(const Model &md, double t, std::uint64_t idx) {
  return -diagonal_index(md, t, idx) - total_rate_index(md, t, idx);
}

struct AssumptionCheck {
  std::string name;
  bool pass;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto &c) { return c.pass; });
  }
  const AssumptionCheck *find(const std::string &name) const {
    for (const auto &c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline AssumptionReport validate_assumptions(const Model &md, const DiscreteDistribution &mu) {
  check_on(md.space, mu);
  const Space &s = md.space;
  AssumptionReport rep;
  const std::uint64_t n = s.size();

  // H1: finite, nonnegative, conservative rows (BRW: conservative up to the cap leak).
  bool h1 = true;
  double sup_q = 0;
  const double t_probe[] = {0.0, 0.5 * md.T_f, md.T_f};
  for (double t : t_probe) {
    for (std::uint64_t x = 0; x < n; ++x) {
      double off = 0;
      for (const auto &tr : forward_transitions(md, t, x)) {
        if (!(tr.rate >= 0) || !std::isfinite(tr.rate)) h1 = false;
        off += tr.rate;
      }
      const double diag = diagonal_index(md, t, x);
      sup_q = std::max(sup_q, -diag);
      if (interior(s, x) && std::abs(off + diag) > 1e-12 * (1 + off)) h1 = false;
    }
  }
  rep.checks.push_back({"H1", h1, "sup total rate " + std::to_string(sup_q)});

  switch (s.kind) {
  case Kind::RW: {
    bool full = std::all_of(mu.p.begin(), mu.p.end(), [](double v) { return v > 0; });
    rep.checks.push_back({"RW2", full, full ? "full support" : "zero-mass state present"});
    break;
  }
  case Kind::Masked: {
    bool m1 = true;
    if (md.beta.type() == BetaSchedule::Type::Tabulated) m1 = md.beta.non_decreasing();
    m1 = m1 && md.beta.sup() <= 1.0;
    rep.checks.push_back({"M1", m1, m1 ? "beta non-decreasing in [0,1]" : "beta not monotone"});
    bool m2 = true, full = true;
    for (std::uint64_t x = 0; x < n; ++x) {
      const bool clean = num_masked(s, x) == 0;
      if (!clean && mu[x] > 0) m2 = false;
      if (clean && !(mu[x] > 0)) full = false;
    }
    rep.checks.push_back({"M2", m2 && full,
                          !m2 ? "mass on a masked state" : (full ? "ok" : "not full support")});
    break;
  }
  case Kind::BRW: {
    double m2 = 0;
    for (std::uint64_t x = 0; x < n; ++x)
      for (int l = 0; l < s.d; ++l) {
        const double v = coord_of(s, x, l);
        m2 += mu[x] * v * v;
      }
    rep.checks.push_back({"BRW2", std::isfinite(m2), "m2 = " + std::to_string(m2)});
    // Lyapunov drift with V(x) = d + sum x: sum_y V(y) q(x, y) = d - sum x <= V(x).
    bool drift = true;
    for (std::uint64_t x = 0; x < n; ++x) {
      if (!interior(s, x)) continue;
      auto V = [&](std::uint64_t y) {
        double v = s.d;
        for (int l = 0; l < s.d; ++l) v += coord_of(s, y, l);
        return v;
      };
      double qv = 0;
      for (const auto &tr : forward_transitions(md, 0.0, x)) qv += tr.rate * (V(tr.to) - V(x));
      if (qv > V(x)) drift = false;
    }
    rep.checks.push_back({"non-explosion", drift, "drift of V(x) = d + sum x"});
    break;
  }
  }
  return rep;
}

} // namespace ddm
