#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "scores.hpp"
#include "state_space.hpp"

namespace ddm {

enum class Divergence { KL, TV };

inline double divergence(const DiscreteDistribution &mu, const DiscreteDistribution &nu,
                         Divergence kind) {
  check_same_space(mu, nu);
  double acc = 0;
  if (kind == Divergence::TV) {
    for (std::size_t i = 0; i < mu.p.size(); ++i) acc += std::abs(mu.p[i] - nu.p[i]);
    return 0.5 * acc;
  }
  for (std::size_t i = 0; i < mu.p.size(); ++i) {
    if (mu.p[i] == 0) continue;
    if (nu.p[i] == 0) return std::numeric_limits<double>::infinity();
    acc += mu.p[i] * std::log(mu.p[i] / nu.p[i]);
  }
  return std::max(acc, 0.0);
}

inline double kl(const DiscreteDistribution &mu, const DiscreteDistribution &nu) {
  return divergence(mu, nu, Divergence::KL);
}
inline double tv(const DiscreteDistribution &mu, const DiscreteDistribution &nu) {
  return divergence(mu, nu, Divergence::TV);
}

// Invariant law as seen from the box: Uniform for RW, the untruncated
// Poisson(1) product masses for BRW (sums to 1 - tail).
inline DiscreteDistribution reference_law(const Space &s) {
  if (s.kind == Kind::RW) return uniform(s);
  if (s.kind != Kind::BRW) throw usage_error("no invariant reference law for the masked model");
  DiscreteDistribution g{s, std::vector<double>(static_cast<std::size_t>(s.size())), 0.0};
  for (std::uint64_t x = 0; x < s.size(); ++x) g.p[static_cast<std::size_t>(x)] = poisson_product_mass(s, x);
  g.leak = 1.0 - g.total();
  return g;
}

inline double kl_to_reference(const Space &s, const DiscreteDistribution &mu) {
  return kl(mu, reference_law(s));
}

// RW: E[sum_sigma h(mu(sigma x)/mu(x))]; Masked: E[sum_i sum_j h(ratio 1_{i in M_x})];
// BRW: E[sum_sigma h(rel(sigma x)/rel(x)) q(x, sigma x)] with rel = mu/gamma.
inline double fisher_information(const Model &md, const DiscreteDistribution &mu) {
  check_on(md.space, mu);
  const Space &s = md.space;
  double I = 0;
  for (std::uint64_t x = 0; x < s.size(); ++x) {
    const double mx = mu[x];
    if (!(mx > 0)) continue;
    double acc = 0;
    if (s.kind == Kind::Masked) {
      for (int i = 0; i < s.d; ++i) {
        const bool masked = coord_of(s, x, i) == s.mask();
        for (int j = 0; j < s.m; ++j)
          acc += masked ? h_fn(score_from_marginal(md, mu, x, JumpOp::unmask(i, j))) : 1.0;
      }
    } else {
      for (const JumpOp &op : forward_ops(s)) {
        auto y = apply_op_index(s, x, op);
        if (!y) continue;
        const double q = s.kind == Kind::BRW ? forward_rate_index(md, 0.0, x, op) : 1.0;
        if (q == 0) continue;
        acc += q * h_fn(score_from_marginal(md, mu, x, op));
      }
    }
    I += mx * acc;
  }
  return I;
}

// m1 = E||X||_1, m2 = E||X||_2^2 (coordinates read as integers).
inline double moments(const DiscreteDistribution &mu, int order) {
  if (order != 1 && order != 2) throw usage_error("moment order must be 1 or 2");
  const Space &s = mu.space;
  double acc = 0;
  for (std::uint64_t x = 0; x < s.size(); ++x) {
    double v = 0;
    for (int l = 0; l < s.d; ++l) {
      const double c = coord_of(s, x, l);
      v += order == 1 ? c : c * c;
    }
    acc += mu[x] * v;
  }
  return acc;
}

inline double coordinate_mean(const DiscreteDistribution &mu, int l) {
  double acc = 0;
  for (std::uint64_t x = 0; x < mu.space.size(); ++x) acc += mu[x] * coord_of(mu.space, x, l);
  return acc;
}

// Closed-form BRW moments of mu_t from those of mu*.
inline double brw_m1(double m1_star, int d, double t) {
  return std::exp(-t) * m1_star + d * (1 - std::exp(-t));
}
inline double brw_m2(double m2_star, double m1_star, int d, double t) {
  return std::exp(-2 * t) * (m2_star - 3 * m1_star + d) + 3 * std::exp(-t) * (m1_star - d) + 2.0 * d;
}

struct Check {
  std::string name;
  double t;
  double measured;
  double bound;
  bool pass;
};

struct Term {
  std::string name;
  double value;
};

struct BoundReport {
  std::string name;
  std::vector<Check> checks;
  std::vector<Term> terms;
  std::vector<Term> params;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.pass; });
  }
  int violations() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const Check &c) { return !c.pass; }));
  }
  double term(const std::string &n) const {
    for (const auto &t : terms)
      if (t.name == n) return t.value;
    throw usage_error("no term named " + n);
  }
  void add(std::string n, double t, double measured, double bound, bool pass) {
    checks.push_back({std::move(n), t, measured, bound, pass});
  }
  // measured <= bound up to rounding
  void add_le(std::string n, double t, double measured, double bound, double rel = 1e-12,
              double abs = 1e-15) {
    add(std::move(n), t, measured, bound, measured <= bound + rel * std::abs(bound) + abs);
  }
  void add_close(std::string n, double t, double measured, double expected, double rel,
                 double abs = 0) {
    add(std::move(n), t, measured, expected,
        std::abs(measured - expected) <= rel * std::abs(expected) + abs);
  }
};

// BRW values carry the mass the truncated box misses.
inline void attach_tail_mass(BoundReport &rep, const Space &s) {
  if (s.kind == Kind::BRW) rep.params.push_back({"tail_mass", poisson_tail_mass(s)});
}

inline double lsi_rate(const Space &s) {
  if (s.kind == Kind::RW) return 16 * std::numbers::pi * std::numbers::pi / (25.0 * s.m * s.m);
  if (s.kind == Kind::BRW) return 1.0;
  throw usage_error("entropy decay applies to RW and BRW");
}

// KL(mu_t | gamma) <= e^{-kappa t} KL(mu* | gamma)
inline BoundReport entropy_decay_check(const Model &md, const DiscreteDistribution &mu_star,
                                       const std::vector<double> &times) {
  BoundReport rep{"entropy_decay", {}, {}, {}};
  const double kappa = lsi_rate(md.space);
  const double k0 = kl_to_reference(md.space, mu_star);
  rep.params = {{"kappa", kappa}, {"kl0", k0}};
  for (double t : times) {
    const DiscreteDistribution mu = forward_marginal(md, mu_star, t, false);
    rep.add_le("kl_decay", t, kl_to_reference(md.space, mu), std::exp(-kappa * t) * k0);
  }
  attach_tail_mass(rep, md.space);
  return rep;
}

// Exact-constant Fisher bounds at backward time t (marginal mu_{T_f - t}).
inline BoundReport fisher_bound_check(const Model &md, const DiscreteDistribution &mu_star,
                                      double T_f, double t) {
  if (!(t >= 0) || !(t < T_f)) throw usage_error("fisher bound needs 0 <= t < T_f");
  Model m2 = md;
  m2.T_f = T_f;
  const Space &s = md.space;
  BoundReport rep{"fisher_bound", {}, {}, {}};
  const double s_fwd = T_f - t;
  const DiscreteDistribution mu = forward_marginal(m2, mu_star, s_fwd, false);
  const double I = fisher_information(m2, mu);
  switch (s.kind) {
  case Kind::RW: {
    const double k0 = kl_to_reference(s, mu_star);
    rep.add_le("rw_fisher_kl", t, I, 2 * k0 / s_fwd);
    rep.add_le("rw_kl_dlogm", t, k0, s.d * std::log(static_cast<double>(s.m)));
    break;
  }
  case Kind::BRW: {
    const double k0 = kl_to_reference(s, mu_star);
    const double m2s = moments(mu_star, 2);
    rep.add_le("brw_fisher_kl", t, I, k0 / s_fwd);
    rep.add_le("brw_kl_moment", t, k0 / s_fwd, (s.d + m2s) / s_fwd);
    break;
  }
  case Kind::Masked: {
    const double a = alpha(m2.beta, s_fwd);
    const double d = s.d, m = s.m;
    const double r = a / (1 - a) - 1;
    rep.add_le("masked_fisher_proof_form", t, I, d * r * r * (1 - a) + m * d * a);
    // the same bound with the j != x_0^i terms of the Jensen step kept
    rep.add_le("masked_fisher_full_jensen", t, I, d * (r * r + (m - 1)) * (1 - a) + m * d * a);
    break;
  }
  }
  rep.params = {{"T_f", T_f}, {"t", t}, {"fisher", I}};
  attach_tail_mass(rep, md.space);
  return rep;
}

// Expectation-level consequences of the score evolution identities on a time grid
// (backward times, sorted ascending; the first one is the reference nu).
inline BoundReport score_evolution_check(const Model &md, const DiscreteDistribution &mu_star,
                                         double T_f, std::vector<double> times) {
  Model mm = md;
  mm.T_f = T_f;
  const Space &s = md.space;
  std::sort(times.begin(), times.end());
  BoundReport rep{"score_evolution", {}, {}, {}};
  if (times.empty()) {
    attach_tail_mass(rep, md.space);
    return rep;
  }
  std::vector<DiscreteDistribution> mus;
  for (double t : times) mus.push_back(forward_marginal(mm, mu_star, T_f - t, false));
  const double nu = times.front();

  if (s.kind == Kind::RW) {
    double prev = -INFINITY;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double I = fisher_information(mm, mus[k]);
      rep.add("rw_fisher_monotone", times[k], I, prev, I >= prev - 1e-10);
      prev = I;
      double e = 0;
      for (std::uint64_t x = 0; x < s.size(); ++x)
        for (const JumpOp &op : forward_ops(s)) e += mus[k][x] * score_from_marginal(mm, mus[k], x, op);
      rep.add_close("rw_score_mean", times[k], e, 2.0 * s.d, 0, 1e-12);
    }
  } else if (s.kind == Kind::Masked) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const double growth = std::exp(mm.beta.integral(T_f - t, T_f - nu));
      for (int i = 0; i < s.d; ++i)
        for (int j = 0; j < s.m; ++j) {
          auto g = [&](const DiscreteDistribution &mu) {
            double acc = 0;
            for (std::uint64_t x = 0; x < s.size(); ++x)
              if (coord_of(s, x, i) == s.mask()) acc += mu[*apply_op_index(s, x, JumpOp::unmask(i, j))];
            return acc;
          };
          rep.add_close("masked_g_growth", t, g(mus[k]), g(mus[0]) * growth, 1e-8, 1e-300);
        }
      double em = 0;
      for (std::uint64_t x = 0; x < s.size(); ++x) em += mus[k][x] * num_masked(s, x);
      rep.add_close("masked_mean_masked", t, em, s.d * (1 - alpha(mm.beta, T_f - t)), 0, 1e-12);
    }
  } else {
    const double m1s = moments(mu_star, 1), m2s = moments(mu_star, 2);
    std::vector<double> yp0(static_cast<std::size_t>(s.d)), ym0(static_cast<std::size_t>(s.d)),
        psi0(static_cast<std::size_t>(s.d));
    double prevG = -INFINITY;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const auto &mu = mus[k];
      const double sf = T_f - t;
      for (int l = 0; l < s.d; ++l) {
        const JumpOp up = JumpOp::plus(l), dn = JumpOp::minus(l);
        double uq_p = 0, uq_m = 0, q_p = 0, q_m = 0, ulu_p = 0, ulu_m = 0, lu_p = 0, lu_m = 0;
        for (std::uint64_t x = 0; x < s.size(); ++x) {
          const double w = mu[x];
          if (!(w > 0)) continue;
          if (auto y = apply_op_index(s, x, up)) {
            const double u = score_from_marginal(mm, mu, x, up), q = 1.0;
            uq_p += w * u * q;
            q_p += w * q;
            if (u > 0) {
              ulu_p += w * u * std::log(u) * q;
              lu_p += w * std::log(u) * q;
            }
          }
          if (auto y = apply_op_index(s, x, dn)) {
            const double u = score_from_marginal(mm, mu, x, dn);
            const double q = coord_of(s, x, l);
            uq_m += w * u * q;
            q_m += w * q;
            if (u > 0) {
              ulu_m += w * u * std::log(u) * q;
              lu_m += w * std::log(u) * q;
            }
          }
        }
        const double EX = coordinate_mean(mu, l);
        rep.add_close("brw_uq_minus_is_1", t, uq_m, 1.0, 0, 1e-10);
        rep.add_close("brw_q_plus_is_1", t, q_p, 1.0, 0, 1e-10);
        rep.add_close("brw_uq_plus_is_mean", t, uq_p, EX, 0, 1e-10);
        rep.add_close("brw_q_minus_is_mean", t, q_m, EX, 0, 1e-10);
        rep.add_close("brw_log_identity_plus", t, ulu_p, -lu_m, 0, 1e-10);
        rep.add_close("brw_log_identity_minus", t, ulu_m, -lu_p, 0, 1e-10);

        const double yp = uq_p - 1, ym = uq_m - 1, psi = EX - 1;
        const auto L = static_cast<std::size_t>(l);
        if (k == 0) {
          yp0[L] = yp;
          ym0[L] = ym;
          psi0[L] = psi;
        }
        rep.add_close("brw_y_plus_growth", t, yp, yp0[L] * std::exp(t - nu), 1e-6, 1e-10);
        rep.add_close("brw_y_minus_decay", t, ym, ym0[L] * std::exp(-(t - nu)), 1e-6, 1e-10);
        rep.add_close("brw_psi_growth", t, psi, psi0[L] * std::exp(t - nu), 1e-6, 1e-10);
      }
      rep.add_close("brw_m1_closed_form", t, moments(mu, 1), brw_m1(m1s, s.d, sf), 0, 1e-8);
      rep.add_close("brw_m2_closed_form", t, moments(mu, 2), brw_m2(m2s, m1s, s.d, sf), 0, 1e-8);
      const double G = fisher_information(mm, mu);
      rep.add("brw_fisher_monotone", t, G, prevG, G >= prevG - 1e-10);
      prevG = G;
    }
  }
  attach_tail_mass(rep, md.space);
  return rep;
}

struct TheoremParams {
  double T_f = 1;
  double eta = 0;
  TimeGrid grid;
  double loss = 0;         // measured entropic loss (= eps * T_f)
  double measured_kl = NAN; // KL(target | sampler output)
  double measured_tv = NAN;
  double target_eps = NAN;  // for the parameter recipes
};

// Named terms of the error decompositions with their explicit factors; the
// universal constants hidden in the bounds are not estimated.
inline BoundReport theorem_terms(const Model &md, const DiscreteDistribution &mu_star,
                                 const TheoremParams &p) {
  const Space &s = md.space;
  const double d = s.d, m = s.m, Tf = p.T_f, eta = p.eta;
  const double h = p.grid.times.size() > 1 ? p.grid.max_step() : NAN;
  const double eps = p.loss / Tf;
  BoundReport rep{"theorem_terms", {}, {}, {}};
  rep.params = {{"T_f", Tf}, {"eta", eta}, {"h", h}, {"eps", eps}, {"c", p.grid.c}};
  auto hyp = [&](const std::string &n, bool ok) { rep.add("hypothesis_" + n, 0, ok, 1, ok); };
  Model mt = md;
  mt.T_f = Tf;

  if (s.kind == Kind::RW) {
    const double kappa = lsi_rate(s);
    const double k0 = kl_to_reference(s, mu_star);
    const double I = fisher_information(mt, mu_star);
    const double L = I / d;
    rep.terms.push_back({"initialization", std::exp(-kappa * Tf) * k0});
    rep.terms.push_back({"initialization_dlogm", std::exp(-kappa * Tf) * d * std::log(m)});
    rep.terms.push_back({"discretization", h * I});
    if (p.grid.adaptive) rep.terms.push_back({"discretization_adaptive", p.grid.c * d * std::log(m) * std::log(L)});
    rep.terms.push_back({"approximation", eps * Tf});
    if (eta > 0) rep.terms.push_back({"early_stopping", d * eta});
    rep.params.push_back({"L", L});
    hyp("full_support", std::all_of(mu_star.p.begin(), mu_star.p.end(), [](double v) { return v > 0; }));
    if (p.grid.adaptive) hyp("L_ge_2", L >= 2);
    if (std::isfinite(p.target_eps)) {
      const double e = p.target_eps, dl = d * std::log(m);
      const double k = 25 * m * m / (16 * std::numbers::pi * std::numbers::pi);
      rep.terms.push_back({"recipe_Tf", k * std::log(dl / e)});
      rep.terms.push_back({"recipe_c", e / (dl * std::log(L))});
      rep.terms.push_back({"recipe_es_eta", e / d});
      rep.terms.push_back({"recipe_es_c", e * e / (dl * std::log(dl / e))});
      rep.terms.push_back({"recipe_es_Tf", k * std::log(dl / (e * e))});
    }
  } else if (s.kind == Kind::Masked) {
    const double aT = alpha(mt.beta, Tf);
    const double ae = eta > 0 ? alpha(mt.beta, eta) : 1.0;
    rep.terms.push_back({"initialization", d * aT * (1 + std::log(m / aT))});
    rep.terms.push_back({"approximation", eps * Tf});
    rep.terms.push_back({"discretization", h * (d * ae / (1 - ae) + d * m)});
    rep.terms.push_back({"discretization_exp", std::expm1(h) * d * m * Tf});
    rep.terms.push_back({"early_stopping_tv", 1 - std::pow(ae, d)});
    hyp("eta_positive", eta > 0);
    if (std::isfinite(p.target_eps)) {
      const double e = p.target_eps;
      rep.terms.push_back({"recipe_Tf", 2 * std::log(d * std::log(m) / (e * e))});
      rep.terms.push_back({"recipe_eta", e / d});
      rep.terms.push_back({"recipe_c", std::log1p(e * e / (2 * d * m * std::log(d * std::log(m) / (e * e)) +
                                                          d * m * std::log(m + d / e)))});
    }
  } else {
    const double k0 = kl_to_reference(s, mu_star);
    const double m1 = moments(mu_star, 1), m2 = moments(mu_star, 2);
    const double I = fisher_information(mt, mu_star);
    const double L = I / d;
    const double c = p.grid.adaptive ? p.grid.c : h;
    rep.terms.push_back({"initialization", std::exp(-Tf) * k0});
    rep.terms.push_back({"initialization_moment", std::exp(-Tf) * (d + m2)});
    rep.terms.push_back({"approximation", eps * Tf});
    rep.terms.push_back({"discretization", std::expm1(c) * ((d + m1) * Tf + (d + m2) * std::log(std::max(L, 1.0)))});
    if (eta > 0) rep.terms.push_back({"early_stopping", eta * (d + m1)});
    rep.params.push_back({"L", L});
    if (p.grid.adaptive) hyp("L_ge_2", L >= 2);
    if (std::isfinite(p.target_eps)) {
      const double e = p.target_eps;
      rep.terms.push_back({"recipe_Tf", std::log((d + m2) / e)});
      rep.terms.push_back({"recipe_c", std::log1p(e / ((d + m1) * std::log((d + m2) / e) + (d + m2) * std::log(L)))});
      const double eta_r = e / (d + m1);
      const double tf_r = std::log((d + m2) / (e * e));
      rep.terms.push_back({"recipe_es_eta", eta_r});
      rep.terms.push_back({"recipe_es_Tf", tf_r});
      rep.terms.push_back({"recipe_es_c", std::log1p(e * e / ((d + m1) * tf_r + (d + m2) * std::log((1 + m2 / d) / eta_r)))});
    }
  }
  if (std::isfinite(p.measured_kl)) rep.terms.push_back({"measured_kl", p.measured_kl});
  if (std::isfinite(p.measured_tv)) rep.terms.push_back({"measured_tv", p.measured_tv});
  attach_tail_mass(rep, md.space);
  return rep;
}

} // namespace ddm
