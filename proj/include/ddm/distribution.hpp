#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "errors.hpp"
#include "state_space.hpp"

namespace ddm {

// Dense probability vector in encode order. `leak` is mass that left a
// truncated (BRW) box and is not represented in p.
struct DiscreteDistribution {
  Space space;
  std::vector<double> p;
  double leak = 0.0;

  double operator[](std::uint64_t i) const { return p[static_cast<std::size_t>(i)]; }
  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
};

inline void check_same_space(const DiscreteDistribution &a, const DiscreteDistribution &b) {
  if (!(a.space == b.space) || a.p.size() != b.p.size())
    throw usage_error("distributions live on different spaces");
}

inline void check_on(const Space &s, const DiscreteDistribution &mu) {
  if (!(mu.space == s) || mu.p.size() != s.size())
    throw usage_error("distribution size does not match the space");
}

inline DiscreteDistribution normalized(DiscreteDistribution mu) {
  const double z = mu.total();
  if (!(z > 0)) throw usage_error("cannot normalize a zero vector");
  for (double &v : mu.p) v /= z;
  return mu;
}

inline DiscreteDistribution uniform(const Space &s) {
  const auto n = static_cast<std::size_t>(s.size());
  return {s, std::vector<double>(n, 1.0 / static_cast<double>(n)), 0.0};
}

inline DiscreteDistribution point_mass(const Space &s, const State &x) {
  DiscreteDistribution mu{s, std::vector<double>(static_cast<std::size_t>(s.size()), 0.0), 0.0};
  mu.p[static_cast<std::size_t>(encode(s, x))] = 1.0;
  return mu;
}

inline DiscreteDistribution from_vector(const Space &s, std::vector<double> p) {
  if (p.size() != s.size()) throw usage_error("probability vector has the wrong length");
  for (double v : p)
    if (!(v >= 0) || !std::isfinite(v)) throw usage_error("probabilities must be finite and >= 0");
  DiscreteDistribution mu{s, std::move(p), 0.0};
  if (std::abs(mu.total() - 1.0) > 1e-12) throw usage_error("probabilities must sum to 1");
  return mu;
}

inline double log_poisson1(int n) { return -1.0 - std::lgamma(n + 1.0); }

// Untruncated Poisson(1)^{(x) d} mass at state idx.
inline double poisson_product_mass(const Space &s, std::uint64_t idx) {
  double lp = 0;
  for (int l = 0; l < s.d; ++l) lp += log_poisson1(coord_of(s, idx, l));
  return std::exp(lp);
}

// Poisson(1)^{(x) d} mass outside {0..cap}^d.
inline double poisson_tail_mass(const Space &s) {
  if (s.kind != Kind::BRW) return 0.0;
  double coord = 0;
  for (int n = s.cap + 1; n <= s.cap + 200; ++n) {
    const double v = std::exp(log_poisson1(n));
    coord += v;
    if (v < 1e-300) break;
  }
  return -std::expm1(s.d * std::log1p(-coord));
}

// Poisson(1)^{(x) d} restricted to {0..cap}^d and renormalized; leak holds the
// removed tail mass.
inline DiscreteDistribution truncated_poisson(const Space &s) {
  if (s.kind != Kind::BRW) throw usage_error("truncated_poisson needs a BRW space");
  DiscreteDistribution g{s, std::vector<double>(static_cast<std::size_t>(s.size())), 0.0};
  for (std::uint64_t i = 0; i < s.size(); ++i)
    g.p[static_cast<std::size_t>(i)] = poisson_product_mass(s, i);
  const double z = g.total();
  for (double &v : g.p) v /= z;
  g.leak = 1.0 - z;
  return g;
}

// Seeded random law with weights Uniform(lo, 1) on the allowed states: all
// states for RW/BRW (optionally only coordinates <= support_cap), only
// unmasked states for Masked.
inline DiscreteDistribution random_full_support(const Space &s, std::uint64_t seed,
                                                int support_cap = -1, double lo = 0.05) {
  std::mt19937_64 rng(seed);
  DiscreteDistribution mu{s, std::vector<double>(static_cast<std::size_t>(s.size()), 0.0), 0.0};
  for (std::uint64_t i = 0; i < s.size(); ++i) {
    bool allowed = true;
    for (int l = 0; l < s.d; ++l) {
      const int v = coord_of(s, i, l);
      if (s.kind == Kind::Masked && v == s.mask()) allowed = false;
      if (s.kind == Kind::BRW && support_cap >= 0 && v > support_cap) allowed = false;
    }
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (allowed) mu.p[static_cast<std::size_t>(i)] = lo + (1.0 - lo) * u;
  }
  return normalized(std::move(mu));
}

} // namespace ddm
