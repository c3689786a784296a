#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "scores.hpp"
#include "state_space.hpp"

namespace ddm {

enum class ClockMode { AlgorithmLiteral, SingleClock };

inline const char *clock_name(ClockMode m) {
  return m == ClockMode::AlgorithmLiteral ? "literal" : "single";
}

// RW: uniform. Masked: (1 - a)^{|M_x|} (a/m)^{d - |M_x|} with a = alpha_{T_f}.
// BRW: Poisson(1)^{(x) d} restricted to the box and renormalized.
inline DiscreteDistribution init_distribution(const Model &md) {
  const Space &s = md.space;
  switch (s.kind) {
  case Kind::RW: return uniform(s);
  case Kind::BRW: return truncated_poisson(s);
  case Kind::Masked: {
    const double a = alpha(md.beta, md.T_f);
    DiscreteDistribution mu{s, std::vector<double>(static_cast<std::size_t>(s.size())), 0.0};
    for (std::uint64_t x = 0; x < s.size(); ++x) {
      const int k = num_masked(s, x);
      mu.p[static_cast<std::size_t>(x)] = std::pow(1.0 - a, k) * std::pow(a / s.m, s.d - k);
    }
    return mu;
  }
  }
  return {};
}

// Backward rates frozen at each grid time t_k, for every state.
struct BackwardTable {
  Space space;
  std::vector<std::vector<std::vector<Transition>>> jumps; // [k][x]
  std::vector<std::vector<double>> lambda;                 // [k][x]
};

inline BackwardTable build_backward_table(const ScoreOracle &o, const TimeGrid &g) {
  const Model &md = o.model();
  const Space &s = md.space;
  if (s.kind == Kind::Masked && !(g.eta > 0))
    throw usage_error("masked sampling needs an early-stopping margin eta > 0");
  BackwardTable tb{s, {}, {}};
  const auto n = static_cast<std::size_t>(s.size());
  for (int k = 0; k < g.K(); ++k) {
    const double t = g.times[static_cast<std::size_t>(k)];
    const DiscreteDistribution *c = o.cached(t);
    const DiscreteDistribution mu = c ? *c : o.marginal(t);
    std::vector<std::vector<Transition>> row(n);
    std::vector<double> lam(n, 0.0);
    for (std::uint64_t x = 0; x < s.size(); ++x) {
      if (!(mu[x] > 0)) continue; // unreachable under the exact law
      for (const auto &br : backward_rates_from(o, t, mu, x)) {
        if (!(br.rate > 0)) continue;
        row[static_cast<std::size_t>(x)].push_back({br.to, br.rate});
        lam[static_cast<std::size_t>(x)] += br.rate;
      }
    }
    tb.jumps.push_back(std::move(row));
    tb.lambda.push_back(std::move(lam));
  }
  return tb;
}

struct JumpRecord {
  double time;
  std::uint64_t state;
};

struct SamplerRun {
  std::uint64_t seed = 0;
  ClockMode clock_mode = ClockMode::AlgorithmLiteral;
  std::uint64_t initial = 0;
  std::vector<JumpRecord> trace;
  std::uint64_t terminal = 0;
};

namespace detail {

inline double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double exp1(std::mt19937_64 &rng) { return -std::log1p(-uniform01(rng)); }

inline std::uint64_t pick(const std::vector<Transition> &tr, double lam, double u) {
  double target = u * lam, acc = 0;
  for (const auto &j : tr) {
    acc += j.rate;
    if (target < acc) return j.to;
  }
  return tr.back().to;
}

inline std::uint64_t draw_from(const DiscreteDistribution &mu, double u) {
  double acc = 0;
  const double z = mu.total();
  for (std::size_t i = 0; i < mu.p.size(); ++i) {
    acc += mu.p[i] / z;
    if (u < acc) return i;
  }
  for (std::size_t i = mu.p.size(); i-- > 0;)
    if (mu.p[i] > 0) return i;
  return 0;
}

} // namespace detail

// One backward run. Per interval the rates are frozen at (t_k, current state)
// with total lambda and at most one jump happens.
//   AlgorithmLiteral: fresh E ~ Exp(1) each interval, jump iff
//     E in [G, G + h lambda); G resets to 0 after a jump, else G += h lambda.
//   SingleClock: one E per inter-jump period, jump once the accumulated
//     hazard G + h lambda passes E.
inline SamplerRun sample_backward(const BackwardTable &tb, const TimeGrid &g,
                                  const DiscreteDistribution &init, std::uint64_t seed,
                                  ClockMode mode, std::optional<std::uint64_t> start = std::nullopt) {
  std::mt19937_64 rng(seed);
  SamplerRun run;
  run.seed = seed;
  run.clock_mode = mode;
  std::uint64_t x = start ? *start : detail::draw_from(init, detail::uniform01(rng));
  run.initial = x;
  double G = 0;
  double E = mode == ClockMode::SingleClock ? detail::exp1(rng) : 0.0;
  for (int k = 0; k < g.K(); ++k) {
    const double tk = g.times[static_cast<std::size_t>(k)];
    const double h = g.step(k + 1);
    const double lam = tb.lambda[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)];
    if (mode == ClockMode::AlgorithmLiteral) E = detail::exp1(rng);
    if (lam > 0 && E >= G && E - G < h * lam) {
      const double when = tk + (E - G) / lam;
      x = detail::pick(tb.jumps[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)], lam,
                       detail::uniform01(rng));
      run.trace.push_back({when, x});
      G = 0;
      if (mode == ClockMode::SingleClock) E = detail::exp1(rng);
    } else {
      G += h * lam;
    }
  }
  run.terminal = x;
  return run;
}

inline SamplerRun sample_backward(const ScoreOracle &o, const TimeGrid &g, std::uint64_t seed,
                                  ClockMode mode, std::optional<State> start = std::nullopt) {
  const BackwardTable tb = build_backward_table(o, g);
  std::optional<std::uint64_t> s0;
  if (start) s0 = encode(o.model().space, *start);
  return sample_backward(tb, g, init_distribution(o.model()), seed, mode, s0);
}

struct ExactLaw {
  DiscreteDistribution terminal;
  std::vector<DiscreteDistribution> laws; // at t_0 .. t_K
  std::size_t max_lattice = 0;
};

// Exact law of the sampler output by propagating the joint law of
// (state, residual G). AlgorithmLiteral: P(jump | G) = e^{-G}(1 - e^{-h lambda}).
// SingleClock: the conditional clock is memoryless, so P(jump) = 1 - e^{-h lambda}
// and G carries no information (kept at 0).
inline ExactLaw propagate_exact(const BackwardTable &tb, const TimeGrid &g,
                                const DiscreteDistribution &init, ClockMode mode,
                                double rel_tol = 1e-12, std::size_t budget = 2000000) {
  const Space &s = tb.space;
  const auto n = static_cast<std::size_t>(s.size());
  struct Cell {
    double G, w;
  };
  std::vector<std::vector<Cell>> lat(n);
  for (std::size_t x = 0; x < n; ++x)
    if (init.p[x] > 0) lat[x].push_back({0.0, init.p[x]});

  ExactLaw out;
  auto snapshot = [&] {
    DiscreteDistribution d{s, std::vector<double>(n, 0.0), 0.0};
    for (std::size_t x = 0; x < n; ++x)
      for (const auto &c : lat[x]) d.p[x] += c.w;
    return d;
  };
  out.laws.push_back(snapshot());

  for (int k = 0; k < g.K(); ++k) {
    const double h = g.step(k + 1);
    std::vector<std::vector<Cell>> next(n);
    for (std::size_t x = 0; x < n; ++x) {
      const double lam = tb.lambda[static_cast<std::size_t>(k)][x];
      const auto &jumps = tb.jumps[static_cast<std::size_t>(k)][x];
      for (const auto &c : lat[x]) {
        double pj = 0;
        if (lam > 0) {
          pj = -std::expm1(-h * lam);
          if (mode == ClockMode::AlgorithmLiteral) pj *= std::exp(-c.G);
        }
        const double stay = c.w * (1.0 - pj);
        if (stay > 0) next[x].push_back({mode == ClockMode::AlgorithmLiteral ? c.G + h * lam : 0.0, stay});
        if (pj > 0)
          for (const auto &j : jumps) next[static_cast<std::size_t>(j.to)].push_back({0.0, c.w * pj * j.rate / lam});
      }
    }
    std::size_t total = 0;
    for (auto &cells : next) {
      std::sort(cells.begin(), cells.end(), [](const Cell &a, const Cell &b) { return a.G < b.G; });
      std::vector<Cell> pooled;
      for (const auto &c : cells) {
        if (!pooled.empty() && std::abs(c.G - pooled.back().G) <= rel_tol * std::max(std::abs(c.G), std::abs(pooled.back().G)))
          pooled.back().w += c.w;
        else
          pooled.push_back(c);
      }
      cells.swap(pooled);
      total += cells.size();
    }
    if (total > budget) throw resource_error("residual lattice exceeds the configured budget");
    out.max_lattice = std::max(out.max_lattice, total);
    lat.swap(next);
    out.laws.push_back(snapshot());
  }
  out.terminal = out.laws.back();
  return out;
}

inline ExactLaw propagate_exact(const ScoreOracle &o, const TimeGrid &g, ClockMode mode) {
  return propagate_exact(build_backward_table(o, g), g, init_distribution(o.model()), mode);
}

} // namespace ddm
