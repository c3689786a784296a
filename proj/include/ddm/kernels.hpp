#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "state_space.hpp"

namespace ddm {

inline double alpha(const BetaSchedule &beta, double t) {
  if (!(t >= 0)) throw usage_error("alpha needs t >= 0");
  return std::exp(-beta.integral(t));
}

// Square matrix over one coordinate's domain, row-major. leak[i] = 1 - row sum
// (nonzero only for truncated BRW rows).
struct Kernel1D {
  int n = 0;
  double t = 0;
  std::vector<double> a;
  std::vector<double> leak;

  double operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  }
  double &at(int i, int j) {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  }
  void fill_leak() {
    leak.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double r = 0;
      for (int j = 0; j < n; ++j) r += (*this)(i, j);
      leak[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - r);
    }
  }
};

inline Kernel1D matmul(const Kernel1D &x, const Kernel1D &y) {
  Kernel1D z{x.n, x.t + y.t, std::vector<double>(x.a.size(), 0.0), {}};
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      const double v = x(i, k);
      if (v == 0) continue;
      for (int j = 0; j < x.n; ++j) z.at(i, j) += v * y(k, j);
    }
  return z;
}

namespace detail {

// exp(tQ) for the cyclic generator with 1/2 to each neighbour (m = 2: rate 1
// to the other symbol), via uniformization at rate 1.
inline Kernel1D rw_uniformized(int m, double t) {
  const auto n = static_cast<std::size_t>(m);
  auto jump = [&](const std::vector<double> &v) {
    std::vector<double> w(n * n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double x = v[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
        if (x == 0) continue;
        const int up = (j + 1) % m, dn = (j + m - 1) % m;
        w[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(up)] += 0.5 * x;
        w[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(dn)] += 0.5 * x;
      }
    return w;
  };
  std::vector<double> pw(n * n, 0.0), acc(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) pw[i * n + i] = 1.0;
  double w = std::exp(-t), cum = 0;
  for (int k = 0;; ++k) {
    if (k > 0) {
      pw = jump(pw);
      w *= t / k;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * pw[i];
    cum += w;
    if (k > t && 1.0 - cum <= 1e-14) break;
    if (k > 100000) break;
  }
  Kernel1D K{m, t, std::move(acc), {}};
  K.leak.assign(n, 0.0);
  return K;
}

} // namespace detail

inline Kernel1D kernel_rw_1d(int m, double t) {
  if (m < 2) throw usage_error("m must be >= 2");
  if (!(t >= 0)) throw usage_error("kernel time must be >= 0");
  // keep e^{-t} well away from underflow, then square back up
  int halvings = 0;
  double tt = t;
  while (tt > 32.0) {
    tt *= 0.5;
    ++halvings;
  }
  Kernel1D K = detail::rw_uniformized(m, tt);
  for (int i = 0; i < halvings; ++i) K = matmul(K, K);
  K.t = t;
  K.leak.assign(static_cast<std::size_t>(m), 0.0);
  return K;
}

inline Kernel1D kernel_masked_1d(const BetaSchedule &beta, int m, double s, double t) {
  if (m < 2) throw usage_error("m must be >= 2");
  if (!(s >= 0) || s > t) throw usage_error("masked kernel needs 0 <= s <= t");
  const double r = std::exp(-beta.integral(s, t)); // alpha_t / alpha_s
  Kernel1D K{m + 1, t - s, std::vector<double>(static_cast<std::size_t>((m + 1) * (m + 1)), 0.0), {}};
  for (int j = 0; j < m; ++j) {
    K.at(j, j) = r;
    K.at(j, m) = 1.0 - r;
  }
  K.at(m, m) = 1.0;
  K.leak.assign(static_cast<std::size_t>(m + 1), 0.0);
  return K;
}

// log p_t(k, n): Binomial(k, e^{-t}) survivors plus Poisson(1 - e^{-t}) arrivals.
inline double log_kernel_brw_1d(double t, int k, int n) {
  if (!(t >= 0) || k < 0 || n < 0) throw usage_error("brw kernel needs t >= 0, k, n >= 0");
  const double lam = -std::expm1(-t);
  const double log_lam = std::log(lam); // -inf at t = 0
  const double log_surv = -t;
  auto xlogy = [](double x, double ly) { return x == 0 ? 0.0 : x * ly; };
  const int jmax = std::min(k, n);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(jmax + 1));
  for (int j = 0; j <= jmax; ++j) {
    const double lc = std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0);
    const double lt = lc + xlogy(j, log_surv) + xlogy(k - j, log_lam) - lam +
                      xlogy(n - j, log_lam) - std::lgamma(n - j + 1.0);
    terms.push_back(lt);
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  if (mx == -INFINITY) return -INFINITY;
  // pairwise sum of the scaled terms
  std::vector<double> v;
  v.reserve(terms.size());
  for (double lt : terms) v.push_back(std::exp(lt - mx));
  while (v.size() > 1) {
    std::vector<double> w;
    w.reserve((v.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) w.push_back(v[i] + v[i + 1]);
    if (v.size() % 2) w.push_back(v.back());
    v.swap(w);
  }
  return mx + std::log(v[0]);
}

inline double kernel_brw_1d(double t, int k, int n) { return std::exp(log_kernel_brw_1d(t, k, n)); }

// Closed-form kernel on {0..cap}; rows are sub-stochastic by the tail beyond cap.
inline Kernel1D kernel_brw_matrix(int cap, double t) {
  Kernel1D K{cap + 1, t, std::vector<double>(static_cast<std::size_t>((cap + 1) * (cap + 1))), {}};
  for (int k = 0; k <= cap; ++k)
    for (int n = 0; n <= cap; ++n) K.at(k, n) = kernel_brw_1d(t, k, n);
  K.fill_leak();
  return K;
}

inline Kernel1D coordinate_kernel(const Model &md, double s, double t) {
  if (s > t) throw usage_error("kernel needs s <= t");
  switch (md.space.kind) {
  case Kind::RW: return kernel_rw_1d(md.space.m, t - s);
  case Kind::Masked: return kernel_masked_1d(md.beta, md.space.m, s, t);
  case Kind::BRW: return kernel_brw_matrix(md.space.cap, t - s);
  }
  return {};
}

// Coordinate-factorized p_{s,t} acting on distributions.
class KernelProduct {
public:
  KernelProduct(const Model &md, double s, double t)
      : space_(md.space), k_(coordinate_kernel(md, s, t)) {}

  const Kernel1D &coordinate() const { return k_; }

  // p_{s,t}(x, y) for full states.
  double entry(std::uint64_t x, std::uint64_t y) const {
    double p = 1;
    for (int l = 0; l < space_.d; ++l) p *= k_(coord_of(space_, x, l), coord_of(space_, y, l));
    return p;
  }

  DiscreteDistribution apply(const DiscreteDistribution &mu, bool renormalize = false) const {
    check_on(space_, mu);
    std::vector<double> p = mu.p;
    const int r = space_.radix();
    std::vector<double> v(static_cast<std::size_t>(r)), w(static_cast<std::size_t>(r));
    const std::uint64_t n = space_.size();
    for (int l = 0; l < space_.d; ++l) {
      const std::uint64_t st = space_.stride(l);
      const std::uint64_t block = st * static_cast<std::uint64_t>(r);
      for (std::uint64_t base = 0; base < n; base += block)
        for (std::uint64_t off = 0; off < st; ++off) {
          for (int a = 0; a < r; ++a)
            v[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(base + off + static_cast<std::uint64_t>(a) * st)];
          std::fill(w.begin(), w.end(), 0.0);
          for (int a = 0; a < r; ++a) {
            const double x = v[static_cast<std::size_t>(a)];
            if (x == 0) continue;
            for (int b = 0; b < r; ++b) w[static_cast<std::size_t>(b)] += x * k_(a, b);
          }
          for (int b = 0; b < r; ++b)
            p[static_cast<std::size_t>(base + off + static_cast<std::uint64_t>(b) * st)] = w[static_cast<std::size_t>(b)];
        }
    }
    DiscreteDistribution out{space_, std::move(p), 0.0};
    const double z = out.total();
    out.leak = mu.leak + std::max(0.0, mu.total() - z);
    if (renormalize && z > 0)
      for (double &x : out.p) x /= z;
    return out;
  }

private:
  Space space_;
  Kernel1D k_;
};

inline KernelProduct kernel_product(const Model &md, double s, double t) {
  return KernelProduct(md, s, t);
}

// Dense full-space kernel (row-major S x S).
struct DenseKernel {
  std::uint64_t n = 0;
  std::vector<double> a;
  double operator()(std::uint64_t i, std::uint64_t j) const {
    return a[static_cast<std::size_t>(i * n + j)];
  }
};

// RK4 on dP/dt = P Q_{s0 + tau} over the enumerated (possibly truncated) space.
inline DenseKernel kolmogorov_oracle(const Model &md, double t, double dt, double s0 = 0.0,
                                     std::uint64_t max_states = 4096) {
  const std::uint64_t n = md.space.size();
  if (n > max_states) throw resource_error("space too large for the dense Kolmogorov oracle");
  if (!(dt > 0) || !(t >= 0)) throw usage_error("oracle needs t >= 0 and dt > 0");
  const auto N = static_cast<std::size_t>(n);
  DenseKernel P{n, std::vector<double>(N * N, 0.0)};
  for (std::size_t i = 0; i < N; ++i) P.a[i * N + i] = 1.0;
  if (t == 0) return P;

  struct Row {
    double diag;
    std::vector<Transition> out;
  };
  auto rows_at = [&](double tau) {
    std::vector<Row> rows(N);
    for (std::uint64_t x = 0; x < n; ++x)
      rows[static_cast<std::size_t>(x)] = {diagonal_index(md, tau, x), forward_transitions(md, tau, x)};
    return rows;
  };
  auto mulQ = [&](const std::vector<double> &A, const std::vector<Row> &rows) {
    std::vector<double> B(N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t x = 0; x < N; ++x) {
        const double v = A[i * N + x];
        if (v == 0) continue;
        B[i * N + x] += v * rows[x].diag;
        for (const auto &tr : rows[x].out) B[i * N + static_cast<std::size_t>(tr.to)] += v * tr.rate;
      }
    return B;
  };

  const bool homogeneous = md.space.kind != Kind::Masked;
  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  std::vector<Row> r0, r1, r2;
  if (homogeneous) r0 = rows_at(s0);
  std::vector<double> tmp(N * N);
  for (long k = 0; k < steps; ++k) {
    const double tau = s0 + static_cast<double>(k) * h;
    if (!homogeneous) {
      r0 = rows_at(tau);
      r1 = rows_at(tau + 0.5 * h);
      r2 = rows_at(tau + h);
    }
    const auto &qa = r0;
    const auto &qb = homogeneous ? r0 : r1;
    const auto &qc = homogeneous ? r0 : r2;
    auto k1 = mulQ(P.a, qa);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = P.a[i] + 0.5 * h * k1[i];
    auto k2 = mulQ(tmp, qb);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = P.a[i] + 0.5 * h * k2[i];
    auto k3 = mulQ(tmp, qb);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = P.a[i] + h * k3[i];
    auto k4 = mulQ(tmp, qc);
    for (std::size_t i = 0; i < tmp.size(); ++i)
      P.a[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return P;
}

// mu_t = mu* p_{0,t}. BRW marginals are renormalized on the box by default and
// the removed mass is kept in leak.
inline DiscreteDistribution forward_marginal(const Model &md, const DiscreteDistribution &mu_star,
                                             double t, bool renormalize = true) {
  if (!(t >= 0) || t > md.T_f * (1 + 1e-12)) throw usage_error("marginal time outside [0, T_f]");
  return kernel_product(md, 0.0, t).apply(mu_star, renormalize && md.space.kind == Kind::BRW);
}

} // namespace ddm
