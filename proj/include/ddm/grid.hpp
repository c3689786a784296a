#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"

namespace ddm {

// 0 = t_0 < ... < t_K = T_f - eta. For adaptive grids: k0 steps of size c,
// k1 geometric steps h = c * (remaining), k2 steps of size c * a, then one
// closing step of size in (0, c * a].
struct TimeGrid {
  std::vector<double> times;
  double T_f = 0;
  double eta = 0;
  bool adaptive = false;
  double c = 0, a = 0;
  int k0 = 0, k1 = 0, k2 = 0;

  int K() const { return static_cast<int>(times.size()) - 1; }
  double step(int k) const { return times[static_cast<std::size_t>(k)] - times[static_cast<std::size_t>(k - 1)]; } // h_k, k >= 1
  double max_step() const {
    double h = 0;
    for (int k = 1; k <= K(); ++k) h = std::max(h, step(k));
    return h;
  }
};

inline TimeGrid grid_uniform(double T_f, int K, double eta = 0.0) {
  if (K < 1) throw usage_error("grid needs K >= 1");
  if (!(T_f > 0) || !(eta >= 0) || !(eta < T_f)) throw usage_error("grid needs 0 <= eta < T_f");
  TimeGrid g;
  g.T_f = T_f;
  g.eta = eta;
  const double H = T_f - eta;
  g.times.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) g.times[static_cast<std::size_t>(k)] = H * k / K;
  g.times.back() = H;
  return g;
}

struct AdaptiveCounts {
  int k0, k1, k2;
};

// Closed forms: k0 = floor((H - 1)/c), k1 = floor(log(a/(H - t_k0))/log(1 - c)),
// k2 = ceil(R/(c a)) - 1 with R = H - t_{k0+k1}.
inline AdaptiveCounts adaptive_counts(double H, double c, double a) {
  const double fuzz = 1e-12;
  const int k0 = static_cast<int>(std::floor((H - 1.0) / c + fuzz));
  const double r0 = H - k0 * c;
  const int k1 = static_cast<int>(std::floor(std::log(a / r0) / std::log1p(-c) + fuzz));
  const double R = r0 * std::pow(1.0 - c, k1);
  const int k2 = static_cast<int>(std::ceil(R / (c * a) - fuzz)) - 1;
  return {k0, k1, std::max(k2, 0)};
}

inline TimeGrid grid_adaptive(double T_f, double eta, double c, double a) {
  if (!(c > 0 && c <= 0.5)) throw usage_error("adaptive grid needs c in (0, 1/2]");
  if (!(a > 0 && a <= 1)) throw usage_error("adaptive grid needs a in (0, 1]");
  if (!(eta >= 0) || !(T_f - eta >= 1 + 2 * c))
    throw usage_error("adaptive grid needs T_f - eta >= 1 + 2c");
  const double H = T_f - eta;
  const AdaptiveCounts n = adaptive_counts(H, c, a);
  TimeGrid g;
  g.T_f = T_f;
  g.eta = eta;
  g.adaptive = true;
  g.c = c;
  g.a = a;
  g.k0 = n.k0;
  g.k1 = n.k1;
  g.k2 = n.k2;
  g.times.push_back(0.0);
  for (int k = 1; k <= n.k0; ++k) g.times.push_back(k * c);
  const double r0 = H - n.k0 * c;
  for (int j = 1; j <= n.k1; ++j) g.times.push_back(H - r0 * std::pow(1.0 - c, j));
  const double tk = g.times.back();
  for (int j = 1; j <= n.k2; ++j) g.times.push_back(tk + j * c * a);
  g.times.push_back(H);
  return g;
}

} // namespace ddm
