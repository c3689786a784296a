#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ddm {

enum class Kind { RW, Masked, BRW };

inline const char *kind_name(Kind k) {
  switch (k) {
  case Kind::RW: return "rw";
  case Kind::Masked: return "masked";
  case Kind::BRW: return "brw";
  }
  return "?";
}

// Product space. RW: {0..m-1}^d, Masked: {0..m}^d with m = MASK,
// BRW: {0..cap}^d (truncation of N^d).
struct Space {
  Kind kind = Kind::RW;
  int d = 1;
  int m = 2;
  int cap = 1;

  int radix() const {
    switch (kind) {
    case Kind::RW: return m;
    case Kind::Masked: return m + 1;
    case Kind::BRW: return cap + 1;
    }
    return 0;
  }
  int mask() const { return m; }
  std::uint64_t size() const {
    std::uint64_t n = 1;
    for (int i = 0; i < d; ++i) n *= static_cast<std::uint64_t>(radix());
    return n;
  }
  std::uint64_t stride(int coord) const {
    std::uint64_t s = 1;
    for (int i = coord + 1; i < d; ++i) s *= static_cast<std::uint64_t>(radix());
    return s;
  }
  bool operator==(const Space &o) const {
    return kind == o.kind && d == o.d && radix() == o.radix();
  }
};

inline Space make_space(Kind kind, int d, int m, int cap = 1) {
  if (d < 1) throw usage_error("dimension d must be >= 1");
  if (kind != Kind::BRW && m < 2) throw usage_error("alphabet size m must be >= 2");
  if (kind == Kind::BRW && cap < 1) throw usage_error("cap must be >= 1");
  Space s{kind, d, kind == Kind::BRW ? 2 : m, kind == Kind::BRW ? cap : 1};
  const auto r = static_cast<std::uint64_t>(s.radix());
  std::uint64_t n = 1;
  for (int i = 0; i < d; ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / r)
      throw resource_error("state space does not fit a 64-bit index");
    n *= r;
  }
  return s;
}

using State = std::vector<int>;

struct JumpOp {
  enum Tag { Plus, Minus, Mask, Unmask };
  Tag tag = Plus;
  int coord = 0; // 0-based
  int value = 0; // Unmask target symbol

  static JumpOp plus(int l) { return {Plus, l, 0}; }
  static JumpOp minus(int l) { return {Minus, l, 0}; }
  static JumpOp mask(int i) { return {Mask, i, 0}; }
  static JumpOp unmask(int i, int j) { return {Unmask, i, j}; }

  bool operator==(const JumpOp &o) const {
    return tag == o.tag && coord == o.coord && value == o.value;
  }
};

inline std::string op_name(const JumpOp &op) {
  const std::string c = std::to_string(op.coord + 1);
  switch (op.tag) {
  case JumpOp::Plus: return "plus(" + c + ")";
  case JumpOp::Minus: return "minus(" + c + ")";
  case JumpOp::Mask: return "mask(" + c + ")";
  case JumpOp::Unmask: return "unmask(" + c + "," + std::to_string(op.value) + ")";
  }
  return "?";
}

inline bool op_legal(const Space &s, const JumpOp &op) {
  if (op.coord < 0 || op.coord >= s.d) return false;
  const bool pm = op.tag == JumpOp::Plus || op.tag == JumpOp::Minus;
  if (s.kind == Kind::Masked) {
    if (pm) return false;
    return op.tag == JumpOp::Mask || (op.value >= 0 && op.value < s.m);
  }
  return pm;
}

inline bool in_domain(const Space &s, const State &x) {
  if (static_cast<int>(x.size()) != s.d) return false;
  for (int v : x)
    if (v < 0 || v >= s.radix()) return false;
  return true;
}

inline std::uint64_t encode(const Space &s, const State &x) {
  if (!in_domain(s, x)) throw domain_error("state outside the space domain");
  std::uint64_t idx = 0;
  const auto r = static_cast<std::uint64_t>(s.radix());
  for (int v : x) idx = idx * r + static_cast<std::uint64_t>(v);
  return idx;
}

inline State decode(const Space &s, std::uint64_t idx) {
  if (idx >= s.size()) throw domain_error("index outside the enumeration");
  State x(static_cast<std::size_t>(s.d));
  const auto r = static_cast<std::uint64_t>(s.radix());
  for (int i = s.d - 1; i >= 0; --i) {
    x[static_cast<std::size_t>(i)] = static_cast<int>(idx % r);
    idx /= r;
  }
  return x;
}

inline int coord_of(const Space &s, std::uint64_t idx, int coord) {
  return static_cast<int>((idx / s.stride(coord)) % static_cast<std::uint64_t>(s.radix()));
}

// New value of the touched coordinate, or nullopt when the op is not defined at v.
inline std::optional<int> apply_to_coord(const Space &s, int v, const JumpOp &op) {
  switch (s.kind) {
  case Kind::RW:
    if (op.tag == JumpOp::Plus) return (v + 1) % s.m;
    return (v + s.m - 1) % s.m;
  case Kind::BRW:
    if (op.tag == JumpOp::Plus) return v < s.cap ? std::optional<int>(v + 1) : std::nullopt;
    return v > 0 ? std::optional<int>(v - 1) : std::nullopt;
  case Kind::Masked:
    if (op.tag == JumpOp::Mask) return v != s.mask() ? std::optional<int>(s.mask()) : std::nullopt;
    return v == s.mask() ? std::optional<int>(op.value) : std::nullopt;
  }
  return std::nullopt;
}

inline std::optional<State> apply_op(const Space &s, const State &x, const JumpOp &op) {
  if (!op_legal(s, op)) throw usage_error("jump operator not legal for this space kind");
  if (!in_domain(s, x)) throw domain_error("state outside the space domain");
  auto nv = apply_to_coord(s, x[static_cast<std::size_t>(op.coord)], op);
  if (!nv) return std::nullopt;
  State y = x;
  y[static_cast<std::size_t>(op.coord)] = *nv;
  return y;
}

// Index form of apply_op; op must be legal.
inline std::optional<std::uint64_t> apply_op_index(const Space &s, std::uint64_t idx,
                                                   const JumpOp &op) {
  const int v = coord_of(s, idx, op.coord);
  auto nv = apply_to_coord(s, v, op);
  if (!nv) return std::nullopt;
  const std::uint64_t st = s.stride(op.coord);
  return idx - static_cast<std::uint64_t>(v) * st + static_cast<std::uint64_t>(*nv) * st;
}

inline std::pair<std::vector<int>, std::vector<int>> masked_sets(const Space &s,
                                                                const State &x) {
  if (s.kind != Kind::Masked) throw usage_error("masked_sets needs a masked space");
  if (!in_domain(s, x)) throw domain_error("state outside the space domain");
  std::vector<int> M, Mc;
  for (int i = 0; i < s.d; ++i)
    (x[static_cast<std::size_t>(i)] == s.mask() ? M : Mc).push_back(i);
  return {M, Mc};
}

inline int num_masked(const Space &s, std::uint64_t idx) {
  int n = 0;
  for (int i = 0; i < s.d; ++i) n += coord_of(s, idx, i) == s.mask();
  return n;
}

// Forward jump set: Plus/Minus per coordinate (RW, BRW); Mask per coordinate (Masked).
inline std::vector<JumpOp> forward_ops(const Space &s) {
  std::vector<JumpOp> ops;
  for (int l = 0; l < s.d; ++l) {
    if (s.kind == Kind::Masked) {
      ops.push_back(JumpOp::mask(l));
    } else {
      ops.push_back(JumpOp::plus(l));
      ops.push_back(JumpOp::minus(l));
    }
  }
  return ops;
}

// Backward jump set: same as forward for RW/BRW; Unmask(i, j) for Masked.
inline std::vector<JumpOp> backward_ops(const Space &s) {
  if (s.kind != Kind::Masked) return forward_ops(s);
  std::vector<JumpOp> ops;
  for (int i = 0; i < s.d; ++i)
    for (int j = 0; j < s.m; ++j) ops.push_back(JumpOp::unmask(i, j));
  return ops;
}

} // namespace ddm
