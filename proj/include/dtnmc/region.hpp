#pragma once

#include <numeric>
#include <optional>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "dbm.hpp"
#include "model.hpp"

namespace dtnmc {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<std::int64_t>;

class PreconditionError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// clock values num[i] / den
struct Valuation {
  std::vector<std::int64_t> num;
  std::int64_t den = 1;

  Valuation() = default;
  explicit Valuation(std::size_t n) : num(n, 0) {}

  static Valuation from_rationals(const std::vector<Rational> &v) {
    Valuation out(v.size());
    std::int64_t d = 1;
    for (const auto &x : v)
      d = std::lcm(d, x.denominator());
    out.den = d;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.num[i] = x_times(v[i], d);
    return out;
  }

  Rational value(std::size_t i) const { return Rational(num[i], den); }
  std::size_t size() const { return num.size(); }

  void scale(std::int64_t k) {
    for (auto &x : num)
      x *= k;
    den *= k;
  }

  void reduce() {
    std::int64_t g = den;
    for (auto x : num)
      g = std::gcd(g, x);
    if (g > 1) {
      for (auto &x : num)
        x /= g;
      den /= g;
    }
  }

  bool operator==(const Valuation &) const = default;

private:
  static std::int64_t x_times(const Rational &r, std::int64_t d) {
    return r.numerator() * (d / r.denominator());
  }
};

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

inline bool compare(std::int64_t lhs, Op op, std::int64_t rhs) {
  switch (op) {
  case Op::lt: return lhs < rhs;
  case Op::le: return lhs <= rhs;
  case Op::eq: return lhs == rhs;
  case Op::ge: return lhs >= rhs;
  case Op::gt: return lhs > rhs;
  }
  return false;
}

// clocks of the constraint live at num[offset + clock]
inline bool satisfies(const Valuation &v, const ClockConstraint &g, std::size_t offset = 0) {
  for (const auto &a : g.conjuncts) {
    std::int64_t lhs = v.num[offset + a.clock];
    if (a.other)
      lhs -= v.num[offset + *a.other];
    if (!compare(lhs, a.op, a.constant * v.den))
      return false;
  }
  return true;
}

// intersect a DBM with a clock constraint; dbm index of clock c is offset + c + 1
inline bool constrain(Dbm &d, const ClockConstraint &g, std::size_t offset = 0) {
  for (const auto &a : g.conjuncts) {
    std::size_t i = offset + a.clock + 1;
    std::size_t j = a.other ? offset + *a.other + 1 : 0;
    std::int64_t k = a.constant;
    switch (a.op) {
    case Op::lt: d.constrain(i, j, Bound::lt(k)); break;
    case Op::le: d.constrain(i, j, Bound::le(k)); break;
    case Op::eq:
      d.constrain(i, j, Bound::le(k));
      d.constrain(j, i, Bound::le(-k));
      break;
    case Op::ge: d.constrain(j, i, Bound::le(-k)); break;
    case Op::gt: d.constrain(j, i, Bound::lt(-k)); break;
    }
    if (d.empty())
      return false;
  }
  return true;
}

struct RegionContext {
  std::vector<std::int64_t> bound;
  // clocks in the same non-negative group track differences up to diag_bound
  std::vector<int> group;
  std::int64_t diag_bound = -1;
  std::optional<std::size_t> global;

  std::size_t clocks() const { return bound.size(); }

  bool bounded(const Valuation &v, std::size_t i) const { return v.num[i] <= bound[i] * v.den; }
};

namespace region_detail {

inline void unit_interval(Dbm &r, std::size_t i, std::size_t j, std::int64_t diff, std::int64_t den) {
  if (diff % den == 0) {
    r.at(i, j) = Bound::le(diff / den);
    r.at(j, i) = Bound::le(-diff / den);
  } else {
    r.at(i, j) = Bound::lt(ceil_div(diff, den));
    r.at(j, i) = Bound::lt(-floor_div(diff, den));
  }
}

} // namespace region_detail

inline Dbm region_of(const Valuation &v, const RegionContext &ctx) {
  const std::size_t n = ctx.clocks();
  Dbm r(n + 1);
  std::vector<bool> bnd(n);
  for (std::size_t i = 0; i < n; ++i) {
    bnd[i] = ctx.bounded(v, i);
    if (bnd[i])
      region_detail::unit_interval(r, i + 1, 0, v.num[i], v.den);
    else
      r.at(0, i + 1) = Bound::lt(-ctx.bound[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      std::int64_t diff = v.num[i] - v.num[j];
      if (bnd[i] && bnd[j]) {
        region_detail::unit_interval(r, i + 1, j + 1, diff, v.den);
      } else if (ctx.diag_bound >= 0 && !ctx.group.empty() && ctx.group[i] >= 0 &&
                 ctx.group[i] == ctx.group[j]) {
        std::int64_t b = ctx.diag_bound;
        if (diff > b * v.den)
          r.at(j + 1, i + 1) = Bound::lt(-b);
        else if (diff < -b * v.den)
          r.at(i + 1, j + 1) = Bound::lt(-b);
        else
          region_detail::unit_interval(r, i + 1, j + 1, diff, v.den);
      }
    }
  r.canonicalize();
  return r;
}

// a point of the DBM with denominator dim
inline Valuation sample(const Dbm &z) {
  if (z.empty())
    throw PreconditionError("sample of an empty DBM");
  const std::size_t dim = z.dim();
  const std::int64_t s = static_cast<std::int64_t>(dim);
  Dbm w(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      Bound b = z.at(i, j);
      if (b.is_inf())
        w.at(i, j) = b;
      else
        w.at(i, j) = Bound::le(b.value() * s - (b.strict() ? 1 : 0));
    }
  if (!w.canonicalize())
    throw PreconditionError("sample: scaled DBM is empty");
  Valuation v(dim - 1);
  v.den = s;
  for (std::size_t i = 1; i < dim; ++i) {
    std::int64_t lo = -w.at(0, i).value();
    Bound hb = w.at(i, 0);
    std::int64_t x = hb.is_inf() ? lo + s : lo + (hb.value() - lo) / 2;
    w.constrain(i, 0, Bound::le(x));
    w.constrain(0, i, Bound::le(-x));
    v.num[i - 1] = x;
  }
  return v;
}

inline bool contains(const Dbm &z, const Valuation &v) {
  auto val = [&](std::size_t i) { return i == 0 ? std::int64_t{0} : v.num[i - 1]; };
  for (std::size_t i = 0; i < z.dim(); ++i)
    for (std::size_t j = 0; j < z.dim(); ++j) {
      Bound b = z.at(i, j);
      if (b.is_inf())
        continue;
      std::int64_t lhs = val(i) - val(j), rhs = b.value() * v.den;
      if (b.strict() ? !(lhs < rhs) : !(lhs <= rhs))
        return false;
    }
  return true;
}

// a point of the immediate time successor region of region_of(v), or nullopt when maximal
inline std::optional<Valuation> time_successor_point(Valuation v, const RegionContext &ctx) {
  v.scale(2);
  std::int64_t d = v.den;
  bool any = false, zero_frac = false;
  std::int64_t min_dist = d;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!ctx.bounded(v, i))
      continue;
    any = true;
    std::int64_t f = v.num[i] % d;
    if (f == 0)
      zero_frac = true;
    else
      min_dist = std::min(min_dist, d - f);
  }
  if (!any)
    return std::nullopt;
  std::int64_t delta = zero_frac ? min_dist / 2 : min_dist;
  for (auto &x : v.num)
    x += delta;
  v.reduce();
  return v;
}

// time-open: some positive delay stays inside the region
inline bool time_open(const Valuation &v, const RegionContext &ctx) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (ctx.bounded(v, i) && v.num[i] % v.den == 0)
      return false;
  return true;
}

// slots

struct Slot {
  enum class Kind { point, open, unbounded };
  Kind kind = Kind::point;
  BigInt m = 0;

  static Slot point(BigInt k) { return {Kind::point, std::move(k)}; }
  static Slot open(BigInt k) { return {Kind::open, std::move(k)}; }
  static Slot unbounded(BigInt k) { return {Kind::unbounded, std::move(k)}; }

  bool singleton() const { return kind == Kind::point; }

  Slot shifted(const BigInt &k) const { return {kind, m + k}; }

  bool operator==(const Slot &o) const { return kind == o.kind && m == o.m; }
  bool operator<(const Slot &o) const {
    if (m != o.m)
      return m < o.m;
    return static_cast<int>(kind) < static_cast<int>(o.kind);
  }

  std::string to_string() const {
    switch (kind) {
    case Kind::point: return "[" + m.str() + "," + m.str() + "]";
    case Kind::open: return "(" + m.str() + "," + BigInt(m + 1).str() + ")";
    case Kind::unbounded: return "(" + m.str() + ",inf)";
    }
    return "?";
  }
};

inline Slot slot_of(const Dbm &r, std::size_t t_clock) {
  std::size_t t = t_clock + 1;
  if (t >= r.dim())
    throw PreconditionError("slot_of: region has no global clock");
  Bound lo = r.at(0, t), hi = r.at(t, 0);
  std::int64_t l = -lo.value();
  if (hi.is_inf())
    return Slot::unbounded(l);
  if (!lo.strict() && !hi.strict() && hi.value() == l)
    return Slot::point(l);
  return Slot::open(l);
}

inline Slot next_slot(const Slot &s, const BigInt &tmax) {
  switch (s.kind) {
  case Slot::Kind::open: return Slot::point(s.m + 1);
  case Slot::Kind::point: return s.m < tmax ? Slot::open(s.m) : Slot::unbounded(s.m);
  case Slot::Kind::unbounded: return s;
  }
  return s;
}

inline bool is_proper(const Dbm &r, std::size_t t_clock) {
  std::size_t t = t_clock + 1;
  for (std::size_t c = 1; c < r.dim(); ++c) {
    if (c == t)
      continue;
    if (r.at(t, c) != r.at(t, 0) + r.at(0, c))
      return false;
    if (r.at(c, t) != r.at(c, 0) + r.at(0, t))
      return false;
  }
  return true;
}

inline Dbm shift_slot(const Dbm &r, std::size_t t_clock, std::int64_t k, const BigInt &tmax) {
  if (!is_proper(r, t_clock))
    throw PreconditionError("shift_slot: region is not proper");
  Slot s = slot_of(r, t_clock);
  if (s.kind == Slot::Kind::unbounded)
    throw PreconditionError("shift_slot: unbounded slot");
  BigInt sup = s.kind == Slot::Kind::point ? s.m : BigInt(s.m + 1);
  if (s.m + k < 0 || sup + k > tmax)
    throw PreconditionError("shift_slot: shifted slot out of range");
  std::size_t t = t_clock + 1;
  Dbm out = r;
  for (std::size_t c = 1; c < r.dim(); ++c)
    if (c != t) {
      out.at(t, c) = Bound::infinity();
      out.at(c, t) = Bound::infinity();
    }
  out.at(t, 0) = out.at(t, 0).shifted(k);
  out.at(0, t) = out.at(0, t).shifted(-k);
  out.canonicalize();
  return out;
}

inline Dbm eliminate_clock(const Dbm &r, std::size_t clock) { return r.eliminate(clock + 1); }

inline ClockConstraint to_constraint(const Dbm &d) {
  ClockConstraint g;
  for (const auto &a : dbm_atoms(d)) {
    std::int64_t v = a.bound.value();
    Atom at;
    if (a.j == 0) {
      at.clock = a.i - 1;
      at.op = a.equality ? Op::eq : (a.bound.strict() ? Op::lt : Op::le);
      at.constant = v;
    } else if (a.i == 0) {
      at.clock = a.j - 1;
      at.op = a.bound.strict() ? Op::gt : Op::ge;
      at.constant = -v;
    } else {
      bool flip = v < 0;
      at.clock = (flip ? a.j : a.i) - 1;
      at.other = (flip ? a.i : a.j) - 1;
      at.constant = flip ? -v : v;
      if (a.equality)
        at.op = Op::eq;
      else if (flip)
        at.op = a.bound.strict() ? Op::gt : Op::ge;
      else
        at.op = a.bound.strict() ? Op::lt : Op::le;
    }
    g.conjuncts.push_back(at);
  }
  return g;
}

// zone successors

inline Dbm zone_post_delay(Dbm z, const ClockConstraint &invariant, std::size_t offset = 0) {
  z.up();
  constrain(z, invariant, offset);
  return z;
}

inline Dbm zone_post_trans(Dbm z, const Transition &tr, const ClockConstraint &target_invariant,
                           std::size_t offset = 0) {
  if (!constrain(z, tr.guard, offset))
    return z;
  for (auto c : tr.resets)
    z.reset(offset + c + 1);
  constrain(z, target_invariant, offset);
  return z;
}

} // namespace dtnmc
