#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dtnmc {

// c_i - c_j < d or <= d, packed as 2d+1 for non-strict and 2d for strict
class Bound {
public:
  static constexpr std::int64_t inf_raw = std::numeric_limits<std::int64_t>::max();

  constexpr Bound() : raw_(inf_raw) {}
  static constexpr Bound from_raw(std::int64_t r) { Bound b; b.raw_ = r; return b; }
  static constexpr Bound le(std::int64_t d) { return from_raw(d * 2 + 1); }
  static constexpr Bound lt(std::int64_t d) { return from_raw(d * 2); }
  static constexpr Bound infinity() { return Bound(); }
  static constexpr Bound zero() { return le(0); }

  constexpr bool is_inf() const { return raw_ == inf_raw; }
  constexpr bool strict() const { return (raw_ & 1) == 0; }
  constexpr std::int64_t value() const { return raw_ >> 1; }
  constexpr std::int64_t raw() const { return raw_; }

  constexpr Bound operator+(Bound o) const {
    if (is_inf() || o.is_inf())
      return infinity();
    return from_raw(((value() + o.value()) << 1) | (raw_ & o.raw_ & 1));
  }
  constexpr Bound shifted(std::int64_t k) const {
    return is_inf() ? *this : from_raw(raw_ + 2 * k);
  }

  constexpr auto operator<=>(const Bound &) const = default;

  std::string to_string() const {
    if (is_inf())
      return "<inf";
    return (strict() ? "<" : "<=") + std::to_string(value());
  }

private:
  std::int64_t raw_;
};

inline std::ostream &operator<<(std::ostream &os, Bound b) { return os << b.to_string(); }

// Difference bound matrix over dim-1 clocks, index 0 is the zero reference
class Dbm {
public:
  Dbm() = default;
  explicit Dbm(std::size_t dim) : dim_(dim), m_(dim * dim, Bound::infinity()) {
    for (std::size_t i = 0; i < dim; ++i) {
      at(i, i) = Bound::zero();
      at(0, i) = Bound::zero();
    }
  }

  static Dbm universal(std::size_t dim) { return Dbm(dim); }

  static Dbm zero(std::size_t dim) {
    Dbm d(dim);
    std::fill(d.m_.begin(), d.m_.end(), Bound::zero());
    return d;
  }

  std::size_t dim() const { return dim_; }
  std::size_t clocks() const { return dim_ == 0 ? 0 : dim_ - 1; }

  Bound &at(std::size_t i, std::size_t j) { return m_[i * dim_ + j]; }
  Bound at(std::size_t i, std::size_t j) const { return m_[i * dim_ + j]; }
  Bound operator()(std::size_t i, std::size_t j) const { return at(i, j); }

  bool empty() const { return empty_; }

  // Floyd-Warshall tightening; returns false and marks empty on a negative cycle
  bool canonicalize() {
    if (empty_)
      return false;
    for (std::size_t k = 0; k < dim_; ++k)
      for (std::size_t i = 0; i < dim_; ++i) {
        Bound ik = at(i, k);
        if (ik.is_inf())
          continue;
        for (std::size_t j = 0; j < dim_; ++j) {
          Bound s = ik + at(k, j);
          if (s < at(i, j))
            at(i, j) = s;
        }
      }
    for (std::size_t i = 0; i < dim_; ++i)
      if (at(i, i) < Bound::zero()) {
        empty_ = true;
        return false;
      }
    return true;
  }

  // tighten a single entry and restore canonical form in O(dim^2)
  bool constrain(std::size_t i, std::size_t j, Bound b) {
    if (empty_)
      return false;
    if (!(b < at(i, j)))
      return true;
    if ((b + at(j, i)) < Bound::zero()) {
      empty_ = true;
      return false;
    }
    at(i, j) = b;
    for (std::size_t x = 0; x < dim_; ++x) {
      Bound xi = at(x, i);
      if (xi.is_inf())
        continue;
      for (std::size_t y = 0; y < dim_; ++y) {
        Bound s = xi + b + at(j, y);
        if (s < at(x, y))
          at(x, y) = s;
      }
    }
    return true;
  }

  bool intersect(const Dbm &o) {
    assert(o.dim_ == dim_);
    if (o.empty_)
      empty_ = true;
    if (empty_)
      return false;
    bool changed = false;
    for (std::size_t k = 0; k < m_.size(); ++k)
      if (o.m_[k] < m_[k]) {
        m_[k] = o.m_[k];
        changed = true;
      }
    return changed ? canonicalize() : true;
  }

  // delay closure
  void up() {
    for (std::size_t i = 1; i < dim_; ++i)
      at(i, 0) = Bound::infinity();
  }

  void reset(std::size_t x, std::int64_t value = 0) {
    for (std::size_t j = 0; j < dim_; ++j) {
      at(x, j) = at(0, j).shifted(value);
      at(j, x) = at(j, 0).shifted(-value);
    }
    at(x, x) = Bound::zero();
  }

  void free(std::size_t x) {
    for (std::size_t j = 0; j < dim_; ++j)
      if (j != x) {
        at(x, j) = Bound::infinity();
        at(j, x) = at(j, 0);
      }
    at(0, x) = Bound::zero();
  }

  // substitute x := x' + k, an exact translation of clock x
  void translate(std::size_t x, std::int64_t k) {
    for (std::size_t j = 0; j < dim_; ++j)
      if (j != x) {
        at(x, j) = at(x, j).shifted(k);
        at(j, x) = at(j, x).shifted(-k);
      }
  }

  Dbm eliminate(std::size_t x) const {
    assert(x > 0 && x < dim_);
    Dbm r(dim_ - 1);
    r.empty_ = empty_;
    for (std::size_t i = 0, ri = 0; i < dim_; ++i) {
      if (i == x)
        continue;
      for (std::size_t j = 0, rj = 0; j < dim_; ++j) {
        if (j == x)
          continue;
        r.at(ri, rj) = at(i, j);
        ++rj;
      }
      ++ri;
    }
    return r;
  }

  // keep the listed clocks (indices into this dbm, 1-based) in the given order
  Dbm project(const std::vector<std::size_t> &keep) const {
    Dbm r(keep.size() + 1);
    r.empty_ = empty_;
    auto src = [&](std::size_t k) { return k == 0 ? std::size_t{0} : keep[k - 1]; };
    for (std::size_t i = 0; i < r.dim_; ++i)
      for (std::size_t j = 0; j < r.dim_; ++j)
        r.at(i, j) = at(src(i), src(j));
    return r;
  }

  // result clock k (1-based) is this clock perm[k-1]
  Dbm permuted(const std::vector<std::size_t> &perm) const { return project(perm); }

  bool includes(const Dbm &o) const {
    if (o.empty_)
      return true;
    if (empty_)
      return false;
    for (std::size_t k = 0; k < m_.size(); ++k)
      if (m_[k] < o.m_[k])
        return false;
    return true;
  }

  const std::vector<Bound> &raw() const { return m_; }

  bool operator==(const Dbm &o) const {
    return dim_ == o.dim_ && empty_ == o.empty_ && m_ == o.m_;
  }
  bool operator<(const Dbm &o) const {
    if (dim_ != o.dim_)
      return dim_ < o.dim_;
    if (empty_ != o.empty_)
      return empty_ < o.empty_;
    return std::lexicographical_compare(
        m_.begin(), m_.end(), o.m_.begin(), o.m_.end(),
        [](Bound a, Bound b) { return a.raw() < b.raw(); });
  }

  std::size_t hash() const {
    std::size_t h = dim_ * 0x9e3779b97f4a7c15ULL;
    for (Bound b : m_)
      h = (h ^ static_cast<std::size_t>(b.raw())) * 0x100000001b3ULL + (h >> 29);
    return h;
  }

  void append_bytes(std::string &out) const {
    out.push_back(static_cast<char>(dim_));
    for (Bound b : m_) {
      std::int64_t r = b.raw();
      out.append(reinterpret_cast<const char *>(&r), sizeof r);
    }
  }

  // constraint list in the DSL atom syntax
  std::string to_string(const std::vector<std::string> &names) const;

private:
  std::size_t dim_ = 0;
  std::vector<Bound> m_;
  bool empty_ = false;
};

struct DbmHash {
  std::size_t operator()(const Dbm &d) const { return d.hash(); }
};

namespace detail {

inline const char *upper_op(Bound b) { return b.strict() ? "<" : "<="; }
inline const char *lower_op(Bound b) { return b.strict() ? ">" : ">="; }

} // namespace detail

// non-redundant constraints of a canonical DBM: unary bounds, then differences not implied by them
struct DbmAtom {
  std::size_t i = 0, j = 0;
  // c_i - c_j == value instead of the bound
  bool equality = false;
  Bound bound;
};

inline std::vector<DbmAtom> dbm_atoms(const Dbm &d) {
  std::vector<DbmAtom> out;
  const std::size_t n = d.dim();
  for (std::size_t i = 1; i < n; ++i) {
    Bound lo = d.at(0, i), hi = d.at(i, 0);
    if (!hi.is_inf() && !lo.strict() && !hi.strict() && -lo.value() == hi.value()) {
      out.push_back({i, 0, true, hi});
      continue;
    }
    if (lo != Bound::zero())
      out.push_back({0, i, false, lo});
    if (!hi.is_inf())
      out.push_back({i, 0, false, hi});
  }
  auto needed = [&](std::size_t i, std::size_t j) {
    Bound b = d.at(i, j);
    return !b.is_inf() && b != d.at(i, 0) + d.at(0, j);
  };
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Bound b = d.at(i, j), back = d.at(j, i);
      bool bi = needed(i, j), bj = needed(j, i);
      if (bi && bj && !b.strict() && !back.strict() && back.value() == -b.value()) {
        out.push_back({i, j, true, b});
        continue;
      }
      if (bi)
        out.push_back({i, j, false, b});
      if (bj)
        out.push_back({j, i, false, back});
    }
  return out;
}

inline std::string Dbm::to_string(const std::vector<std::string> &names) const {
  if (empty_)
    return "false";
  auto name = [&](std::size_t i) {
    return i - 1 < names.size() ? names[i - 1] : "x" + std::to_string(i);
  };
  std::string out;
  auto push = [&](const std::string &s) { out += (out.empty() ? "" : " && ") + s; };
  auto plus = [](std::int64_t v) { return v == 0 ? std::string() : " + " + std::to_string(v); };
  for (const auto &a : dbm_atoms(*this)) {
    std::int64_t v = a.bound.value();
    if (a.j == 0) {
      push(name(a.i) + (a.equality ? " == " : std::string(" ") + detail::upper_op(a.bound) + " ") +
           std::to_string(v));
    } else if (a.i == 0) {
      push(name(a.j) + " " + detail::lower_op(a.bound) + " " + std::to_string(-v));
    } else if (a.equality) {
      if (v >= 0)
        push(name(a.i) + " == " + name(a.j) + plus(v));
      else
        push(name(a.j) + " == " + name(a.i) + plus(-v));
    } else if (v >= 0) {
      push(name(a.i) + " " + detail::upper_op(a.bound) + " " + name(a.j) + plus(v));
    } else {
      push(name(a.j) + " " + detail::lower_op(a.bound) + " " + name(a.i) + plus(-v));
    }
  }
  return out.empty() ? "true" : out;
}

inline std::ostream &operator<<(std::ostream &os, const Dbm &d) { return os << d.to_string({}); }

} // namespace dtnmc

template <> struct std::hash<dtnmc::Dbm> {
  std::size_t operator()(const dtnmc::Dbm &d) const { return d.hash(); }
};
